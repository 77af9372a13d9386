use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::output::write_with;

pub const REPORT_HEADER: &str = "kind,seed,t,log_err";
const TRACE_HEADER: &str = "t,step_size,residual,log_err,grad_norm,blocks";

/// `(kind, seed)` from a `<kind>.seed<s>.csv` trace name.
pub fn parse_trace_name(path: &Path) -> Option<(String, u64)> {
    let stem = path.file_name()?.to_str()?.strip_suffix(".csv")?;
    let (kind, seed) = stem.rsplit_once(".seed")?;
    Some((kind.to_string(), seed.parse().ok()?))
}

/// Trace files named by the inputs: files directly, directories through
/// their `traces/` subdirectory (or themselves when it is absent).
pub fn collect_traces(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let dir = if p.join("traces").is_dir() { p.join("traces") } else { p.clone() };
            let mut found: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|e| CliError::io(&dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| parse_trace_name(f).is_some())
                .collect();
            found.sort();
            out.extend(found);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            return Err(CliError::Runtime(format!("{}: no such file or directory", p.display())));
        }
    }
    Ok(out)
}

/// Merges traces into the long `kind,seed,t,log_err` format.
pub fn report(inputs: &[PathBuf], out: &Path) -> Result<usize> {
    let traces = collect_traces(inputs)?;
    if traces.is_empty() {
        return Err(CliError::Runtime("no trace files to report".into()));
    }
    let mut body = Vec::new();
    writeln!(body, "{REPORT_HEADER}").map_err(|e| CliError::io(out, e))?;
    let mut rows = 0;
    for path in &traces {
        let (kind, seed) = parse_trace_name(path).ok_or_else(|| {
            CliError::Runtime(format!("{}: expected <kind>.seed<n>.csv", path.display()))
        })?;
        let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        let mut lines = BufReader::new(f).lines();
        let header = lines.next().transpose().map_err(|e| CliError::io(path, e))?;
        if header.as_deref() != Some(TRACE_HEADER) {
            return Err(CliError::Runtime(format!("{}: not a trace file", path.display())));
        }
        for line in lines {
            let line = line.map_err(|e| CliError::io(path, e))?;
            let mut fields = line.split(',');
            let (Some(t), Some(log_err)) = (fields.next(), fields.nth(2)) else {
                return Err(CliError::Runtime(format!("{}: short row {line:?}", path.display())));
            };
            writeln!(body, "{kind},{seed},{t},{log_err}").map_err(|e| CliError::io(out, e))?;
            rows += 1;
        }
    }
    write_with(out, |w| w.write_all(&body))?;
    Ok(rows)
}
