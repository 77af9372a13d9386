use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sketchgc::sketching::{make_projection, SamplingPlan};
use sketchgc::solver::{descent_step_bound, sketch_and_solve, IterTrace, Problem, SketchConfig, StepPolicy};
use sketchgc::linalg::sub_vec;
use sketchgc::DenseMatrix;

use crate::config::{ExperimentConfig, Method, StepKind};
use crate::data::generate;
use crate::error::{CliError, Result};
use crate::output::write_with;

const PLAN_STREAM: u64 = 0x706c_616e;
const X0_STREAM: u64 = 0x7830;

#[derive(Clone, Debug)]
pub struct RunResult {
    pub method: Method,
    pub seed: u64,
    pub logical_n: usize,
    pub padded_n: usize,
    pub trace: IterTrace,
}

impl RunResult {
    pub fn final_log_err(&self) -> f64 {
        self.trace.final_log_err().unwrap_or(f64::NAN)
    }

    pub fn final_residual(&self) -> f64 {
        self.trace.records.last().map_or(f64::NAN, |r| r.residual)
    }

    pub fn trace_name(&self) -> String {
        format!("{}.seed{}.csv", self.method, self.seed)
    }
}

fn policy(cfg: &ExperimentConfig, method: Method, a: &DenseMatrix) -> StepPolicy {
    let base = || cfg.step.scale * descent_step_bound(a);
    match (cfg.step.policy, method) {
        (StepKind::Adaptive, _) => StepPolicy::Adaptive,
        (StepKind::Fixed, _) | (StepKind::Unbiased, Method::Sd) => StepPolicy::Fixed(base()),
        (StepKind::Unbiased, _) => StepPolicy::unbiased(base(), cfg.k, cfg.q),
    }
}

/// One `(method, seed)` run on an already generated instance.
pub fn run_one(
    cfg: &ExperimentConfig,
    method: Method,
    seed: u64,
    a: &DenseMatrix,
    b: &[f64],
) -> Result<RunResult> {
    let n = a.rows();
    let padded_n = method.padded_dim(n);
    let mut pb = b.to_vec();
    pb.resize(padded_n, 0.0);
    let problem = Problem::new(a.pad_rows(padded_n), pb)?.with_logical_n(n);
    let x0: Vec<f64> = if cfg.x0_scale > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ X0_STREAM);
        (0..cfg.d)
            .map(|_| cfg.x0_scale * rng.sample::<f64, _>(StandardNormal))
            .collect()
    } else {
        vec![0.0; cfg.d]
    };
    let plan_seed = seed ^ PLAN_STREAM;
    let trace = match method {
        Method::Sd => problem.run_sd(&x0, policy(cfg, method, a), cfg.iters)?,
        Method::Iterative(kind) => {
            let proj = make_projection(kind, padded_n, seed)?;
            let sc = SketchConfig::new(cfg.k, cfg.q, plan_seed).with_mode(cfg.sampling.into());
            problem.run_iterative_sketch(&x0, &proj, &sc, policy(cfg, method, a), cfg.iters)?
        }
        Method::SketchAndSolve(kind) => {
            let proj = make_projection(kind, padded_n, seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(plan_seed);
            let plan = SamplingPlan::without_replacement(cfg.k, cfg.q, &mut rng)?;
            let x_hat = sketch_and_solve(problem.a(), problem.b(), &proj, &plan)?;
            // a single unit step from x0 onto the sketched solution
            problem.run_with(&x0, StepPolicy::Fixed(1.0), 1, |x, _| {
                Ok((sub_vec(x, &x_hat), plan.indices().to_vec()))
            })?
        }
    };
    Ok(RunResult {
        method,
        seed,
        logical_n: n,
        padded_n,
        trace,
    })
}

/// Runs every `(method, seed)` pair on `jobs` threads; results follow seed
/// order, then method order.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let instances = cfg
        .seeds
        .iter()
        .map(|&s| generate(&cfg.data, cfg.n, cfg.d, s))
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, Method)> = (0..cfg.seeds.len())
        .flat_map(|i| cfg.methods.iter().map(move |&m| (i, m)))
        .collect();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunResult>>>> =
        Mutex::new((0..tasks.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, tasks.len().max(1)) {
            scope.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, m)) = tasks.get(t) else { break };
                let (a, b) = &instances[i];
                let r = run_one(cfg, m, cfg.seeds[i], a, b);
                slots.lock().expect("worker panicked")[t] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every task ran"))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub logical_n: usize,
    pub padded_n: usize,
    pub runs: usize,
    pub mean_final_log_err: f64,
    pub std_final_log_err: f64,
    pub mean_final_residual: f64,
    pub diverged: usize,
}

pub fn summarize(results: &[RunResult]) -> Vec<SummaryRow> {
    let mut order = Vec::new();
    let mut groups: HashMap<Method, Vec<&RunResult>> = HashMap::new();
    for r in results {
        if !groups.contains_key(&r.method) {
            order.push(r.method);
        }
        groups.entry(r.method).or_default().push(r);
    }
    order
        .into_iter()
        .map(|m| {
            let rs = &groups[&m];
            let n = rs.len() as f64;
            let errs: Vec<f64> = rs.iter().map(|r| r.final_log_err()).collect();
            let mean = errs.iter().sum::<f64>() / n;
            let var = if rs.len() > 1 {
                errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            SummaryRow {
                method: m,
                logical_n: rs[0].logical_n,
                padded_n: rs[0].padded_n,
                runs: rs.len(),
                mean_final_log_err: mean,
                std_final_log_err: var.sqrt(),
                mean_final_residual: rs.iter().map(|r| r.final_residual()).sum::<f64>() / n,
                diverged: rs.iter().filter(|r| r.trace.diverged).count(),
            }
        })
        .collect()
}

pub const SUMMARY_HEADER: &str =
    "method,logical_n,padded_n,runs,mean_final_log_err,std_final_log_err,mean_final_residual,diverged";

pub fn write_summary<W: Write>(rows: &[SummaryRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.method,
            r.logical_n,
            r.padded_n,
            r.runs,
            r.mean_final_log_err,
            r.std_final_log_err,
            r.mean_final_residual,
            r.diverged
        )?;
    }
    Ok(())
}

/// Writes `traces/<method>.seed<s>.csv` and `summary.csv` under `dir`.
pub fn write_outputs(results: &[RunResult], dir: &Path) -> Result<Vec<SummaryRow>> {
    for r in results {
        let path = dir.join("traces").join(r.trace_name());
        write_with(&path, |w| r.trace.write_csv(w).map_err(std::io::Error::other))?;
    }
    let rows = summarize(results);
    write_with(&dir.join("summary.csv"), |w| write_summary(&rows, w))?;
    Ok(rows)
}

pub fn require_output(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<std::path::PathBuf> {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| CliError::config("no output directory (use --out or `output`)"))
}
