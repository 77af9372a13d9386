use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use sketchgc::sketching::{ProjectionKind, SamplingMode};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Full-gradient steepest descent on the plaintext system.
    Sd,
    /// Iterative sketching with a fresh plan every epoch.
    Iterative(ProjectionKind),
    /// One sketched solve with a single plan.
    SketchAndSolve(ProjectionKind),
}

impl Method {
    pub fn kind(self) -> Option<ProjectionKind> {
        match self {
            Self::Sd => None,
            Self::Iterative(k) | Self::SketchAndSolve(k) => Some(k),
        }
    }

    /// Rows after zero padding for this method's transform.
    pub fn padded_dim(self, n: usize) -> usize {
        self.kind().map_or(n, |k| k.padded_dim(n))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sd => f.write_str("sd"),
            Self::Iterative(k) => write!(f, "{k}"),
            Self::SketchAndSolve(k) => write!(f, "sas-{k}"),
        }
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |k: &str| {
            k.parse::<ProjectionKind>()
                .map_err(|_| CliError::config(format!("unknown method {s:?}")))
        };
        Ok(match s {
            "sd" => Self::Sd,
            _ => match s.strip_prefix("sas-") {
                Some(k) => Self::SketchAndSolve(parse(k)?),
                None => Self::Iterative(parse(s)?),
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataModel {
    Gaussian,
    /// Student-t entries; heavy tails give non-uniform leverage.
    T { dof: f64 },
    /// CSV files without header; `b` is a single column.
    File { a: PathBuf, b: PathBuf },
}

impl Default for DataModel {
    fn default() -> Self {
        Self::T { dof: 3.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Adaptive,
    /// `scale / σ²max`.
    Fixed,
    /// `scale / σ²max · K/q`; plain `scale / σ²max` for SD.
    Unbiased,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub policy: StepKind,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            policy: StepKind::Adaptive,
            scale: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    #[default]
    WithReplacement,
    WithoutReplacement,
}

impl From<Sampling> for SamplingMode {
    fn from(s: Sampling) -> Self {
        match s {
            Sampling::WithReplacement => SamplingMode::WithReplacement,
            Sampling::WithoutReplacement => SamplingMode::WithoutReplacement,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: usize,
    d: usize,
    k: usize,
    q: usize,
    iters: usize,
    methods: Vec<String>,
    #[serde(default)]
    step: StepConfig,
    #[serde(default)]
    sampling: Sampling,
    #[serde(default = "default_seeds")]
    seeds: Vec<u64>,
    #[serde(default)]
    data: DataModel,
    #[serde(default)]
    x0_scale: f64,
    output: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// A validated experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub q: usize,
    pub iters: usize,
    pub methods: Vec<Method>,
    pub step: StepConfig,
    pub sampling: Sampling,
    pub seeds: Vec<u64>,
    pub data: DataModel,
    pub x0_scale: f64,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        let methods = raw
            .methods
            .iter()
            .map(|m| m.parse())
            .collect::<Result<Vec<Method>>>()?;
        let cfg = Self {
            n: raw.n,
            d: raw.d,
            k: raw.k,
            q: raw.q,
            iters: raw.iters,
            methods,
            step: raw.step,
            sampling: raw.sampling,
            seeds: raw.seeds,
            data: raw.data,
            x0_scale: raw.x0_scale,
            output: raw.output,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        // relative data paths are resolved against the config file
        if let DataModel::File { a, b } = &mut cfg.data {
            let base = path.parent().unwrap_or(Path::new("."));
            for p in [a, b] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Rejects everything that would fail a downstream precondition.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.n < 2 || self.d == 0 || self.n <= self.d {
            return fail(format!("need 2 ≤ N and 1 ≤ d < N (N={}, d={})", self.n, self.d));
        }
        if self.k == 0 || self.q == 0 || self.iters == 0 {
            return fail("K, q and iters must be positive".into());
        }
        // flatten always partitions the untransformed rows as well
        if self.k > self.n {
            return fail(format!("K={} exceeds N={}", self.k, self.n));
        }
        if self.methods.is_empty() {
            return fail("no methods".into());
        }
        if self.seeds.is_empty() {
            return fail("no seeds".into());
        }
        if !(self.step.scale > 0.0 && self.step.scale.is_finite()) {
            return fail(format!("step scale must be positive, got {}", self.step.scale));
        }
        if !(self.x0_scale >= 0.0 && self.x0_scale.is_finite()) {
            return fail(format!("x0_scale must be non-negative, got {}", self.x0_scale));
        }
        if let DataModel::T { dof } = self.data {
            if !(dof > 0.0 && dof.is_finite()) {
                return fail(format!("t dof must be positive, got {dof}"));
            }
        }
        for &m in &self.methods {
            let Some(kind) = m.kind() else { continue };
            if let ProjectionKind::Kronecker(b) = kind {
                if b < 2 {
                    return fail(format!("{m}: Kronecker base must be ≥ 2"));
                }
            }
            let n = m.padded_dim(self.n);
            if self.k > n {
                return fail(format!("{m}: K={} exceeds the {n} padded rows", self.k));
            }
            let without = matches!(m, Method::SketchAndSolve(_))
                || self.sampling == Sampling::WithoutReplacement;
            if without && self.q > self.k {
                return fail(format!("{m}: q={} exceeds K={} without replacement", self.q, self.k));
            }
            // the shortest balanced block has ⌊N/K⌋ rows
            if matches!(m, Method::SketchAndSolve(_)) && self.q * (n / self.k) <= self.d {
                return fail(format!(
                    "{m}: q·⌊N/K⌋ = {} sketched rows do not exceed d={}",
                    self.q * (n / self.k),
                    self.d
                ));
            }
        }
        if self.n > 1 << 16 {
            return fail(format!("N={} is beyond the dense transforms' reach", self.n));
        }
        Ok(())
    }

    pub fn with_seeds(mut self, seeds: Option<Vec<u64>>) -> Result<Self> {
        if let Some(s) = seeds {
            self.seeds = s;
        }
        self.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        n = 64
        d = 4
        k = 8
        q = 4
        iters = 10
        methods = ["orthonormal", "sas-block-srht", "sd"]
    "#;

    #[test]
    fn method_names_round_trip() {
        for s in ["sd", "orthonormal", "sas-garbled-block-srht", "kron-3", "gaussian"] {
            assert_eq!(s.parse::<Method>().unwrap().to_string(), s);
        }
        assert!("sas-nope".parse::<Method>().is_err());
    }

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.data, DataModel::T { dof: 3.0 });
        assert_eq!(cfg.step, StepConfig::default());
        assert_eq!(cfg.methods[1], Method::SketchAndSolve(ProjectionKind::BlockSrht));
    }

    #[test]
    fn full_example() {
        let text = format!(
            "{BASE}\nseeds = [1, 2]\nsampling = \"without-replacement\"\nx0_scale = 0.5\n\
             [step]\npolicy = \"unbiased\"\nscale = 0.5\n[data]\nmodel = \"gaussian\"\n"
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.step.policy, StepKind::Unbiased);
        assert_eq!(cfg.data, DataModel::Gaussian);
        assert_eq!(cfg.sampling, Sampling::WithoutReplacement);
    }

    #[test]
    fn rejects_violations() {
        for patch in [
            ("d = 4", "d = 64"),
            ("q = 4", "q = 0"),
            ("k = 8", "k = 200"),
            ("\"sd\"", "\"bogus\""),
            ("iters = 10", "iters = 0"),
            ("q = 4", "q = 9"),
            ("d = 4", "d = 40"),
            ("n = 64", "n = 64\nextra = 1"),
        ] {
            let text = BASE.replace(patch.0, patch.1);
            let err = ExperimentConfig::from_toml(&text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{patch:?}");
        }
    }
}
