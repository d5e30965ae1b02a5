//! Batch experiments producing CSV tables and pass/fail checks.
//!
//! Each experiment reads its parameters from an [`ExperimentSpec`] (unknown
//! keys are rejected), records the resolved configuration, and returns an
//! [`ExperimentReport`]. Runs are deterministic given the spec and seed.

mod gaussian;
mod logistic;
mod mixture;
mod toy;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::engine::{ChainState, Sampler, SamplerConfig};
use crate::error::{invalid, Error, Result};
use crate::metrics::project;
use crate::model::SplitModel;
use crate::rng::{child_seed, seeded};

pub use gaussian::{d_sweep, eps_sweep, kappa_sweep, mixing_time_tv, run_gaussian_mixing, MixingConfig, MixingPoint};
pub use logistic::{run_logistic, LogisticCell};
pub use mixture::{chi2_equiprobable, run_mixture};
pub use toy::{run_bias_toy, run_rate_toy};

pub const EXPERIMENT_NAMES: [&str; 5] = ["bias-toy", "rate-toy", "gaussian-mixing", "mixture", "logistic"];

/// Name, parameter overrides, seed and output directory of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(name: &str, seed: u64) -> Self {
        ExperimentSpec { name: name.to_string(), params: BTreeMap::new(), seed, out_dir: None }
    }

    pub fn with(mut self, key: &str, value: impl Display) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }
}

/// Reads parameters with defaults and remembers the resolved values.
pub(crate) struct Params<'a> {
    spec: &'a ExperimentSpec,
    resolved: Vec<(String, String)>,
}

impl<'a> Params<'a> {
    pub(crate) fn new(spec: &'a ExperimentSpec) -> Self {
        Params { spec, resolved: vec![("seed".into(), spec.seed.to_string())] }
    }

    pub(crate) fn get<T: FromStr + Display>(&mut self, key: &'static str, default: T) -> Result<T> {
        let v = match self.spec.params.get(key) {
            Some(s) => s.parse().map_err(|_| invalid(key, format!("cannot parse {s:?}")))?,
            None => default,
        };
        self.resolved.push((key.to_string(), v.to_string()));
        Ok(v)
    }

    pub(crate) fn list<T: FromStr + Display + Clone>(&mut self, key: &'static str, default: &[T]) -> Result<Vec<T>> {
        let v: Vec<T> = match self.spec.params.get(key) {
            Some(s) => s
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| invalid(key, format!("cannot parse {x:?}"))))
                .collect::<Result<_>>()?,
            None => default.to_vec(),
        };
        if v.is_empty() {
            return Err(invalid(key, "empty list"));
        }
        let joined = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        self.resolved.push((key.to_string(), joined));
        Ok(v)
    }

    /// Fails on keys that no `get`/`list` call consumed.
    pub(crate) fn finish(self) -> Result<Vec<(String, String)>> {
        for k in self.spec.params.keys() {
            if !self.resolved.iter().any(|(r, _)| r == k) {
                return Err(invalid("param", format!("unknown parameter {k:?} for {}", self.spec.name)));
            }
        }
        Ok(self.resolved)
    }
}

/// One CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Column parsed as numbers; unparsable cells become NaN.
    pub fn numbers(&self, name: &str) -> Vec<f64> {
        match self.column(name) {
            Some(k) => self.rows.iter().map(|r| r[k].parse().unwrap_or(f64::NAN)).collect(),
            None => Vec::new(),
        }
    }
}

/// Builds a row from heterogeneous cells.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($x.to_string()),*] };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Reported but not part of the pass/fail verdict.
    pub informational: bool,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into(), informational: false }
    }

    pub fn info(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into(), informational: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub name: String,
    pub config: Vec<(String, String)>,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// True when every non-informational check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.informational)
    }
}

/// Runs the named experiment.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    match spec.name.as_str() {
        "bias-toy" => run_bias_toy(spec),
        "rate-toy" => run_rate_toy(spec),
        "gaussian-mixing" => run_gaussian_mixing(spec),
        "mixture" => run_mixture(spec),
        "logistic" => run_logistic(spec),
        other => {
            Err(invalid("experiment", format!("unknown experiment {other:?}; expected one of {EXPERIMENT_NAMES:?}")))
        }
    }
}

/// Writes one CSV per table into `dir`, each starting with `#` lines that
/// echo the experiment name and resolved configuration.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for table in &report.tables {
        let path = dir.join(format!("{}_{}.csv", report.name, table.name));
        let mut file = File::create(&path)?;
        writeln!(file, "# experiment: {}", report.name)?;
        writeln!(file, "# table: {}", table.name)?;
        for (k, v) in &report.config {
            writeln!(file, "# {k} = {v}")?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&table.columns)?;
        for r in &table.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

/// Independent chains sharing one sampler.
pub(crate) struct Ensemble {
    sampler: Sampler,
    pub(crate) chains: Vec<ChainState>,
}

impl Ensemble {
    pub(crate) fn new(model: Arc<SplitModel>, config: SamplerConfig, inits: &[Vec<f64>], seed: u64) -> Result<Self> {
        let chains = inits
            .iter()
            .enumerate()
            .map(|(k, x)| ChainState::new(&model, x, child_seed(seed, k as u64, 0)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble { sampler: Sampler::new(model, config)?, chains })
    }

    /// One sweep of every chain; returns per-chain proposal totals.
    pub(crate) fn step(&mut self) -> Result<Vec<Vec<u64>>> {
        let s = &self.sampler;
        self.chains.par_iter_mut().map(|c| s.sweep(c).map(|r| r.proposals)).collect()
    }

    pub(crate) fn project(&self, direction: &[f64]) -> Vec<f64> {
        let thetas: Vec<Vec<f64>> = self.chains.iter().map(|c| c.theta.clone()).collect();
        project(&thetas, direction)
    }
}

/// `n` draws from `N(center, scale²I)` on a dedicated stream.
pub(crate) fn gaussian_inits(n: usize, center: &[f64], scale: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(child_seed(seed, u64::MAX, 1));
    (0..n)
        .map(|_| {
            center
                .iter()
                .map(|c| {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    c + scale * xi
                })
                .collect()
        })
        .collect()
}

/// Log-spaced grid with `n` points between `lo` and `hi`.
pub(crate) fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp()).collect()
}

pub(crate) fn require(cond: bool, name: &'static str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: reason.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_resolve_and_reject_unknown_keys() {
        let spec = ExperimentSpec::new("bias-toy", 7).with("sigma", 2.5).with("grid", "1,2,3");
        let mut p = Params::new(&spec);
        assert_eq!(p.get("sigma", 3.0).unwrap(), 2.5);
        assert_eq!(p.get("b", 10usize).unwrap(), 10);
        assert_eq!(p.list("grid", &[5usize]).unwrap(), vec![1, 2, 3]);
        let cfg = p.finish().unwrap();
        assert!(cfg.contains(&("seed".into(), "7".into())));
        assert!(cfg.contains(&("b".into(), "10".into())));

        let spec = ExperimentSpec::new("bias-toy", 0).with("typo", 1);
        assert!(Params::new(&spec).finish().is_err());
        let spec = ExperimentSpec::new("bias-toy", 0).with("b", "x");
        assert!(Params::new(&spec).get("b", 1usize).is_err());
    }

    #[test]
    fn csv_has_comment_header() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(row![1, "x"]);
        let rep = ExperimentReport {
            name: "demo".into(),
            config: vec![("seed".into(), "3".into())],
            tables: vec![t],
            checks: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        let paths = write_report(&rep, dir.path()).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(text, "# experiment: demo\n# table: t\n# seed = 3\na,b\n1,x\n");
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e-2, 10f64.sqrt(), 30);
        assert_eq!(g.len(), 30);
        assert!((g[0] - 1e-2).abs() < 1e-15 && (g[29] - 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unknown_experiment() {
        assert!(run(&ExperimentSpec::new("nope", 0)).is_err());
    }
}
