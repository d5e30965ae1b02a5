use std::sync::Arc;

use super::{gaussian_inits, require, Check, Ensemble, ExperimentReport, ExperimentSpec, Params, Table};
use crate::bias::pi_rho_closed_form;
use crate::engine::SamplerConfig;
use crate::error::Result;
use crate::metrics::{binned_tv, ols_slope, w1_empirical_vs_normal, Reference};
use crate::model::zoo::{build, TestModel};
use crate::planner::{plan_tv_single, plan_w1_single};
use crate::rng::child_seed;
use crate::row;

/// Ensemble size and stopping rules for empirical mixing times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingConfig {
    pub chains: usize,
    pub bins: usize,
    pub replicates: usize,
    pub max_sweeps: u64,
}

/// Empirical mixing times at one grid value.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingPoint {
    pub x: f64,
    pub rho2: f64,
    pub threshold: f64,
    /// One entry per replicate; `None` when the cap was hit first.
    pub times: Vec<Option<u64>>,
}

impl MixingPoint {
    /// Mean over replicates, NaN if any replicate did not mix.
    pub fn mean(&self) -> f64 {
        if self.times.iter().any(Option::is_none) {
            return f64::NAN;
        }
        self.times.iter().map(|t| t.unwrap() as f64).sum::<f64>() / self.times.len() as f64
    }
}

fn min_direction(q: &[f64]) -> Vec<f64> {
    let k = q.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).unwrap_or(0);
    let mut u = vec![0.0; q.len()];
    u[k] = 1.0;
    u
}

fn precisions(tm: &TestModel) -> &[f64] {
    match tm {
        TestModel::AnisoGaussian { q } => q,
        _ => unreachable!("mixing experiments use the anisotropic Gaussian"),
    }
}

/// First sweep at which the binned TV between the ensemble's projection on
/// the least favorable direction and π's projection drops below `eps`.
/// Chains start from `N(0, I/M)`.
pub fn mixing_time_tv(tm: &TestModel, rho: f64, eps: f64, cfg: &MixingConfig, seed: u64) -> Result<Option<u64>> {
    let q = precisions(tm);
    let big_m = q.iter().cloned().fold(f64::MIN, f64::max);
    let dir = min_direction(q);
    let law = pi_rho_closed_form(tm, 0.0)?.project(&dir);
    let model = Arc::new(build(tm)?);
    let inits = gaussian_inits(cfg.chains, &vec![0.0; q.len()], 1.0 / big_m.sqrt(), seed);
    let mut ens = Ensemble::new(model, SamplerConfig::new(rho, cfg.max_sweeps), &inits, seed)?;
    for t in 0..=cfg.max_sweeps {
        let tv = binned_tv(&ens.project(&dir), Reference::Analytic(&law), cfg.bins)?;
        if tv < eps {
            return Ok(Some(t));
        }
        if t < cfg.max_sweeps {
            ens.step()?;
        }
    }
    Ok(None)
}

/// First sweep at which the exact W₁ between the ensemble's empirical law on
/// the least favorable direction and π's projection drops below
/// `threshold`. Chains start at 0.
pub fn mixing_time_w1(tm: &TestModel, rho: f64, threshold: f64, cfg: &MixingConfig, seed: u64) -> Result<Option<u64>> {
    let q = precisions(tm);
    let dir = min_direction(q);
    let sd = pi_rho_closed_form(tm, 0.0)?.project(&dir).sd();
    let model = Arc::new(build(tm)?);
    let inits = vec![vec![0.0; q.len()]; cfg.chains];
    let mut ens = Ensemble::new(model, SamplerConfig::new(rho, cfg.max_sweeps), &inits, seed)?;
    for t in 0..=cfg.max_sweeps {
        if w1_empirical_vs_normal(&ens.project(&dir), 0.0, sd) < threshold {
            return Ok(Some(t));
        }
        if t < cfg.max_sweeps {
            ens.step()?;
        }
    }
    Ok(None)
}

fn replicate<F>(cfg: &MixingConfig, seed: u64, tag: u64, f: F) -> Result<Vec<Option<u64>>>
where
    F: Fn(u64) -> Result<Option<u64>>,
{
    (0..cfg.replicates).map(|r| f(child_seed(seed, tag, r as u64))).collect()
}

/// TV mixing times across dimensions with the single-split TV plan for `ρ`.
pub fn d_sweep(
    dims: &[usize],
    eps: f64,
    m: f64,
    big_m: f64,
    cfg: &MixingConfig,
    seed: u64,
) -> Result<Vec<MixingPoint>> {
    dims.iter()
        .map(|&d| {
            let plan = plan_tv_single(m, big_m, d, eps)?;
            let tm = TestModel::aniso(d, m, big_m);
            let times = replicate(cfg, seed, 1_000 + d as u64, |s| mixing_time_tv(&tm, plan.rho(), eps, cfg, s))?;
            Ok(MixingPoint { x: d as f64, rho2: plan.rho2, threshold: eps, times })
        })
        .collect()
}

/// W₁ mixing times across condition numbers `κ = M/m` with `M = 1`, the
/// Wasserstein plan for `ρ`, and threshold `ε√(d/m)`.
pub fn kappa_sweep(kappas: &[f64], d: usize, eps: f64, cfg: &MixingConfig, seed: u64) -> Result<Vec<MixingPoint>> {
    kappas
        .iter()
        .enumerate()
        .map(|(k, &kappa)| {
            let m = 1.0 / kappa;
            let plan = plan_w1_single(m, 1.0, eps)?;
            let tm = TestModel::aniso(d, m, 1.0);
            let threshold = eps * (d as f64 / m).sqrt();
            let times = replicate(cfg, seed, 2_000 + k as u64, |s| mixing_time_w1(&tm, plan.rho(), threshold, cfg, s))?;
            Ok(MixingPoint { x: kappa, rho2: plan.rho2, threshold, times })
        })
        .collect()
}

/// TV mixing times across precisions at fixed `d` and `κ`.
pub fn eps_sweep(eps_list: &[f64], d: usize, kappa: f64, cfg: &MixingConfig, seed: u64) -> Result<Vec<MixingPoint>> {
    eps_list
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let m = 1.0 / kappa;
            let plan = plan_tv_single(m, 1.0, d, eps)?;
            let tm = TestModel::aniso(d, m, 1.0);
            let times = replicate(cfg, seed, 3_000 + k as u64, |s| mixing_time_tv(&tm, plan.rho(), eps, cfg, s))?;
            Ok(MixingPoint { x: eps, rho2: plan.rho2, threshold: eps, times })
        })
        .collect()
}

fn log_slope(points: &[MixingPoint], x_of: impl Fn(f64) -> f64) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| x_of(p.x).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean().ln()).collect();
    if points.len() < 2 || ys.iter().any(|y| !y.is_finite()) {
        return f64::NAN;
    }
    ols_slope(&xs, &ys)
}

fn push_points(table: &mut Table, sweep: &str, points: &[MixingPoint]) {
    for p in points {
        let times: Vec<String> = p.times.iter().map(|t| t.map_or("NA".to_string(), |t| t.to_string())).collect();
        table.push(row![
            sweep,
            p.x,
            p.rho2,
            p.threshold,
            p.mean(),
            p.times.iter().all(Option::is_some),
            times.join(" ")
        ]);
    }
}

/// Empirical mixing times of the sampler on anisotropic Gaussian targets
/// across dimension, condition number and precision.
pub fn run_gaussian_mixing(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let mut p = Params::new(spec);
    let sections: Vec<String> = p.list("sections", &["d".to_string(), "kappa".to_string(), "eps".to_string()])?;
    let eps: f64 = p.get("eps", 0.1)?;
    let dims: Vec<usize> = p.list("dims", &[10, 25, 50, 100, 200])?;
    let m: f64 = p.get("m", 0.25)?;
    let big_m: f64 = p.get("big_m", 1.0)?;
    let d_cfg = MixingConfig {
        chains: p.get("chains", 2000)?,
        bins: p.get("bins", 50)?,
        replicates: p.get("replicates", 5)?,
        max_sweeps: p.get("max_sweeps", 100_000)?,
    };
    let kappas: Vec<f64> = p.list("kappas", &[10.0, 40.0, 160.0, 640.0, 1600.0])?;
    let kappa_d: usize = p.get("kappa_d", 10)?;
    let k_cfg = MixingConfig {
        chains: p.get("kappa_chains", 1000)?,
        bins: 0,
        replicates: p.get("kappa_replicates", 50)?,
        max_sweeps: d_cfg.max_sweeps,
    };
    let eps_list: Vec<f64> = p.list("eps_list", &[0.16, 0.1, 0.06, 0.04])?;
    let eps_d: usize = p.get("eps_d", 2)?;
    let eps_kappa: f64 = p.get("eps_kappa", 3.0)?;
    let e_cfg = MixingConfig {
        chains: p.get("eps_chains", 20_000)?,
        bins: p.get("eps_bins", 20)?,
        replicates: p.get("eps_replicates", 1)?,
        max_sweeps: d_cfg.max_sweeps,
    };
    let config = p.finish()?;
    require(d_cfg.replicates > 0 && k_cfg.replicates > 0 && e_cfg.replicates > 0, "replicates", "must be positive")?;

    let mut table =
        Table::new("mixing", &["sweep", "x", "rho2", "threshold", "mean_t_mix", "all_mixed", "replicate_t_mix"]);
    let mut checks = Vec::new();
    let has = |s: &str| sections.iter().any(|x| x == s);
    if has("d") {
        let pts = d_sweep(&dims, eps, m, big_m, &d_cfg, spec.seed)?;
        push_points(&mut table, "d", &pts);
        let slope = log_slope(&pts, |x| x);
        checks.push(Check::new("d-slope", slope <= 1.3, format!("log-log slope of TV mixing time vs d = {slope:.3}")));
    }
    if has("kappa") {
        let pts = kappa_sweep(&kappas, kappa_d, eps, &k_cfg, spec.seed)?;
        push_points(&mut table, "kappa", &pts);
        let slope = log_slope(&pts, |x| x);
        checks.push(Check::new(
            "kappa-slope",
            (0.4..=0.65).contains(&slope),
            format!("log-log slope of W1 mixing time vs kappa = {slope:.3}"),
        ));
    }
    if has("eps") {
        let pts = eps_sweep(&eps_list, eps_d, eps_kappa, &e_cfg, spec.seed)?;
        push_points(&mut table, "eps", &pts);
        let slope = log_slope(&pts, |e| (2.0 / e).ln() / e);
        checks.push(Check::info(
            "eps-slope",
            slope.is_finite(),
            format!("log-log slope of TV mixing time vs log(2/eps)/eps = {slope:.3}"),
        ));
    }
    Ok(ExperimentReport { name: spec.name.clone(), config, tables: vec![table], checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_dimension_mixes_quickly() {
        let cfg = MixingConfig { chains: 600, bins: 20, replicates: 1, max_sweeps: 5000 };
        let pts = d_sweep(&[2], 0.15, 0.25, 1.0, &cfg, 3).unwrap();
        let t = pts[0].times[0].expect("mixes");
        assert!(t > 0 && t < 2000, "{t}");
    }

    #[test]
    fn w1_mixing_is_reached() {
        let cfg = MixingConfig { chains: 400, bins: 0, replicates: 2, max_sweeps: 5000 };
        let pts = kappa_sweep(&[10.0], 4, 0.1, &cfg, 1).unwrap();
        assert!(pts[0].mean().is_finite());
    }
}
