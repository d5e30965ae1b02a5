use std::ops::ControlFlow;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{require, Check, ExperimentReport, ExperimentSpec, Params, Table};
use crate::engine::{ChainState, Sampler, SamplerConfig};
use crate::error::{Error, Result};
use crate::model::zoo::{build, LogisticData, TestModel};
use crate::model::{center_model, find_minimizer, model_constants, SplitModel};
use crate::numerics::lambda_extremes;
use crate::planner::plan_tv_multi;
use crate::rng::child_seed;
use crate::row;

/// Outcome of one (d, n, strategy, b) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticCell {
    pub d: usize,
    pub n: usize,
    pub strategy: usize,
    pub b: usize,
    pub rho2: f64,
    pub t_mix: Option<u64>,
    pub branch: String,
    /// The multi-split plan was not applicable and `ρ² = ε/Σ dᵢMᵢ` was used.
    pub fallback: bool,
    pub max_mean_proposals: f64,
}

/// `Σᵢ λ_max(Gᵢ)/Σᵢ λ_min(Gᵢ)` with `Gᵢ` the Gram matrix of group `i`.
pub fn kappa_ratio(data: &LogisticData, groups: usize) -> Result<f64> {
    let n = data.xs.len();
    let d = data.dim();
    let (mut top, mut bottom) = (0.0, 0.0);
    for g in 0..groups {
        let mut s = DMatrix::zeros(d, d);
        for x in &data.xs[g * n / groups..(g + 1) * n / groups] {
            let v = DVector::from_column_slice(x);
            s += &v * v.transpose();
        }
        let (lo, hi) = lambda_extremes(&s)?;
        top += hi;
        bottom += if lo <= 1e-12 * hi { 0.0 } else { lo };
    }
    Ok(top / bottom)
}

fn run_cell(model: &SplitModel, eps: f64, sweeps: u64, seed: u64) -> Result<(f64, Option<u64>, String, bool, f64)> {
    let (rho2, t_mix, branch, fallback) = match plan_tv_multi(model, eps) {
        Ok(plan) => (plan.rho2, Some(plan.t_mix), plan.branch.name().to_string(), false),
        Err(Error::NotStronglyConvex) => {
            let mc = model_constants(model)?;
            (eps / mc.sum_d_m, None, "fallback".to_string(), true)
        }
        Err(e) => return Err(e),
    };
    let theta_star = model.theta_star().expect("centered model").to_vec();
    let mut config = SamplerConfig::new(rho2.sqrt(), sweeps);
    config.force_rejection = true;
    let sampler = Sampler::new(Arc::new(model.clone()), config)?;
    let mut state = ChainState::new(model, &theta_star, seed)?;
    let report = sampler.run(&mut state, |_, _, _| ControlFlow::Continue(()))?;
    let max_mean = report.mean_proposals_per_factor().into_iter().fold(0.0, f64::max);
    Ok((rho2, t_mix, branch, fallback, max_mean))
}

/// Bayesian logistic regression with both splitting strategies: plans,
/// rejection-sampler efficiency over a short run, and condition-number
/// ratios.
pub fn run_logistic(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let mut p = Params::new(spec);
    let dims: Vec<usize> = p.list("dims", &[2, 10, 50])?;
    let ns: Vec<usize> = p.list("ns", &[200, 1000])?;
    let groups: Vec<usize> = p.list("groups", &[2, 5, 10])?;
    let sweeps: u64 = p.get("sweeps", 100)?;
    let eps: f64 = p.get("eps", 0.01)?;
    let config = p.finish()?;
    require(sweeps > 0, "sweeps", "must be positive")?;

    let mut table = Table::new(
        "proposals",
        &["d", "n", "strategy", "b", "rho2", "t_mix", "branch", "fallback", "max_mean_proposals", "kappa2_over_kappa1"],
    );
    let mut cells = Vec::new();
    let mut ordering = Vec::new();
    for &d in &dims {
        for &n in &ns {
            let data_seed = child_seed(spec.seed, d as u64, n as u64);
            let data = LogisticData::generate(d, n, data_seed)?;
            let s1 = build(&TestModel::LogisticSplit1 { data: data.clone() })?;
            let theta_star = find_minimizer(&s1, None, None)?.theta_star;
            let s1 = center_model(&s1, &theta_star)?;
            let (rho2, t1, branch, fallback, maxp) = run_cell(&s1, eps, sweeps, child_seed(data_seed, 1, 0))?;
            table.push(row![d, n, 1, n, rho2, t1.map_or("NA".into(), |t| t.to_string()), branch, fallback, maxp, 1.0]);
            cells.push(LogisticCell {
                d,
                n,
                strategy: 1,
                b: n,
                rho2,
                t_mix: t1,
                branch,
                fallback,
                max_mean_proposals: maxp,
            });
            for &b in &groups {
                if b > n {
                    continue;
                }
                let s2 = build(&TestModel::LogisticSplit2 { data: data.clone(), groups: b })?;
                let s2 = center_model(&s2, &theta_star)?;
                let ratio = kappa_ratio(&data, b)?;
                let (rho2, t2, branch, fallback, maxp) =
                    run_cell(&s2, eps, sweeps, child_seed(data_seed, 2, b as u64))?;
                table.push(row![
                    d,
                    n,
                    2,
                    b,
                    rho2,
                    t2.map_or("NA".into(), |t| t.to_string()),
                    branch,
                    fallback,
                    maxp,
                    ratio
                ]);
                if let (Some(a), Some(c)) = (t1, t2) {
                    ordering.push(format!("d={d} n={n} b={b}: t1/t2={:.3} k2/k1={ratio:.2}", a as f64 / c as f64));
                }
                cells.push(LogisticCell {
                    d,
                    n,
                    strategy: 2,
                    b,
                    rho2,
                    t_mix: t2,
                    branch,
                    fallback,
                    max_mean_proposals: maxp,
                });
            }
        }
    }
    let worst = cells.iter().map(|c| c.max_mean_proposals).fold(0.0, f64::max);
    let checks = vec![
        Check::new("max-mean-proposals", worst <= 1.5, format!("largest per-factor mean proposals = {worst:.3}")),
        Check::info("strategy-ordering", true, ordering.join("; ")),
    ];
    Ok(ExperimentReport { name: spec.name.clone(), config, tables: vec![table], checks })
}
