use std::sync::Arc;
use std::time::Instant;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{gaussian_inits, require, Check, Ensemble, ExperimentReport, ExperimentSpec, Params, Table};
use crate::bias::pi_rho_closed_form;
use crate::engine::{ula_step, SamplerConfig};
use crate::error::Result;
use crate::metrics::{chi_square_statistic, project, Mixture1d};
use crate::model::zoo::{build, sample_target, TestModel};
use crate::model::{center_model, model_constants};
use crate::planner::{plan_tv_multi, plan_tv_single, Plan};
use crate::rng::{child_seed, seeded};
use crate::row;

/// Pearson statistic of `values` on `bins` bins that are equiprobable under
/// `law`, with the 5% critical value of χ²(bins − 1).
pub fn chi2_equiprobable(values: &[f64], law: &Mixture1d, bins: usize) -> (f64, f64) {
    let edges: Vec<f64> = (1..bins).map(|k| law.quantile(k as f64 / bins as f64)).collect();
    let mut counts = vec![0.0; bins];
    for v in values {
        counts[edges.partition_point(|e| e < v)] += 1.0;
    }
    let expected = vec![values.len() as f64 / bins as f64; bins];
    let crit = ChiSquared::new((bins - 1) as f64).expect("positive dof").inverse_cdf(0.95);
    (chi_square_statistic(&counts, &expected), crit)
}

fn plan_row(table: &mut Table, d: usize, plan: &Plan) {
    table.push(row![
        d,
        plan.theorem.name(),
        plan.epsilon,
        plan.rho2,
        plan.k_sgs,
        plan.c.unwrap_or(f64::NAN),
        plan.t_mix,
        plan.branch.name(),
        plan.branch_values[0],
        plan.branch_values[1]
    ]);
}

/// Two-component Gaussian mixture: planned `ρ` and sweep counts, sampler
/// output against exact draws, and a Langevin wall-time baseline.
pub fn run_mixture(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let mut p = Params::new(spec);
    let dims: Vec<usize> = p.list("dims", &[4, 8, 16])?;
    let plan_dims: Vec<usize> = p.list("plan_dims", &[4, 8, 12, 16, 20, 30, 40, 60])?;
    let eps: f64 = p.get("eps", 0.1)?;
    let samples: usize = p.get("samples", 2500)?;
    let bins: usize = p.get("bins", 40)?;
    let hist_bins: usize = p.get("hist_bins", 60)?;
    let ula_chains: usize = p.get("ula_chains", 250)?;
    let config = p.finish()?;
    require(bins >= 2 && samples >= bins, "bins", "need 2 <= bins <= samples")?;

    let mut plans = Table::new(
        "plan",
        &["d", "theorem", "eps", "rho2", "k_sgs", "c", "t_mix", "branch", "branch_value_0", "branch_value_1"],
    );
    for &d in &plan_dims {
        let tm = TestModel::mixture(d);
        let model = center_model(&build(&tm)?, &vec![0.0; d])?;
        let mc = model_constants(&model)?;
        plan_row(&mut plans, d, &plan_tv_single(mc.m_u, mc.max_big_m, d, eps)?);
        plan_row(&mut plans, d, &plan_tv_multi(&model, eps)?);
    }

    let mut table = Table::new(
        "samples",
        &[
            "d",
            "method",
            "rho2",
            "iterations",
            "chi2",
            "chi2_crit_5pct",
            "chi2_pass",
            "wall_s",
            "wall_per_chain_iter_s",
        ],
    );
    let mut hist = Table::new("histogram", &["d", "u_lo", "u_hi", "pi_mass", "pi_rho_mass", "sgs_frac", "iid_frac"]);
    let mut checks = Vec::new();
    let mut ratios = Vec::new();
    for (idx, &d) in dims.iter().enumerate() {
        let tm = TestModel::mixture(d);
        let a = match &tm {
            TestModel::GaussianMixture { a } => a.clone(),
            _ => unreachable!(),
        };
        let norm_a = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dir: Vec<f64> = a.iter().map(|x| x / norm_a).collect();
        let model = Arc::new(center_model(&build(&tm)?, &vec![0.0; d])?);
        let mc = model_constants(&model)?;
        let plan = plan_tv_single(mc.m_u, mc.max_big_m, d, eps)?;
        let law = pi_rho_closed_form(&tm, 0.0)?.project(&dir);
        let seed = child_seed(spec.seed, 4_000 + d as u64, 0);
        let inits = gaussian_inits(samples, &vec![0.0; d], 1.0 / mc.max_big_m.sqrt(), seed);

        let start = Instant::now();
        let mut ens = Ensemble::new(model.clone(), SamplerConfig::new(plan.rho(), plan.t_mix), &inits, seed)?;
        for _ in 0..plan.t_mix {
            ens.step()?;
        }
        let sgs_wall = start.elapsed().as_secs_f64();
        let u_sgs = ens.project(&dir);
        let (chi_sgs, crit) = chi2_equiprobable(&u_sgs, &law, bins);
        let per_sgs = sgs_wall / (samples as f64 * plan.t_mix as f64);
        table.push(row![d, "sgs", plan.rho2, plan.t_mix, chi_sgs, crit, chi_sgs <= crit, sgs_wall, per_sgs]);
        checks.push(Check::new(
            &format!("chi2-sgs-d{d}"),
            chi_sgs <= crit,
            format!("chi2 = {chi_sgs:.2}, 5% critical = {crit:.2}"),
        ));

        let mut rng = seeded(child_seed(seed, 1, 1));
        let iid: Vec<Vec<f64>> = (0..samples).map(|_| sample_target(&tm, &mut rng)).collect::<Result<_>>()?;
        let u_iid = project(&iid, &dir);
        let (chi_iid, _) = chi2_equiprobable(&u_iid, &law, bins);
        table.push(row![d, "iid", 0.0, 0, chi_iid, crit, chi_iid <= crit, f64::NAN, f64::NAN]);
        checks.push(Check::info(&format!("chi2-iid-d{d}"), chi_iid <= crit, format!("chi2 = {chi_iid:.2}")));

        if ula_chains > 0 {
            let start = Instant::now();
            for (k, init) in inits.iter().take(ula_chains).enumerate() {
                let mut rng = seeded(child_seed(seed, 2, k as u64));
                let mut theta = init.clone();
                for _ in 0..plan.t_mix {
                    theta = ula_step(&model, &theta, plan.rho2, &mut rng)?;
                }
            }
            let ula_wall = start.elapsed().as_secs_f64();
            let n = ula_chains.min(samples);
            let per_ula = ula_wall / (n as f64 * plan.t_mix as f64);
            table.push(row![d, "ula", plan.rho2, plan.t_mix, f64::NAN, f64::NAN, "NA", ula_wall, per_ula]);
            ratios.push(format!("d={d}: {:.2}", per_ula / per_sgs));
        }

        if idx + 1 == dims.len() {
            let pi_rho = pi_rho_closed_form(&tm, plan.rho())?.project(&dir);
            let (lo, hi) = (-5.0, 5.0);
            let w = (hi - lo) / hist_bins as f64;
            for k in 0..hist_bins {
                let (a0, a1) = (lo + w * k as f64, lo + w * (k + 1) as f64);
                let frac = |u: &[f64]| u.iter().filter(|&&x| x >= a0 && x < a1).count() as f64 / u.len() as f64;
                hist.push(row![
                    d,
                    a0,
                    a1,
                    law.cdf(a1) - law.cdf(a0),
                    pi_rho.cdf(a1) - pi_rho.cdf(a0),
                    frac(&u_sgs),
                    frac(&u_iid)
                ]);
            }
        }
    }
    checks.push(Check::info(
        "ula-per-iteration-cost-ratio",
        true,
        format!("ULA/SGS wall time per chain-iteration: {}", ratios.join(", ")),
    ));
    Ok(ExperimentReport { name: spec.name.clone(), config, tables: vec![plans, table, hist], checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Gaussian1d;

    #[test]
    fn equiprobable_bins_for_quantile_grid() {
        let law = Mixture1d::single(Gaussian1d::new(0.0, 1.0));
        let values: Vec<f64> = (0..4000).map(|k| law.quantile((k as f64 + 0.5) / 4000.0)).collect();
        let (stat, crit) = chi2_equiprobable(&values, &law, 40);
        assert!(stat < 1e-6, "{stat}");
        assert!((crit - 54.572).abs() < 1e-2);
    }

    #[test]
    fn tiny_mixture_run() {
        let spec = ExperimentSpec::new("mixture", 5)
            .with("dims", 2)
            .with("plan_dims", 2)
            .with("samples", 400)
            .with("bins", 10)
            .with("ula_chains", 5);
        let rep = run_mixture(&spec).unwrap();
        assert_eq!(rep.table("plan").unwrap().rows.len(), 2);
        assert_eq!(rep.table("samples").unwrap().rows.len(), 3);
        assert!(rep.check("chi2-sgs-d2").unwrap().passed);
    }
}
