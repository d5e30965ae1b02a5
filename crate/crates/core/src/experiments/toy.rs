use super::{log_grid, require, Check, ExperimentReport, ExperimentSpec, Params, Table};
use crate::bias::{pi_rho_closed_form, tv_bound_strongly_convex, w1_bound_single, PiRho};
use crate::error::Result;
use crate::metrics::{
    ar1_params, ols_slope, tv_envelope_sqrt, tv_envelope_variance, tv_same_mean, w1_envelope, w1_same_mean, Gaussian1d,
};
use crate::model::center_model;
use crate::model::zoo::{build, TestModel};
use crate::planner::k_sgs;
use crate::row;

fn gaussian_of(p: &PiRho) -> Gaussian1d {
    match p {
        PiRho::Gaussian { mean, var } => Gaussian1d::new(mean[0], var[0]),
        PiRho::Mixture { .. } => unreachable!("toy models are Gaussian"),
    }
}

fn toy(strategy: usize, sigma: f64, b: usize, mu: f64) -> TestModel {
    if strategy == 1 {
        TestModel::toy1(sigma, b, mu)
    } else {
        TestModel::toy2(sigma, b, mu)
    }
}

/// Distance between π and π_ρ on the toy model, exact and bounded, over a
/// log grid of ρ.
pub fn run_bias_toy(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let mut p = Params::new(spec);
    let sigma: f64 = p.get("sigma", 3.0)?;
    let b: usize = p.get("b", 10)?;
    let mu: f64 = p.get("mu", 0.0)?;
    let points: usize = p.get("points", 30)?;
    let rho_min: f64 = p.get("rho_min", 1e-2)?;
    let rho_max: f64 = p.get("rho_max", 10f64.sqrt())?;
    let config = p.finish()?;
    require(points >= 2 && rho_min > 0.0 && rho_max > rho_min, "points", "need >= 2 points and 0 < rho_min < rho_max")?;

    let grid = log_grid(rho_min, rho_max, points);
    let mut table = Table::new(
        "bias",
        &["strategy", "rho", "exact_tv", "tv_bound", "tv_bound_raw", "tv_valid", "exact_w1", "w1_bound", "w1_branch"],
    );
    let mut checks = Vec::new();
    for strategy in [1usize, 2] {
        let tm = toy(strategy, sigma, b, mu);
        let pi = gaussian_of(&pi_rho_closed_form(&tm, 0.0)?);
        let model = build(&tm)?;
        let model = center_model(&model, &[mu])?;
        let big_m1 = model.constants()[0].big_m;
        let (mut tv_ok, mut w1_ok, mut small_x, mut small_y) = (true, true, Vec::new(), Vec::new());
        for &rho in &grid {
            let pr = gaussian_of(&pi_rho_closed_form(&tm, rho)?);
            let exact_tv = tv_same_mean(pi.var, pr.var - pi.var);
            let exact_w1 = w1_same_mean(pi.var, pr.var - pi.var);
            let tvb = tv_bound_strongly_convex(&model, rho)?;
            if tvb.valid && tvb.value < exact_tv {
                tv_ok = false;
            }
            let (w1b, branch) = if strategy == 2 {
                let w = w1_bound_single(big_m1, 1, rho)?;
                if w.value < exact_w1 {
                    w1_ok = false;
                }
                (w.value.to_string(), w.branch.unwrap_or("").to_string())
            } else {
                ("NaN".to_string(), "n/a".to_string())
            };
            if rho <= rho_min * 10.0 * (1.0 + 1e-12) {
                small_x.push(rho.ln());
                small_y.push(exact_w1.ln());
            }
            table.push(row![strategy, rho, exact_tv, tvb.value, tvb.raw, tvb.valid, exact_w1, w1b, branch]);
        }
        checks.push(Check::new(
            &format!("tv-domination-s{strategy}"),
            tv_ok,
            "TV bound >= exact TV on every valid grid point",
        ));
        if strategy == 2 {
            checks.push(Check::new("w1-domination-s2", w1_ok, "W1 bound >= exact W1 on every grid point"));
        }
        let slope = if small_x.len() >= 2 { ols_slope(&small_x, &small_y) } else { f64::NAN };
        checks.push(Check::new(
            &format!("w1-small-rho-slope-s{strategy}"),
            (1.9..=2.1).contains(&slope),
            format!("log-log slope of exact W1 over the smallest decade = {slope:.4} ({} points)", small_x.len()),
        ));
    }
    Ok(ExperimentReport { name: spec.name.clone(), config, tables: vec![table], checks })
}

/// Per-sweep distances of the toy chain to π_ρ against the contraction
/// envelopes, from closed forms.
pub fn run_rate_toy(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let mut p = Params::new(spec);
    let sigma: f64 = p.get("sigma", 3.0)?;
    let b: usize = p.get("b", 10)?;
    let mu: f64 = p.get("mu", 0.0)?;
    let rhos: Vec<f64> = p.list("rhos", &[0.5, 1.0, 2.0])?;
    let t_max: u64 = p.get("t_max", 500)?;
    let theta0: f64 = p.get("theta0", 0.0)?;
    let config = p.finish()?;
    require(rhos.iter().all(|r| *r > 0.0), "rhos", "must be positive")?;

    let mut table =
        Table::new("rate", &["strategy", "rho", "t", "k_sgs", "tv", "tv_env_variance", "tv_env_sqrt", "w1", "w1_env"]);
    let mut summary = Table::new(
        "rate_summary",
        &[
            "strategy",
            "rho",
            "k_sgs",
            "log_one_minus_k",
            "tv_slope",
            "tv_slope_ratio",
            "w1_slope_ratio",
            "tv_env_variance_holds",
            "tv_env_sqrt_holds",
            "w1_env_holds",
        ],
    );
    let (mut var_ok, mut sqrt_ok, mut w1_ok, mut slope_ok, mut w1_ratio_ok) = (true, true, true, true, true);
    let mut slope_detail = Vec::new();
    for strategy in [1usize, 2] {
        let tm = toy(strategy, sigma, b, mu);
        let model = build(&tm)?;
        for &rho in &rhos {
            let ar = ar1_params(&tm, rho)?;
            let k = k_sgs(&model, rho)?;
            let pi_rho = ar.stationary();
            let nu = Gaussian1d::new(mu, sigma * sigma / b as f64);
            let chi2 = nu.chi2(&pi_rho);
            let start = Gaussian1d::new(theta0, 0.0);
            let w1_0 = start.w1(&pi_rho);
            let (mut ts, mut ltv, mut lw1) = (Vec::new(), Vec::new(), Vec::new());
            let (mut v_ok, mut s_ok, mut w_ok) = (true, true, true);
            for t in 0..=t_max {
                let tv = tv_same_mean(pi_rho.var, ar.variance_offset(nu.var, t));
                let w1 = if theta0 == mu {
                    w1_same_mean(pi_rho.var, ar.variance_offset(0.0, t))
                } else {
                    ar.law(start, t).w1(&pi_rho)
                };
                let (ev, es, ew) =
                    (tv_envelope_variance(chi2, k, t), tv_envelope_sqrt(chi2, k, t), w1_envelope(w1_0, k, t));
                v_ok &= tv <= ev;
                s_ok &= tv <= es;
                w_ok &= w1 <= ew * (1.0 + 1e-12);
                if tv > 1e-280 && w1 > 1e-280 {
                    ts.push(t as f64);
                    ltv.push(tv.ln());
                    lw1.push(w1.ln());
                }
                table.push(row![strategy, rho, t, k, tv, ev, es, w1, ew]);
            }
            let target = (1.0 - k).ln();
            let tv_slope = ols_slope(&ts, &ltv);
            let ratio = tv_slope / target;
            let w1_ratio = ols_slope(&ts, &lw1) / target;
            var_ok &= v_ok;
            sqrt_ok &= s_ok;
            w1_ok &= w_ok;
            slope_ok &= (ratio - 1.0).abs() <= 0.05;
            w1_ratio_ok &= (1.5..=2.5).contains(&w1_ratio);
            slope_detail.push(format!("s{strategy} rho={rho}: ratio {ratio:.3}"));
            summary.push(row![strategy, rho, k, target, tv_slope, ratio, w1_ratio, v_ok, s_ok, w_ok]);
        }
    }
    let checks = vec![
        Check::new("tv-envelope-variance", var_ok, "TV <= Var(dnu/dpi_rho)(1-K)^t at every t"),
        Check::new("w1-envelope", w1_ok, "W1 <= W1(nu, pi_rho)(1-K)^t at every t"),
        Check::new(
            "tv-slope-matches",
            slope_ok,
            format!("TV log-slope / log(1-K) within 5%: {}", slope_detail.join("; ")),
        ),
        Check::info("tv-envelope-sqrt", sqrt_ok, "TV <= 0.5 sqrt(Var(dnu/dpi_rho))(1-K)^t at every t"),
        Check::info("w1-slope-ratio", w1_ratio_ok, "observed W1 log-slope / log(1-K) in [1.5, 2.5]"),
    ];
    Ok(ExperimentReport { name: spec.name.clone(), config, tables: vec![table, summary], checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bias_toy_small_grid() {
        let rep = run_bias_toy(&ExperimentSpec::new("bias-toy", 0).with("points", 12)).unwrap();
        assert_eq!(rep.tables[0].rows.len(), 24);
        assert!(rep.check("tv-domination-s1").unwrap().passed);
        assert!(rep.check("w1-domination-s2").unwrap().passed);
    }

    #[test]
    fn rate_toy_envelopes() {
        let rep = run_rate_toy(&ExperimentSpec::new("rate-toy", 0).with("t_max", 50).with("rhos", "1")).unwrap();
        assert!(rep.check("w1-envelope").unwrap().passed);
        assert!(rep.check("tv-envelope-sqrt").unwrap().passed);
        let ratios = rep.table("rate_summary").unwrap().numbers("tv_slope_ratio");
        assert!(ratios.iter().all(|r| (r - 2.0).abs() < 0.1), "{ratios:?}");
    }
}
