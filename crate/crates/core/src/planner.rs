//! Tolerance and mixing-time prescriptions.
//!
//! Every plan pairs a coupling parameter `ρ²` with a number of sweeps
//! `t_mix` that guarantees a target accuracy ε, either in 1-Wasserstein
//! distance or in total variation. Contraction is measured by the constant
//! `K_SGS = 1 − ‖G^{−1/2}(Σ AᵢᵀAᵢ/(1 + mᵢρ²))G^{−1/2}‖`.

use nalgebra::DMatrix;

use crate::error::{check_epsilon, invalid, Error, Result};
use crate::model::{max_factor_gradient, model_constants, SplitModel};
use crate::numerics::lambda_extremes;

/// Which guarantee a plan carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    W1Single,
    TvSingle,
    TvMulti,
    TvNonStrongly,
}

impl Theorem {
    pub fn name(self) -> &'static str {
        match self {
            Theorem::W1Single => "w1",
            Theorem::TvSingle => "tv-single",
            Theorem::TvMulti => "tv-multi",
            Theorem::TvNonStrongly => "tv-ns",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Ok(match s {
            "w1" => Theorem::W1Single,
            "tv-single" => Theorem::TvSingle,
            "tv-multi" => Theorem::TvMulti,
            "tv-ns" => Theorem::TvNonStrongly,
            _ => return Err(invalid("theorem", format!("unknown plan {s}"))),
        })
    }
}

/// Which term of a `max`/`min` in the `ρ²` rule is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `ε²/(4m)` in the Wasserstein plan.
    EpsilonSquared,
    /// `ε/√(mM)` in the Wasserstein plan.
    ConditionNumber,
    /// Both Wasserstein branches coincide (to 1e-12 relative).
    Tie,
    /// Bias-budget root in the multi-split TV plan.
    BiasBudget,
    /// `1/(6σ²_U)` cap in the multi-split TV plan.
    ValidityCap,
    /// The plan has a single rule.
    Single,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::EpsilonSquared => "eps-squared",
            Branch::ConditionNumber => "condition-number",
            Branch::Tie => "tie",
            Branch::BiasBudget => "bias-budget",
            Branch::ValidityCap => "validity-cap",
            Branch::Single => "single",
        }
    }
}

/// Prescribed initial distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDistribution {
    /// `δ_{θ*}`.
    PointMass,
    /// `N(θ*, (Σ wᵢAᵢᵀAᵢ)⁻¹)` with the listed weights.
    Gaussian { precision_weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub theorem: Theorem,
    pub epsilon: f64,
    pub rho2: f64,
    pub t_mix: u64,
    /// Unrounded sweep count.
    pub t_mix_real: f64,
    pub k_sgs: f64,
    /// Initial-divergence constant of the TV plans.
    pub c: Option<f64>,
    pub regularizer_lambda: Option<f64>,
    pub branch: Branch,
    /// The two candidate values of `ρ²` (equal for single-rule plans).
    pub branch_values: [f64; 2],
    pub initial: InitialDistribution,
    /// Split of ε between regularization, bias and mixing.
    pub budget: Option<[f64; 3]>,
}

impl Plan {
    pub fn rho(&self) -> f64 {
        self.rho2.sqrt()
    }
}

fn ceil_sweeps(real: f64) -> Result<u64> {
    if !real.is_finite() || real < 0.0 {
        return Err(Error::NonConvergence { iterations: 0, residual: real });
    }
    Ok((real.ceil() as u64).max(1))
}

fn check_pair(m: f64, big_m: f64) -> Result<()> {
    if !(m > 0.0) {
        return Err(Error::NotStronglyConvex);
    }
    if !(big_m >= m) || !big_m.is_finite() {
        return Err(invalid("M", "need m <= M < infinity"));
    }
    Ok(())
}

/// `K_SGS` for a model at coupling `ρ`, computed as the smallest
/// eigenvalue of `G^{−1/2}(Σ AᵢᵀAᵢ mᵢρ²/(1 + mᵢρ²))G^{−1/2}`, which
/// equals the defining expression without the cancellation in `1 − ‖·‖`.
pub fn k_sgs(model: &SplitModel, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(invalid("rho", "must be positive"));
    }
    let r2 = rho * rho;
    let weights: Vec<f64> = model.constants().iter().map(|c| c.m * r2 / (1.0 + c.m * r2)).collect();
    let w = model.weighted_gram(&weights);
    let f = model.gram_factor();
    let n = model.dim();
    let mut x = w.clone();
    for j in 0..n {
        let mut col: Vec<f64> = x.column(j).iter().cloned().collect();
        f.solve_lower(&mut col);
        x.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    let mut s = x.transpose();
    for j in 0..n {
        let mut col: Vec<f64> = s.column(j).iter().cloned().collect();
        f.solve_lower(&mut col);
        s.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    let sym: DMatrix<f64> = (&s + s.transpose()) * 0.5;
    let (lo, _) = lambda_extremes(&sym)?;
    Ok(lo.clamp(0.0, 1.0 - f64::EPSILON))
}

/// Distance `‖G^{1/2}(x − y)‖` in which the sampler contracts.
pub fn w_metric(model: &SplitModel, x: &[f64], y: &[f64]) -> f64 {
    let diff = nalgebra::DVector::from_iterator(x.len(), x.iter().zip(y).map(|(a, b)| a - b));
    diff.dot(&(model.gram() * &diff)).max(0.0).sqrt()
}

/// Wasserstein plan for a single split with `A = I`, started at `θ*`.
/// Guarantees `W₁ ≤ ε√(d/m₁)`.
pub fn plan_w1_single(m1: f64, big_m1: f64, eps: f64) -> Result<Plan> {
    check_epsilon(eps)?;
    check_pair(m1, big_m1)?;
    let first = eps * eps / (4.0 * m1);
    let second = eps / (m1 * big_m1).sqrt();
    let rho2 = first.max(second);
    let branch = if (first - second).abs() <= 1e-12 * rho2 {
        Branch::Tie
    } else if first > second {
        Branch::EpsilonSquared
    } else {
        Branch::ConditionNumber
    };
    let x = (eps * eps / 4.0).max(eps * (m1 / big_m1).sqrt());
    let t_real = (3.0 / eps).ln() / x.ln_1p();
    Ok(Plan {
        theorem: Theorem::W1Single,
        epsilon: eps,
        rho2,
        t_mix: ceil_sweeps(t_real)?,
        t_mix_real: t_real,
        k_sgs: m1 * rho2 / (1.0 + m1 * rho2),
        c: None,
        regularizer_lambda: None,
        branch,
        branch_values: [first, second],
        initial: InitialDistribution::PointMass,
        budget: None,
    })
}

/// Total-variation plan for a single split in dimension `d`.
pub fn plan_tv_single(m1: f64, big_m1: f64, d: usize, eps: f64) -> Result<Plan> {
    check_epsilon(eps)?;
    check_pair(m1, big_m1)?;
    if d == 0 {
        return Err(invalid("d", "must be positive"));
    }
    let df = d as f64;
    let rho2 = eps / (df * big_m1);
    let k = m1 * rho2 / (1.0 + m1 * rho2);
    let c = 5.0 * df / 8.0 + df / 2.0 * (big_m1 / m1).ln();
    let t_real = ((2.0 / eps).ln() + c / 2.0) / k;
    Ok(Plan {
        theorem: Theorem::TvSingle,
        epsilon: eps,
        rho2,
        t_mix: ceil_sweeps(t_real)?,
        t_mix_real: t_real,
        k_sgs: k,
        c: Some(c),
        regularizer_lambda: None,
        branch: Branch::Single,
        branch_values: [rho2, rho2],
        initial: InitialDistribution::Gaussian { precision_weights: vec![big_m1] },
        budget: None,
    })
}

/// Bias-budget branch of the multi-split `ρ²` rule, evaluated without
/// cancellation for small ε.
pub fn tv_multi_bias_branch(eps: f64, sigma2_u: f64, d: usize, sum_d_m: f64) -> f64 {
    let s4 = sigma2_u * sigma2_u;
    let w = 2.0 + 1.5 * d as f64;
    let x = 8.0 * eps * s4 * w / (sum_d_m * sum_d_m);
    sum_d_m * (x / ((1.0 + x).sqrt() + 1.0)) / (4.0 * s4 * w)
}

/// Total-variation plan for a centered multi-split model.
pub fn plan_tv_multi(model: &SplitModel, eps: f64) -> Result<Plan> {
    check_epsilon(eps)?;
    let theta_star = model.theta_star().ok_or(Error::NotCentered { max_gradient: f64::NAN })?;
    let g = max_factor_gradient(model, theta_star)?;
    if g > 1e-8 {
        return Err(Error::NotCentered { max_gradient: g });
    }
    let mc = model_constants(model)?;
    if !(mc.m_u > 0.0) {
        return Err(Error::NotStronglyConvex);
    }
    if !mc.max_big_m.is_finite() {
        return Err(Error::NotSmooth { factor: model.constants().iter().position(|c| !c.is_smooth()).unwrap_or(0) });
    }
    let d = model.dim();
    let df = d as f64;
    let first = tv_multi_bias_branch(eps, mc.sigma2_u, d, mc.sum_d_m);
    let second = 1.0 / (6.0 * mc.sigma2_u);
    let (rho2, branch) = if first <= second { (first, Branch::BiasBudget) } else { (second, Branch::ValidityCap) };
    let k = k_sgs(model, rho2.sqrt())?;
    if !(k > 0.0) {
        return Err(Error::NotStronglyConvex);
    }
    let s4 = mc.sigma2_u * mc.sigma2_u;
    let c = df * mc.sigma2_u + rho2 * rho2 * (2.0 + df) * s4 + 17.0 / 32.0 * mc.sum_d as f64 + 0.5 * mc.log_det_ratio;
    let t_real = ((2.0 / eps).ln() + c / 2.0) / k;
    Ok(Plan {
        theorem: Theorem::TvMulti,
        epsilon: eps,
        rho2,
        t_mix: ceil_sweeps(t_real)?,
        t_mix_real: t_real,
        k_sgs: k,
        c: Some(c),
        regularizer_lambda: None,
        branch,
        branch_values: [first, second],
        initial: InitialDistribution::Gaussian {
            precision_weights: model.constants().iter().map(|c| c.big_m).collect(),
        },
        budget: None,
    })
}

/// Total-variation plan for a smooth single split without strong
/// convexity. `r` certifies `∫‖θ − θ*‖⁴ dπ ≤ d²R²`. The returned plan
/// applies to the model regularized with `regularizer_lambda`.
pub fn plan_tv_nonstrongly(big_m1: f64, d: usize, r: f64, eps: f64) -> Result<Plan> {
    check_epsilon(eps)?;
    if !(big_m1 > 0.0) || !big_m1.is_finite() {
        return Err(invalid("M", "must be positive and finite"));
    }
    if !(r > 0.0) || d == 0 {
        return Err(invalid("R/d", "need R > 0 and d >= 1"));
    }
    let df = d as f64;
    let lambda = 4.0 * eps / (3.0 * df * r);
    let rho2 = 2.0 * eps / (3.0 * df * (big_m1 + lambda));
    let k = lambda * rho2 / (1.0 + lambda * rho2);
    let c = 5.0 * df / 8.0 + df / 2.0 * ((big_m1 + lambda) / lambda).ln();
    let t_real = ((3.0 / eps).ln() + c / 2.0) / k;
    Ok(Plan {
        theorem: Theorem::TvNonStrongly,
        epsilon: eps,
        rho2,
        t_mix: ceil_sweeps(t_real)?,
        t_mix_real: t_real,
        k_sgs: k,
        c: Some(c),
        regularizer_lambda: Some(lambda),
        branch: Branch::Single,
        branch_values: [rho2, rho2],
        initial: InitialDistribution::Gaussian { precision_weights: vec![big_m1 + lambda] },
        budget: Some([eps / 3.0; 3]),
    })
}
