//! Bounds on the distance between the target π and the smoothed marginal
//! π_ρ, plus π_ρ in closed form for the Gaussian test models.

use crate::error::{invalid, Error, Result};
use crate::metrics::{Gaussian1d, Mixture1d};
use crate::model::zoo::TestModel;
use crate::model::{max_factor_gradient, model_constants, SplitModel};
use crate::numerics::parabolic_cylinder_ratio;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    Tv,
    W1,
}

/// Which bound produced a [`BiasBound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Lipschitz potentials, via parabolic cylinder functions.
    Lipschitz,
    /// Smooth, strongly convex potentials.
    StronglyConvex,
    /// Single split, Wasserstein.
    Wasserstein,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasBound {
    /// Reported value; TV bounds are clipped to `[0, 1]`.
    pub value: f64,
    /// Value before clipping.
    pub raw: f64,
    pub distance: Distance,
    pub kind: BoundKind,
    /// Description of the validity predicate.
    pub validity: String,
    pub valid: bool,
    /// First-order small-ρ expression, when one is stated.
    pub linearization: Option<f64>,
    pub branch: Option<&'static str>,
}

fn check_rho(rho: f64) -> Result<()> {
    if rho >= 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(invalid("rho", "must be finite and >= 0"))
    }
}

/// `1 − Πᵢ D₋dᵢ(Lᵢρ)/D₋dᵢ(−Lᵢρ)` for Lipschitz factors.
pub fn tv_bound_lipschitz(l: &[f64], dims: &[usize], rho: f64) -> Result<BiasBound> {
    check_rho(rho)?;
    if l.len() != dims.len() || l.is_empty() {
        return Err(invalid("L/dims", "need one Lipschitz constant per factor"));
    }
    if l.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(invalid("L", "Lipschitz constants must be finite and >= 0"));
    }
    let mut ln_prod = 0.0;
    for (&li, &di) in l.iter().zip(dims) {
        ln_prod += parabolic_cylinder_ratio(di as f64, li * rho)?.ln();
    }
    let raw = -ln_prod.exp_m1();
    let linear = 2.0 * rho * l.iter().zip(dims).map(|(li, &di)| (di as f64).sqrt() * li).sum::<f64>();
    Ok(BiasBound {
        value: raw.clamp(0.0, 1.0),
        raw,
        distance: Distance::Tv,
        kind: BoundKind::Lipschitz,
        validity: "all L_i finite".into(),
        valid: true,
        linearization: Some(linear),
        branch: None,
    })
}

/// Single-split TV bound `ρ²dM₁/2`.
pub fn tv_bound_single(big_m1: f64, d: usize, rho: f64) -> Result<BiasBound> {
    check_rho(rho)?;
    let raw = rho * rho * d as f64 * big_m1 / 2.0;
    Ok(BiasBound {
        value: raw.clamp(0.0, 1.0),
        raw,
        distance: Distance::Tv,
        kind: BoundKind::StronglyConvex,
        validity: "M_1 finite".into(),
        valid: big_m1.is_finite(),
        linearization: None,
        branch: Some("single"),
    })
}

/// TV bound for smooth strongly convex models. Single-split models use
/// `ρ²dM₁/2`; otherwise `(ρ²/2)Σ dᵢMᵢ + (2 + 3d/2)ρ⁴σ⁴_U`, flagged invalid
/// when `ρ² > 1/(6σ²_U)`. Multi-split models must be centered.
pub fn tv_bound_strongly_convex(model: &SplitModel, rho: f64) -> Result<BiasBound> {
    check_rho(rho)?;
    let consts = model.constants();
    if model.num_factors() == 1 {
        return tv_bound_single(consts[0].big_m, model.dim(), rho);
    }
    let theta_star = model.theta_star().ok_or(Error::NotCentered { max_gradient: f64::NAN })?;
    let g = max_factor_gradient(model, theta_star)?;
    if g > 1e-8 {
        return Err(Error::NotCentered { max_gradient: g });
    }
    let mc = model_constants(model)?;
    if !(mc.m_u > 0.0) || !mc.log_det_ratio.is_finite() {
        return Err(Error::NotStronglyConvex);
    }
    let r2 = rho * rho;
    let d = model.dim() as f64;
    let raw = 0.5 * r2 * mc.sum_d_m + (2.0 + 1.5 * d) * r2 * r2 * mc.sigma2_u * mc.sigma2_u;
    let cap = 1.0 / (6.0 * mc.sigma2_u);
    Ok(BiasBound {
        value: raw.clamp(0.0, 1.0),
        raw,
        distance: Distance::Tv,
        kind: BoundKind::StronglyConvex,
        validity: format!("rho^2 <= 1/(6 sigma_U^2) = {cap:e}"),
        valid: r2 <= cap,
        linearization: None,
        branch: Some("multi"),
    })
}

/// Single-split Wasserstein bound `min(ρ√d, ρ²√(M₁d)/2)`.
pub fn w1_bound_single(big_m1: f64, d: usize, rho: f64) -> Result<BiasBound> {
    check_rho(rho)?;
    let df = d as f64;
    let a = rho * df.sqrt();
    let b = rho * rho * (big_m1 * df).sqrt() / 2.0;
    let (value, branch) = if a <= b { (a, "rho-sqrt-d") } else { (b, "rho2-sqrt-md") };
    Ok(BiasBound {
        value,
        raw: value,
        distance: Distance::W1,
        kind: BoundKind::Wasserstein,
        validity: "single split with A_1 = I".into(),
        valid: true,
        linearization: None,
        branch: Some(branch),
    })
}

/// π_ρ for the Gaussian test models.
#[derive(Debug, Clone, PartialEq)]
pub enum PiRho {
    /// Independent coordinates `N(meanₖ, varₖ)`.
    Gaussian { mean: Vec<f64>, var: Vec<f64> },
    /// `½N(a, sI) + ½N(−a, sI)`.
    Mixture { a: Vec<f64>, var: f64 },
}

impl PiRho {
    /// Law of `⟨θ, u⟩` for a direction `u`.
    pub fn project(&self, u: &[f64]) -> Mixture1d {
        match self {
            PiRho::Gaussian { mean, var } => {
                let m = mean.iter().zip(u).map(|(a, b)| a * b).sum();
                let v = var.iter().zip(u).map(|(a, b)| a * b * b).sum();
                Mixture1d::single(Gaussian1d::new(m, v))
            }
            PiRho::Mixture { a, var } => {
                let m: f64 = a.iter().zip(u).map(|(a, b)| a * b).sum();
                let v = var * u.iter().map(|x| x * x).sum::<f64>();
                Mixture1d { components: vec![(0.5, Gaussian1d::new(m, v)), (0.5, Gaussian1d::new(-m, v))] }
            }
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            PiRho::Gaussian { mean, .. } => mean.clone(),
            PiRho::Mixture { a, .. } => vec![0.0; a.len()],
        }
    }
}

/// Closed-form π_ρ; `ρ = 0` gives π itself.
pub fn pi_rho_closed_form(model: &TestModel, rho: f64) -> Result<PiRho> {
    check_rho(rho)?;
    let r2 = rho * rho;
    match model {
        TestModel::ToyGaussian1 { sigma, b, mu } => {
            Ok(PiRho::Gaussian { mean: vec![*mu], var: vec![(sigma * sigma + r2) / *b as f64] })
        }
        TestModel::ToyGaussian2 { sigma, b, mu } => {
            Ok(PiRho::Gaussian { mean: vec![*mu], var: vec![sigma * sigma / *b as f64 + r2] })
        }
        TestModel::AnisoGaussian { q } => {
            if q.iter().any(|v| !(*v > 0.0)) {
                return Err(invalid("q", "precisions must be positive"));
            }
            Ok(PiRho::Gaussian { mean: vec![0.0; q.len()], var: q.iter().map(|v| 1.0 / v + r2).collect() })
        }
        TestModel::GaussianMixture { a } => Ok(PiRho::Mixture { a: a.clone(), var: 1.0 + r2 }),
        _ => Err(Error::UnsupportedModel(format!("no closed-form smoothed marginal for {}", model.name()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lipschitz_bound_is_zero_at_zero_and_increasing() {
        assert_eq!(tv_bound_lipschitz(&[1.0], &[1], 0.0).unwrap().value, 0.0);
        let mut prev = 0.0;
        for k in 1..=50 {
            let rho = 0.02 * k as f64;
            let v = tv_bound_lipschitz(&[1.0, 0.5], &[1, 3], rho).unwrap().value;
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn lipschitz_small_rho_slope() {
        // For d = 1 the exact slope at 0 is 2/D₋₁(0) = 2√(2/π), below the
        // stated linearization 2ρL.
        let rho = 1e-4;
        let b = tv_bound_lipschitz(&[1.0], &[1], rho).unwrap();
        let slope = b.value / rho;
        assert!((slope - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-3);
        assert!(b.value <= b.linearization.unwrap());
    }

    #[test]
    fn strongly_convex_single_hand_value() {
        let b = tv_bound_single(1.0, 60, (1.0f64 / 600.0).sqrt()).unwrap();
        assert!((b.value - 0.05).abs() < 1e-15);
        assert_eq!(tv_bound_single(1.0, 60, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn wasserstein_branches() {
        let b = w1_bound_single(1.0, 1, 0.1).unwrap();
        assert!((b.value - 0.005).abs() < 1e-15);
        assert_eq!(b.branch, Some("rho2-sqrt-md"));
        let big: f64 = 4.0;
        let cross = 2.0 / big.sqrt();
        let lo = w1_bound_single(big, 3, cross * 0.99).unwrap();
        let hi = w1_bound_single(big, 3, cross * 1.01).unwrap();
        assert_eq!(lo.branch, Some("rho2-sqrt-md"));
        assert_eq!(hi.branch, Some("rho-sqrt-d"));
    }

    #[test]
    fn smoothed_marginals() {
        let p = pi_rho_closed_form(&TestModel::toy1(3.0, 10, 0.2), 1.0).unwrap();
        assert_eq!(p, PiRho::Gaussian { mean: vec![0.2], var: vec![1.0] });
        let p = pi_rho_closed_form(&TestModel::toy2(3.0, 10, 0.0), 1.0).unwrap();
        assert_eq!(p, PiRho::Gaussian { mean: vec![0.0], var: vec![1.9] });
        let p = pi_rho_closed_form(&TestModel::mixture(2), 0.5).unwrap();
        assert!(matches!(p, PiRho::Mixture { var, .. } if (var - 1.25).abs() < 1e-15));
        assert!(pi_rho_closed_form(&TestModel::logistic_split1(2, 10, 1), 0.5).is_err());
    }
}
