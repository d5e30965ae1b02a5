//! Split models `U(θ) = Σᵢ Uᵢ(Aᵢθ)`, their constants, minimizer search and
//! the centering transform.

mod linear;
pub mod potentials;
pub mod zoo;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::lambda_extremes;
use crate::rng::StreamRng;

pub use linear::{GramFactor, LinearOp};

/// Certified constants of a potential: strong convexity `m`, smoothness
/// `big_m` and Lipschitz constant `lipschitz`. Infinite values mean the
/// property does not hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub m: f64,
    pub big_m: f64,
    pub lipschitz: f64,
}

impl Constants {
    pub fn new(m: f64, big_m: f64, lipschitz: f64) -> Result<Self> {
        if !(m >= 0.0) || m.is_infinite() {
            return Err(crate::error::invalid("m", format!("must be finite and >= 0, got {m}")));
        }
        if !(big_m >= m) {
            return Err(crate::error::invalid("M", format!("must satisfy M >= m, got M={big_m}, m={m}")));
        }
        if !(lipschitz >= 0.0) {
            return Err(crate::error::invalid("L", format!("must be >= 0, got {lipschitz}")));
        }
        Ok(Constants { m, big_m, lipschitz })
    }

    pub fn is_smooth(&self) -> bool {
        self.big_m.is_finite()
    }
}

/// A convex potential on ℝ^{dᵢ}.
pub trait Potential: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, z: &[f64]) -> f64;
    /// Writes ∇U(z) (a subgradient for non-smooth potentials) into `grad`.
    fn gradient(&self, z: &[f64], grad: &mut [f64]);
    fn constants(&self) -> Constants;
    /// Closed-form sampler for the conditional `exp(−U(z) − ‖z − y‖²/(2ρ²))`.
    fn exact_conditional(&self) -> Option<&dyn ExactConditional> {
        None
    }
}

/// Exact sampler for `exp(−U(z) − ‖z − center‖²/(2ρ²))`.
pub trait ExactConditional: Send + Sync {
    fn sample(&self, center: &[f64], rho: f64, rng: &mut StreamRng, out: &mut [f64]);
}

/// One term `Uᵢ(Aᵢθ)` of a split model.
#[derive(Debug, Clone)]
pub struct SplitFactor {
    pub a: LinearOp,
    pub potential: Arc<dyn Potential>,
}

impl SplitFactor {
    pub fn new(a: LinearOp, potential: Arc<dyn Potential>) -> Result<Self> {
        if a.rows() != potential.dim() {
            return Err(Error::DimensionMismatch { expected: potential.dim(), found: a.rows() });
        }
        Ok(SplitFactor { a, potential })
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn constants(&self) -> Constants {
        self.potential.constants()
    }
}

/// Immutable split model with its cached Gram matrix `G = Σ AᵢᵀAᵢ`.
#[derive(Debug, Clone)]
pub struct SplitModel {
    d: usize,
    factors: Vec<SplitFactor>,
    gram: DMatrix<f64>,
    gram_factor: GramFactor,
    theta_star: Option<Vec<f64>>,
}

impl SplitModel {
    pub fn new(d: usize, factors: Vec<SplitFactor>) -> Result<Self> {
        if d == 0 || factors.is_empty() {
            return Err(crate::error::invalid("factors", "need d >= 1 and at least one factor"));
        }
        for f in &factors {
            if f.a.cols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: f.a.cols() });
            }
        }
        let mut gram = DMatrix::zeros(d, d);
        for f in &factors {
            f.a.gram_add(&mut gram, 1.0);
        }
        let gram_factor = GramFactor::new(&gram)?;
        Ok(SplitModel { d, factors, gram, gram_factor, theta_star: None })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn factors(&self) -> &[SplitFactor] {
        &self.factors
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_factor(&self) -> &GramFactor {
        &self.gram_factor
    }

    /// Minimizer recorded by [`center_model`], if any.
    pub fn theta_star(&self) -> Option<&[f64]> {
        self.theta_star.as_deref()
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: theta.len() });
        }
        Ok(())
    }

    /// `U(θ) = Σᵢ Uᵢ(Aᵢθ)`.
    pub fn potential_u(&self, theta: &[f64]) -> Result<f64> {
        self.check_len(theta)?;
        let mut buf = Vec::new();
        let mut total = 0.0;
        for f in &self.factors {
            buf.resize(f.dim(), 0.0);
            f.a.apply(theta, &mut buf);
            total += f.potential.value(&buf);
        }
        Ok(total)
    }

    /// `∇U(θ) = Σᵢ Aᵢᵀ∇Uᵢ(Aᵢθ)`.
    pub fn potential_grad_u(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_len(theta)?;
        let mut out = vec![0.0; self.d];
        self.grad_into(theta, &mut out);
        Ok(out)
    }

    pub(crate) fn grad_into(&self, theta: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut z = Vec::new();
        let mut g = Vec::new();
        for f in &self.factors {
            z.resize(f.dim(), 0.0);
            g.resize(f.dim(), 0.0);
            f.a.apply(theta, &mut z);
            f.potential.gradient(&z, &mut g);
            f.a.apply_t_add(&g, out);
        }
    }

    /// `Σᵢ wᵢ AᵢᵀAᵢ` for per-factor weights.
    pub fn weighted_gram(&self, weights: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.d, self.d);
        for (f, &w) in self.factors.iter().zip(weights) {
            f.a.gram_add(&mut out, w);
        }
        out
    }

    pub fn constants(&self) -> Vec<Constants> {
        self.factors.iter().map(SplitFactor::constants).collect()
    }
}

/// Result of [`find_minimizer`].
#[derive(Debug, Clone, PartialEq)]
pub struct Minimizer {
    pub theta_star: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gradient descent with step `1/λ_max(Σ MᵢAᵢᵀAᵢ)` from the origin. `tol`
/// and `max_iter` default to `1e-10·(1+‖∇U(0)‖)` and `10·κ·log(1/tol)`.
pub fn find_minimizer(model: &SplitModel, tol: Option<f64>, max_iter: Option<usize>) -> Result<Minimizer> {
    let consts = model.constants();
    if let Some(i) = consts.iter().position(|c| !c.is_smooth()) {
        return Err(Error::NotSmooth { factor: i });
    }
    let big: Vec<f64> = consts.iter().map(|c| c.big_m).collect();
    let small: Vec<f64> = consts.iter().map(|c| c.m).collect();
    let (_, l_max) = lambda_extremes(&model.weighted_gram(&big))?;
    let (m_u, _) = lambda_extremes(&model.weighted_gram(&small))?;
    if !(m_u > 0.0) {
        return Err(Error::NotStronglyConvex);
    }
    let mut theta = vec![0.0; model.dim()];
    let mut grad = vec![0.0; model.dim()];
    model.grad_into(&theta, &mut grad);
    let tol = tol.unwrap_or(1e-10 * (1.0 + norm(&grad)));
    let kappa = l_max / m_u;
    let max_iter = max_iter.unwrap_or_else(|| (10.0 * kappa * (1.0 / tol).ln().max(1.0)).ceil() as usize + 10);
    let step = 1.0 / l_max;
    let mut iterations = 0;
    loop {
        let g = norm(&grad);
        if g <= tol {
            return Ok(Minimizer { theta_star: theta, grad_norm: g, iterations });
        }
        if iterations >= max_iter {
            return Err(Error::NonConvergence { iterations, residual: g });
        }
        for (t, gi) in theta.iter_mut().zip(&grad) {
            *t -= step * gi;
        }
        model.grad_into(&theta, &mut grad);
        iterations += 1;
    }
}

/// Replaces each `Uᵢ` by `Uᵢ(z) − ⟨z, ∇Uᵢ(Aᵢθ*)⟩`, so every factor is
/// stationary at `Aᵢθ*`, and records `θ*` on the returned model.
pub fn center_model(model: &SplitModel, theta_star: &[f64]) -> Result<SplitModel> {
    model.check_len(theta_star)?;
    let mut factors = Vec::with_capacity(model.factors.len());
    for f in &model.factors {
        let mut z = vec![0.0; f.dim()];
        let mut g = vec![0.0; f.dim()];
        f.a.apply(theta_star, &mut z);
        f.potential.gradient(&z, &mut g);
        let potential: Arc<dyn Potential> = if g.iter().all(|&v| v == 0.0) {
            f.potential.clone()
        } else {
            potentials::Tilted::wrap(f.potential.clone(), g)
        };
        factors.push(SplitFactor { a: f.a.clone(), potential });
    }
    Ok(SplitModel {
        d: model.d,
        factors,
        gram: model.gram.clone(),
        gram_factor: model.gram_factor.clone(),
        theta_star: Some(theta_star.to_vec()),
    })
}

/// Largest factor gradient `maxᵢ ‖∇Uᵢ(Aᵢθ)‖`.
pub fn max_factor_gradient(model: &SplitModel, theta: &[f64]) -> Result<f64> {
    model.check_len(theta)?;
    let mut worst: f64 = 0.0;
    for f in &model.factors {
        let mut z = vec![0.0; f.dim()];
        let mut g = vec![0.0; f.dim()];
        f.a.apply(theta, &mut z);
        f.potential.gradient(&z, &mut g);
        worst = worst.max(norm(&g));
    }
    Ok(worst)
}

/// Aggregate constants of a split model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConstants {
    /// `λ_min(Σ mᵢAᵢᵀAᵢ)`.
    pub m_u: f64,
    /// `‖AᵀA‖ (maxᵢ Mᵢ)² / m_U`.
    pub sigma2_u: f64,
    /// `‖AᵀA‖ = λ_max(G)`.
    pub gram_norm: f64,
    /// `λ_max(Σ MᵢAᵢᵀAᵢ)`.
    pub smooth_max: f64,
    /// `log det Σ MᵢAᵢᵀAᵢ − log det Σ mᵢAᵢᵀAᵢ`.
    pub log_det_ratio: f64,
    /// `Σ dᵢMᵢ`.
    pub sum_d_m: f64,
    /// `Σ dᵢ`.
    pub sum_d: usize,
    pub max_big_m: f64,
}

fn log_det_spd(s: &DMatrix<f64>) -> f64 {
    match s.clone().cholesky() {
        Some(c) => 2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>(),
        None => f64::NEG_INFINITY,
    }
}

pub fn model_constants(model: &SplitModel) -> Result<ModelConstants> {
    let consts = model.constants();
    let small: Vec<f64> = consts.iter().map(|c| c.m).collect();
    let big: Vec<f64> = consts.iter().map(|c| c.big_m).collect();
    let max_big_m = big.iter().cloned().fold(0.0, f64::max);
    let small_gram = model.weighted_gram(&small);
    let (m_u, _) = lambda_extremes(&small_gram)?;
    let m_u = m_u.max(0.0);
    let (_, gram_norm) = lambda_extremes(model.gram())?;
    let (smooth_max, log_det_ratio) = if max_big_m.is_finite() {
        let big_gram = model.weighted_gram(&big);
        let (_, smax) = lambda_extremes(&big_gram)?;
        (smax, log_det_spd(&big_gram) - log_det_spd(&small_gram))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let sigma2_u = if m_u > 0.0 { gram_norm * max_big_m * max_big_m / m_u } else { f64::INFINITY };
    let sum_d_m = model.factors.iter().map(|f| f.dim() as f64 * f.constants().big_m).sum();
    let sum_d = model.factors.iter().map(SplitFactor::dim).sum();
    Ok(ModelConstants { m_u, sigma2_u, gram_norm, smooth_max, log_det_ratio, sum_d_m, sum_d, max_big_m })
}

/// Single-split model `Ũ(θ) = U(θ) + (λ/2)‖θ − center‖²` used by the
/// plan for potentials without strong convexity.
pub fn regularize(model: &SplitModel, lambda: f64, center: &[f64]) -> Result<SplitModel> {
    if !(lambda > 0.0) {
        return Err(crate::error::invalid("lambda", "must be positive"));
    }
    model.check_len(center)?;
    if model.num_factors() != 1 || !matches!(model.factors[0].a, LinearOp::Identity(_)) {
        return Err(Error::UnsupportedModel("regularization needs a single factor with A = I".into()));
    }
    let f = &model.factors[0];
    let potential = potentials::Regularized::wrap(f.potential.clone(), lambda, center.to_vec());
    SplitModel::new(model.d, vec![SplitFactor { a: f.a.clone(), potential }])
}

#[cfg(test)]
mod tests {
    use super::potentials::*;
    use super::*;

    fn toy1() -> SplitModel {
        zoo::build(&zoo::TestModel::toy1(3.0, 10, 0.0)).unwrap()
    }

    #[test]
    fn toy_potential_value() {
        let m = toy1();
        assert!((m.potential_u(&[3.0]).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn zero_potential_is_zero() {
        let zero: Arc<dyn Potential> = Arc::new(Quadratic::isotropic(2, 0.0, vec![0.0; 2]).unwrap());
        let m = SplitModel::new(2, vec![SplitFactor::new(LinearOp::Identity(2), zero).unwrap()]).unwrap();
        assert_eq!(m.potential_u(&[1.3, -4.0]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let m = toy1();
        assert!(matches!(m.potential_u(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_singular_gram() {
        let p: Arc<dyn Potential> = Arc::new(Quadratic::isotropic(1, 1.0, vec![0.0]).unwrap());
        let f = SplitFactor::new(LinearOp::Row(vec![1.0, 0.0]), p).unwrap();
        assert!(matches!(SplitModel::new(2, vec![f]), Err(Error::SingularGram)));
    }

    #[test]
    fn gram_matches_recomputed_sum() {
        let rows = [vec![1.0, 2.0, 0.5], vec![-0.3, 1.0, 2.0], vec![0.0, 0.7, -1.0], vec![1.0, 1.0, 1.0]];
        let factors = rows
            .iter()
            .map(|r| {
                let p: Arc<dyn Potential> = Arc::new(Quadratic::isotropic(1, 1.0, vec![0.0]).unwrap());
                SplitFactor::new(LinearOp::Row(r.clone()), p).unwrap()
            })
            .collect();
        let m = SplitModel::new(3, factors).unwrap();
        let mut want = DMatrix::zeros(3, 3);
        for r in &rows {
            let v = nalgebra::DVector::from_column_slice(r);
            want += &v * v.transpose();
        }
        assert!((m.gram() - &want).amax() <= 1e-12 * want.amax());
    }

    #[test]
    fn minimizer_of_toy_and_mixture() {
        let m = find_minimizer(&toy1(), None, None).unwrap();
        assert_eq!(m.theta_star, vec![0.0]);
        assert!(m.iterations <= 1);
        let mix = zoo::build(&zoo::TestModel::mixture(5)).unwrap();
        let m = find_minimizer(&mix, None, None).unwrap();
        assert!(m.grad_norm <= 1e-10);
        assert!(norm(&m.theta_star) <= 1e-10);
    }

    #[test]
    fn minimizer_of_random_quadratic() {
        let d = 10;
        let c: Vec<f64> = (0..d).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = DMatrix::from_fn(d, d, |i, j| ((i * 3 + j * 5) % 7) as f64 / 7.0 - 0.4);
        let q = &b * b.transpose() + DMatrix::identity(d, d) * 0.5;
        let p: Arc<dyn Potential> = Arc::new(Quadratic::dense(q, c.clone()).unwrap());
        let model = SplitModel::new(d, vec![SplitFactor::new(LinearOp::Identity(d), p).unwrap()]).unwrap();
        let m = find_minimizer(&model, Some(1e-11), None).unwrap();
        for (a, b) in m.theta_star.iter().zip(&c) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn minimizer_refuses_flat_model() {
        let p: Arc<dyn Potential> = Arc::new(Quadratic::isotropic(1, 0.0, vec![0.0]).unwrap());
        let model = SplitModel::new(1, vec![SplitFactor::new(LinearOp::Identity(1), p).unwrap()]).unwrap();
        assert!(matches!(find_minimizer(&model, None, None), Err(Error::NotStronglyConvex)));
    }

    #[test]
    fn constants_of_simple_models() {
        let p: Arc<dyn Potential> = Arc::new(Quadratic::isotropic(3, 1.0, vec![0.0; 3]).unwrap());
        let model = SplitModel::new(3, vec![SplitFactor::new(LinearOp::Identity(3), p).unwrap()]).unwrap();
        let c = model_constants(&model).unwrap();
        assert!((c.m_u - 1.0).abs() < 1e-14 && (c.sigma2_u - 1.0).abs() < 1e-14);
        assert!(c.log_det_ratio.abs() < 1e-14);

        let mix = model_constants(&zoo::build(&zoo::TestModel::mixture(4)).unwrap()).unwrap();
        assert!((mix.sigma2_u - 2.0).abs() < 1e-12);

        let toy = model_constants(&toy1()).unwrap();
        assert!((toy.m_u - 10.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn centering_zeroes_factor_gradients_and_is_idempotent() {
        let model = zoo::build(&zoo::TestModel::logistic_split1(3, 60, 11)).unwrap();
        let ms = find_minimizer(&model, None, None).unwrap();
        let c1 = center_model(&model, &ms.theta_star).unwrap();
        assert!(max_factor_gradient(&c1, &ms.theta_star).unwrap() <= 1e-8);
        let c2 = center_model(&c1, &ms.theta_star).unwrap();
        assert!(max_factor_gradient(&c2, &ms.theta_star).unwrap() <= 1e-8);
        let theta = [0.3, -0.2, 1.1];
        let g0 = model.potential_grad_u(&theta).unwrap();
        let g1 = c1.potential_grad_u(&theta).unwrap();
        for (a, b) in g0.iter().zip(&g1) {
            assert!((a - b).abs() < 1e-8);
        }
        assert_eq!(model.constants(), c1.constants());
    }

    #[test]
    fn regularized_constants() {
        let flat: Arc<dyn Potential> = Arc::new(Quadratic::diagonal(vec![0.0, 2.0], vec![0.0; 2]).unwrap());
        let model = SplitModel::new(2, vec![SplitFactor::new(LinearOp::Identity(2), flat).unwrap()]).unwrap();
        let r = regularize(&model, 0.3, &[0.0, 0.0]).unwrap();
        let c = r.constants()[0];
        assert!((c.m - 0.3).abs() < 1e-15 && (c.big_m - 2.3).abs() < 1e-15);
    }
}
