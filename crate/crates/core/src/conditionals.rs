//! Exact samplers for the two Gibbs blocks.
//!
//! The θ-block is Gaussian, `N(G⁻¹Σ Aᵢᵀzᵢ, ρ²G⁻¹)`, and is drawn through
//! the cached Cholesky factor of `G`. Each z-block has density proportional
//! to `exp(−Vᵢ)` with `Vᵢ(z) = Uᵢ(z) + ‖Aᵢθ − z‖²/(2ρ²)`. It is drawn in
//! closed form when the potential provides a sampler, and otherwise by
//! rejection from an isotropic Gaussian centred at a gradient-descent warm
//! start `z̃`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::model::{norm, GramFactor, Potential, SplitFactor, SplitModel};
use crate::rng::StreamRng;

/// Gaussian θ-conditional for a fixed `(model, ρ)`.
#[derive(Debug, Clone)]
pub struct ThetaConditional {
    rho: f64,
    factor: GramFactor,
}

impl ThetaConditional {
    pub fn new(model: &SplitModel, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(invalid("rho", "must be positive and finite"));
        }
        Ok(ThetaConditional { rho, factor: model.gram_factor().clone() })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn factor(&self) -> &GramFactor {
        &self.factor
    }

    /// `Σ Aᵢᵀzᵢ`.
    pub fn rhs(model: &SplitModel, z_blocks: &[Vec<f64>], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (f, z) in model.factors().iter().zip(z_blocks) {
            f.a.apply_t_add(z, out);
        }
    }

    /// Conditional mean `G⁻¹ rhs`.
    pub fn mean_into(&self, rhs: &[f64], out: &mut [f64]) {
        out.copy_from_slice(rhs);
        self.factor.solve(out);
    }

    /// Draw `μ + ρL⁻ᵀξ`.
    pub fn sample_into(&self, rhs: &[f64], rng: &mut StreamRng, out: &mut [f64]) {
        self.mean_into(rhs, out);
        let mut xi: Vec<f64> = (0..out.len()).map(|_| StandardNormal.sample(&mut *rng)).collect();
        self.factor.solve_upper(&mut xi);
        out.iter_mut().zip(&xi).for_each(|(o, x)| *o += self.rho * x);
    }
}

/// Draws θ given the z-blocks.
pub fn sample_theta(
    cond: &ThetaConditional,
    model: &SplitModel,
    z_blocks: &[Vec<f64>],
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    if z_blocks.len() != model.num_factors() {
        return Err(Error::DimensionMismatch { expected: model.num_factors(), found: z_blocks.len() });
    }
    for (f, z) in model.factors().iter().zip(z_blocks) {
        if z.len() != f.dim() {
            return Err(Error::DimensionMismatch { expected: f.dim(), found: z.len() });
        }
    }
    let mut rhs = vec![0.0; model.dim()];
    ThetaConditional::rhs(model, z_blocks, &mut rhs);
    let mut out = vec![0.0; model.dim()];
    cond.sample_into(&rhs, rng, &mut out);
    Ok(out)
}

/// Diagnostics of one rejection draw.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RejectionReport {
    pub proposals_used: u64,
    pub warm_start_gd_steps: usize,
    pub expected_bound: f64,
}

/// Settings of the rejection sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectionConfig {
    pub max_proposals: u64,
    pub max_gd_steps: usize,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        RejectionConfig { max_proposals: 10_000, max_gd_steps: 1_000_000 }
    }
}

/// `Vᵢ(z)` and `∇Vᵢ(z)` for a potential and a centre `y = Aᵢθ`.
struct Conditional<'a> {
    potential: &'a dyn Potential,
    center: &'a [f64],
    inv_r2: f64,
}

impl Conditional<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        let sq: f64 = z.iter().zip(self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        self.potential.value(z) + 0.5 * self.inv_r2 * sq
    }

    fn gradient(&self, z: &[f64], g: &mut [f64]) {
        self.potential.gradient(z, g);
        for i in 0..z.len() {
            g[i] += self.inv_r2 * (z[i] - self.center[i]);
        }
    }
}

/// Threshold `(2/7)√(1/ρ² + m)/√d` on `‖∇Vᵢ(z̃)‖`.
pub fn warm_start_threshold(m: f64, d: usize, rho: f64) -> f64 {
    2.0 / 7.0 * (1.0 / (rho * rho) + m).sqrt() / (d as f64).sqrt()
}

/// Upper bound on the number of warm-start steps started at `z⁰` with
/// initial gradient norm `g0`.
pub fn warm_start_step_bound(g0: f64, m: f64, big_m: f64, d: usize, rho: f64) -> usize {
    let thr = warm_start_threshold(m, d, rho);
    if g0 <= thr {
        return 0;
    }
    let r2 = rho * rho;
    let kappa = (1.0 + r2 * big_m) / (1.0 + r2 * m);
    let rate = -(1.0 - 1.0 / kappa).ln();
    (((g0.ln() - thr.ln()) / rate).ceil() as usize).max(1)
}

fn gradient_descent(
    v: &Conditional<'_>,
    big_m: f64,
    tol: f64,
    max_steps: usize,
    z: &mut [f64],
    g: &mut [f64],
) -> Result<usize> {
    let step = 1.0 / (v.inv_r2 + big_m);
    v.gradient(z, g);
    let mut steps = 0;
    loop {
        let gn = norm(g);
        if gn <= tol {
            return Ok(steps);
        }
        if steps >= max_steps {
            return Err(Error::NonConvergence { iterations: steps, residual: gn });
        }
        for i in 0..z.len() {
            z[i] -= step * g[i];
        }
        v.gradient(z, g);
        steps += 1;
    }
}

/// Quantities derived from the warm start: `Ã`, and the two pieces of the
/// acceptance exponent and of the expected proposal count.
#[derive(Debug, Clone, Copy)]
struct Envelope {
    a_tilde: f64,
    /// `‖∇V(z̃)‖²/(2(1/ρ² + m − Ã))`, zero when the gradient vanishes.
    first: f64,
    ln_expected: f64,
}

fn envelope(g: f64, m: f64, big_m: f64, d: usize, rho: f64) -> Envelope {
    let df = d as f64;
    let a = 1.0 / (rho * rho) + m;
    let h = g * g / (2.0 * df);
    let root = (h * h + 2.0 * a * h).sqrt();
    let gap = if h == 0.0 { 0.0 } else { 2.0 * a * h / (root + h) };
    let a_tilde = a - gap;
    let first = df * (root + h) / (2.0 * a);
    let top = 1.0 / (rho * rho) + big_m;
    let ln_expected = 0.5 * df * (top / a_tilde).ln() + first - g * g / (2.0 * top);
    Envelope { a_tilde, first, ln_expected }
}

/// Expected number of proposals `Eᵢ` for the warm start `z̃`.
pub fn expected_proposals_bound(factor: &SplitFactor, theta: &[f64], z_tilde: &[f64], rho: f64) -> f64 {
    let mut center = vec![0.0; factor.dim()];
    factor.a.apply(theta, &mut center);
    let v = Conditional { potential: factor.potential.as_ref(), center: &center, inv_r2: 1.0 / (rho * rho) };
    let mut g = vec![0.0; factor.dim()];
    v.gradient(z_tilde, &mut g);
    let c = factor.constants();
    envelope(norm(&g), c.m, c.big_m, factor.dim(), rho).ln_expected.exp()
}

/// Sufficient condition for `Eᵢ ≤ 2`: `ρ²(2dᵢ(Mᵢ − mᵢ) − mᵢ) ≤ 1` and a
/// warm start below [`warm_start_threshold`].
pub fn proposals_at_most_two(m: f64, big_m: f64, d: usize, rho: f64, grad_norm: f64) -> bool {
    rho * rho * (2.0 * d as f64 * (big_m - m) - m) <= 1.0 && grad_norm <= warm_start_threshold(m, d, rho)
}

/// Rejection draw from `exp(−U(z) − ‖z − center‖²/(2ρ²))`. When `warm`
/// is given, gradient descent starts there instead of at `center`.
pub fn sample_conditional_rejection(
    potential: &dyn Potential,
    center: &[f64],
    rho: f64,
    rng: &mut StreamRng,
    config: &RejectionConfig,
    warm: Option<&[f64]>,
    out: &mut [f64],
) -> Result<RejectionReport> {
    let c = potential.constants();
    if !c.is_smooth() {
        return Err(Error::NotSmooth { factor: 0 });
    }
    if !(rho > 0.0) {
        return Err(invalid("rho", "must be positive"));
    }
    let d = potential.dim();
    let v = Conditional { potential, center, inv_r2: 1.0 / (rho * rho) };
    let mut z_tilde = warm.unwrap_or(center).to_vec();
    let mut g = vec![0.0; d];
    let thr = warm_start_threshold(c.m, d, rho);
    let bound = if cfg!(debug_assertions) && warm.is_none() {
        v.gradient(&z_tilde, &mut g);
        Some(warm_start_step_bound(norm(&g), c.m, c.big_m, d, rho))
    } else {
        None
    };
    let steps = gradient_descent(&v, c.big_m, thr, config.max_gd_steps, &mut z_tilde, &mut g)?;
    if let Some(bound) = bound {
        debug_assert!(steps <= bound, "warm start took {steps} steps, bound {bound}");
    }
    finish_rejection(&v, c.m, c.big_m, rho, rng, config, &z_tilde, &g, steps, out)
}

#[allow(clippy::too_many_arguments)]
fn finish_rejection(
    v: &Conditional<'_>,
    m: f64,
    big_m: f64,
    rho: f64,
    rng: &mut StreamRng,
    config: &RejectionConfig,
    z_tilde: &[f64],
    g: &[f64],
    steps: usize,
    out: &mut [f64],
) -> Result<RejectionReport> {
    let d = z_tilde.len();
    let env = envelope(norm(g), m, big_m, d, rho);
    let sd = 1.0 / env.a_tilde.sqrt();
    let v_tilde = v.value(z_tilde);
    for proposals in 1..=config.max_proposals {
        let mut sq = 0.0;
        for i in 0..d {
            let xi: f64 = StandardNormal.sample(&mut *rng);
            out[i] = z_tilde[i] + sd * xi;
            sq += (out[i] - z_tilde[i]) * (out[i] - z_tilde[i]);
        }
        let log_accept = -env.first - (v.value(out) - v_tilde) + 0.5 * env.a_tilde * sq;
        let u: f64 = rng.random();
        if u.ln() < log_accept {
            return Ok(RejectionReport {
                proposals_used: proposals,
                warm_start_gd_steps: steps,
                expected_bound: env.ln_expected.exp(),
            });
        }
    }
    Err(Error::AcceptanceStall { proposals: config.max_proposals })
}

/// Rejection draw of `zᵢ | θ` for one split factor.
pub fn sample_z_rejection(
    factor: &SplitFactor,
    theta: &[f64],
    rho: f64,
    rng: &mut StreamRng,
    config: &RejectionConfig,
) -> Result<(Vec<f64>, RejectionReport)> {
    let mut center = vec![0.0; factor.dim()];
    factor.a.apply(theta, &mut center);
    let mut out = vec![0.0; factor.dim()];
    let report = sample_conditional_rejection(factor.potential.as_ref(), &center, rho, rng, config, None, &mut out)?;
    Ok((out, report))
}

/// Closed-form draw of `zᵢ | θ` for potentials that provide one.
pub fn sample_z_closed_form(factor: &SplitFactor, theta: &[f64], rho: f64, rng: &mut StreamRng) -> Result<Vec<f64>> {
    let exact = factor
        .potential
        .exact_conditional()
        .ok_or_else(|| Error::UnsupportedModel("potential has no closed-form conditional".into()))?;
    let mut center = vec![0.0; factor.dim()];
    factor.a.apply(theta, &mut center);
    let mut out = vec![0.0; factor.dim()];
    exact.sample(&center, rho, rng, &mut out);
    Ok(out)
}

/// Mode of `exp(−U(z) − ‖z − center‖²/(2ρ²))` by gradient descent from
/// `center` with step `1/(1/ρ² + M)`, stopped at `‖∇V‖ ≤ tol`.
pub fn conditional_mode(
    potential: &dyn Potential,
    center: &[f64],
    rho: f64,
    tol: f64,
    out: &mut [f64],
) -> Result<usize> {
    let c = potential.constants();
    if !c.is_smooth() {
        return Err(Error::NotSmooth { factor: 0 });
    }
    let v = Conditional { potential, center, inv_r2: 1.0 / (rho * rho) };
    out.copy_from_slice(center);
    let mut g = vec![0.0; out.len()];
    gradient_descent(&v, c.big_m, tol, 10_000_000, out, &mut g)
}

/// `‖∇Vᵢ(z)‖` for a factor at parameter θ.
pub fn conditional_gradient_norm(factor: &SplitFactor, theta: &[f64], z: &[f64], rho: f64) -> f64 {
    let mut center = vec![0.0; factor.dim()];
    factor.a.apply(theta, &mut center);
    let v = Conditional { potential: factor.potential.as_ref(), center: &center, inv_r2: 1.0 / (rho * rho) };
    let mut g = vec![0.0; z.len()];
    v.gradient(z, &mut g);
    norm(&g)
}
