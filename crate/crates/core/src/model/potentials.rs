//! Concrete potentials.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use super::{Constants, ExactConditional, Potential};
use crate::error::{invalid, Error, Result};
use crate::numerics::lambda_extremes;
use crate::rng::StreamRng;

/// `log(1 + eˣ)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic function `1/(1 + e^{−x})`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
enum Spectrum {
    Diagonal(Vec<f64>),
    /// Eigenvalues and column-major eigenvectors.
    Dense {
        values: Vec<f64>,
        vectors: DMatrix<f64>,
    },
}

/// Gaussian potential `½(z − c)ᵀQ(z − c)`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    q: DMatrix<f64>,
    center: Vec<f64>,
    spectrum: Spectrum,
    constants: Constants,
}

impl Quadratic {
    pub fn isotropic(dim: usize, scale: f64, center: Vec<f64>) -> Result<Self> {
        Self::diagonal(vec![scale; dim], center)
    }

    pub fn diagonal(q: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        if q.len() != center.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), found: center.len() });
        }
        if q.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(invalid("q", "diagonal precision must be finite and >= 0"));
        }
        let lo = q.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = q.iter().cloned().fold(0.0, f64::max);
        let qm = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&q));
        Ok(Quadratic {
            q: qm,
            center,
            spectrum: Spectrum::Diagonal(q),
            constants: Constants::new(lo, hi, f64::INFINITY)?,
        })
    }

    pub fn dense(q: DMatrix<f64>, center: Vec<f64>) -> Result<Self> {
        if q.nrows() != center.len() {
            return Err(Error::DimensionMismatch { expected: q.nrows(), found: center.len() });
        }
        let (lo, hi) = lambda_extremes(&q)?;
        if lo < -1e-12 * hi.abs().max(1.0) {
            return Err(invalid("Q", "precision must be positive semidefinite"));
        }
        let eig = SymmetricEigen::new(q.clone());
        let values = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
        Ok(Quadratic {
            q,
            center,
            spectrum: Spectrum::Dense { values, vectors: eig.eigenvectors },
            constants: Constants::new(lo.max(0.0), hi.max(0.0), f64::INFINITY)?,
        })
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
}

impl Potential for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, z: &[f64]) -> f64 {
        match &self.spectrum {
            Spectrum::Diagonal(q) => {
                0.5 * q.iter().zip(z.iter().zip(&self.center)).map(|(q, (z, c))| q * (z - c) * (z - c)).sum::<f64>()
            }
            Spectrum::Dense { .. } => {
                let r = nalgebra::DVector::from_iterator(z.len(), z.iter().zip(&self.center).map(|(a, b)| a - b));
                0.5 * r.dot(&(&self.q * &r))
            }
        }
    }

    fn gradient(&self, z: &[f64], grad: &mut [f64]) {
        match &self.spectrum {
            Spectrum::Diagonal(q) => {
                for i in 0..z.len() {
                    grad[i] = q[i] * (z[i] - self.center[i]);
                }
            }
            Spectrum::Dense { .. } => {
                let n = z.len();
                for i in 0..n {
                    grad[i] = (0..n).map(|j| self.q[(i, j)] * (z[j] - self.center[j])).sum();
                }
            }
        }
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn exact_conditional(&self) -> Option<&dyn ExactConditional> {
        Some(self)
    }
}

impl ExactConditional for Quadratic {
    fn sample(&self, center: &[f64], rho: f64, rng: &mut StreamRng, out: &mut [f64]) {
        let inv = 1.0 / (rho * rho);
        match &self.spectrum {
            Spectrum::Diagonal(q) => {
                for i in 0..out.len() {
                    let p = q[i] + inv;
                    let mean = (q[i] * self.center[i] + center[i] * inv) / p;
                    let xi: f64 = StandardNormal.sample(rng);
                    out[i] = mean + xi / p.sqrt();
                }
            }
            Spectrum::Dense { values, vectors } => {
                let n = out.len();
                let mut rhs = vec![0.0; n];
                for i in 0..n {
                    rhs[i] = (0..n).map(|j| self.q[(i, j)] * self.center[j]).sum::<f64>() + center[i] * inv;
                }
                let mut w = vec![0.0; n];
                for k in 0..n {
                    let p = values[k] + inv;
                    let proj: f64 = (0..n).map(|i| vectors[(i, k)] * rhs[i]).sum();
                    let xi: f64 = StandardNormal.sample(rng);
                    w[k] = proj / p + xi / p.sqrt();
                }
                for i in 0..n {
                    out[i] = (0..n).map(|k| vectors[(i, k)] * w[k]).sum();
                }
            }
        }
    }
}

/// Scalar logistic negative log-likelihood with a Gaussian term,
/// `log(1 + e^{−z}) + (1 − y)z + αz²/2` for a label `y ∈ {0, 1}`.
#[derive(Debug, Clone)]
pub struct LogisticScalar {
    y: f64,
    alpha: f64,
}

impl LogisticScalar {
    pub fn new(y: f64, alpha: f64) -> Result<Self> {
        if y != 0.0 && y != 1.0 {
            return Err(invalid("y", "label must be 0 or 1"));
        }
        if !(alpha >= 0.0) {
            return Err(invalid("alpha", "must be >= 0"));
        }
        Ok(LogisticScalar { y, alpha })
    }
}

impl Potential for LogisticScalar {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, z: &[f64]) -> f64 {
        let z = z[0];
        softplus(-z) + (1.0 - self.y) * z + 0.5 * self.alpha * z * z
    }

    fn gradient(&self, z: &[f64], grad: &mut [f64]) {
        grad[0] = sigmoid(z[0]) - self.y + self.alpha * z[0];
    }

    fn constants(&self) -> Constants {
        let lip = if self.alpha == 0.0 { 1.0 } else { f64::INFINITY };
        Constants { m: self.alpha, big_m: self.alpha + 0.25, lipschitz: lip }
    }
}

/// Sum of logistic terms over a group of observations, as a function of the
/// full parameter: `Σⱼ ℓ(xⱼᵀz; yⱼ) + α(xⱼᵀz)²/2`.
#[derive(Debug, Clone)]
pub struct LogisticGroup {
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
    alpha: f64,
    constants: Constants,
}

impl LogisticGroup {
    pub fn new(xs: Vec<Vec<f64>>, ys: Vec<f64>, alpha: f64) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(invalid("xs", "need a non-empty group with one label per row"));
        }
        let d = xs[0].len();
        if xs.iter().any(|x| x.len() != d) {
            return Err(invalid("xs", "rows must share a dimension"));
        }
        if ys.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(invalid("ys", "labels must be 0 or 1"));
        }
        let mut s = DMatrix::zeros(d, d);
        for x in &xs {
            let v = nalgebra::DVector::from_column_slice(x);
            s += &v * v.transpose();
        }
        let (lo, hi) = lambda_extremes(&s)?;
        // Rank-deficient groups leave round-off in λ_min.
        let lo = if lo <= 1e-12 * hi { 0.0 } else { lo };
        let constants = Constants::new(alpha * lo, (alpha + 0.25) * hi, f64::INFINITY)?;
        Ok(LogisticGroup { xs, ys, alpha, constants })
    }
}

impl Potential for LogisticGroup {
    fn dim(&self) -> usize {
        self.xs[0].len()
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.xs
            .iter()
            .zip(&self.ys)
            .map(|(x, &y)| {
                let u = dot(x, z);
                softplus(-u) + (1.0 - y) * u + 0.5 * self.alpha * u * u
            })
            .sum()
    }

    fn gradient(&self, z: &[f64], grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (x, &y) in self.xs.iter().zip(&self.ys) {
            let u = dot(x, z);
            let s = sigmoid(u) - y + self.alpha * u;
            grad.iter_mut().zip(x).for_each(|(g, xi)| *g += s * xi);
        }
    }

    fn constants(&self) -> Constants {
        self.constants
    }
}

/// Potential of the equal-weight mixture `½N(a, I) + ½N(−a, I)`:
/// `½‖z − a‖² − log(1 + e^{−2zᵀa})`.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    a: Vec<f64>,
    constants: Constants,
}

impl GaussianMixture {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        let na2: f64 = a.iter().map(|v| v * v).sum();
        if !(na2 < 1.0) {
            return Err(invalid("a", "need ‖a‖ < 1 for strong convexity"));
        }
        Ok(GaussianMixture { a, constants: Constants::new(1.0 - na2, 1.0, f64::INFINITY)? })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }
}

impl Potential for GaussianMixture {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn value(&self, z: &[f64]) -> f64 {
        let sq: f64 = z.iter().zip(&self.a).map(|(z, a)| (z - a) * (z - a)).sum();
        0.5 * sq - softplus(-2.0 * dot(z, &self.a))
    }

    fn gradient(&self, z: &[f64], grad: &mut [f64]) {
        let s = 2.0 * sigmoid(-2.0 * dot(z, &self.a));
        for i in 0..z.len() {
            grad[i] = z[i] - self.a[i] + s * self.a[i];
        }
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn exact_conditional(&self) -> Option<&dyn ExactConditional> {
        Some(self)
    }
}

impl GaussianMixture {
    /// Probability of the `+a` component of `z | θ`.
    pub fn first_component_probability(&self, theta: &[f64], rho: f64) -> f64 {
        let r2 = rho * rho;
        sigmoid(2.0 * dot(theta, &self.a) / (1.0 + r2))
    }
}

impl ExactConditional for GaussianMixture {
    fn sample(&self, center: &[f64], rho: f64, rng: &mut StreamRng, out: &mut [f64]) {
        use rand::Rng;
        let r2 = rho * rho;
        let p = self.first_component_probability(center, rho);
        let sign = if rng.random::<f64>() < p { 1.0 } else { -1.0 };
        let sd = (r2 / (1.0 + r2)).sqrt();
        for i in 0..out.len() {
            let xi: f64 = StandardNormal.sample(rng);
            out[i] = (center[i] + sign * self.a[i] * r2) / (1.0 + r2) + sd * xi;
        }
    }
}

/// Non-smooth `τ‖z‖`, Lipschitz with constant `τ`.
#[derive(Debug, Clone)]
pub struct L1Norm {
    dim: usize,
    tau: f64,
}

impl L1Norm {
    pub fn new(dim: usize, tau: f64) -> Self {
        L1Norm { dim, tau }
    }
}

impl Potential for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.tau * super::norm(z)
    }

    fn gradient(&self, z: &[f64], grad: &mut [f64]) {
        let n = super::norm(z);
        for i in 0..z.len() {
            grad[i] = if n > 0.0 { self.tau * z[i] / n } else { 0.0 };
        }
    }

    fn constants(&self) -> Constants {
        Constants { m: 0.0, big_m: f64::INFINITY, lipschitz: self.tau }
    }
}

/// `U(z) − ⟨t, z⟩`.
#[derive(Debug, Clone)]
pub struct Tilted {
    inner: Arc<dyn Potential>,
    tilt: Vec<f64>,
}

impl Tilted {
    pub fn wrap(inner: Arc<dyn Potential>, tilt: Vec<f64>) -> Arc<dyn Potential> {
        Arc::new(Tilted { inner, tilt })
    }
}

impl Potential for Tilted {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.inner.value(z) - dot(&self.tilt, z)
    }

    fn gradient(&self, z: &[f64], grad: &mut [f64]) {
        self.inner.gradient(z, grad);
        grad.iter_mut().zip(&self.tilt).for_each(|(g, t)| *g -= t);
    }

    fn constants(&self) -> Constants {
        self.inner.constants()
    }

    fn exact_conditional(&self) -> Option<&dyn ExactConditional> {
        self.inner.exact_conditional().map(|_| self as &dyn ExactConditional)
    }
}

impl ExactConditional for Tilted {
    fn sample(&self, center: &[f64], rho: f64, rng: &mut StreamRng, out: &mut [f64]) {
        let r2 = rho * rho;
        let shifted: Vec<f64> = center.iter().zip(&self.tilt).map(|(c, t)| c + r2 * t).collect();
        self.inner.exact_conditional().expect("checked by exact_conditional").sample(&shifted, rho, rng, out);
    }
}

/// `U(z) + (λ/2)‖z − c‖²`.
#[derive(Debug, Clone)]
pub struct Regularized {
    inner: Arc<dyn Potential>,
    lambda: f64,
    center: Vec<f64>,
}

impl Regularized {
    pub fn wrap(inner: Arc<dyn Potential>, lambda: f64, center: Vec<f64>) -> Arc<dyn Potential> {
        Arc::new(Regularized { inner, lambda, center })
    }
}

impl Potential for Regularized {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, z: &[f64]) -> f64 {
        let sq: f64 = z.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        self.inner.value(z) + 0.5 * self.lambda * sq
    }

    fn gradient(&self, z: &[f64], grad: &mut [f64]) {
        self.inner.gradient(z, grad);
        for i in 0..z.len() {
            grad[i] += self.lambda * (z[i] - self.center[i]);
        }
    }

    fn constants(&self) -> Constants {
        let c = self.inner.constants();
        Constants { m: c.m + self.lambda, big_m: c.big_m + self.lambda, lipschitz: f64::INFINITY }
    }
}
