//! Distances between distributions: closed forms for one-dimensional
//! Gaussians, histogram TV on a projection, empirical W₁, and the exact
//! marginal law of the toy sampler after `t` sweeps.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::model::zoo::TestModel;
use crate::numerics::{normal_cdf, normal_pdf};

/// `N(mean, var)` on the real line. `var = 0` is a point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1d {
    pub mean: f64,
    pub var: f64,
}

/// `uΦ(u) + φ(u)`, the antiderivative of Φ.
fn psi(u: f64) -> f64 {
    u * normal_cdf(u) + normal_pdf(u)
}

impl Gaussian1d {
    pub fn new(mean: f64, var: f64) -> Self {
        Gaussian1d { mean, var }
    }

    pub fn sd(&self) -> f64 {
        self.var.sqrt()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.var == 0.0 {
            return if x >= self.mean { 1.0 } else { 0.0 };
        }
        normal_cdf((x - self.mean) / self.sd())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        normal_pdf((x - self.mean) / self.sd()) / self.sd()
    }

    /// Total variation distance, from the crossing points of the densities.
    pub fn tv(&self, other: &Gaussian1d) -> f64 {
        let (m1, v1, m2, v2) = (self.mean, self.var, other.mean, other.var);
        if v1 == v2 && m1 == m2 {
            return 0.0;
        }
        let a = 1.0 / (2.0 * v2) - 1.0 / (2.0 * v1);
        let b = m1 / v1 - m2 / v2;
        let c = m2 * m2 / (2.0 * v2) - m1 * m1 / (2.0 * v1) - 0.5 * (v1 / v2).ln();
        let mut roots = Vec::new();
        if a.abs() <= 1e-14 * (1.0 / v1 + 1.0 / v2) {
            if b != 0.0 {
                roots.push(-c / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc > 0.0 {
                let q = -0.5 * (b + b.signum() * disc.sqrt());
                roots.push(q / a);
                roots.push(c / q);
            } else if disc == 0.0 {
                roots.push(-b / (2.0 * a));
            }
        }
        roots.sort_by(f64::total_cmp);
        let mut edges = vec![f64::NEG_INFINITY];
        edges.extend(roots);
        edges.push(f64::INFINITY);
        let mass = |g: &Gaussian1d, lo: f64, hi: f64| {
            // Upper-tail form keeps precision on the right of the mean.
            if lo > g.mean {
                g.sf(lo) - g.sf(hi)
            } else {
                g.cdf(hi) - g.cdf(lo)
            }
        };
        0.5 * edges.windows(2).map(|w| (mass(self, w[0], w[1]) - mass(other, w[0], w[1])).abs()).sum::<f64>()
    }

    /// Survival function `1 − F(x)`.
    pub fn sf(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            return 0.0;
        }
        if x == f64::NEG_INFINITY {
            return 1.0;
        }
        normal_cdf(-(x - self.mean) / self.sd())
    }

    /// 1-Wasserstein distance `∫|F − G|` in closed form; the two CDFs
    /// cross at most once.
    pub fn w1(&self, other: &Gaussian1d) -> f64 {
        let (m1, s1, m2, s2) = (self.mean, self.sd(), other.mean, other.sd());
        if s1 == 0.0 && s2 == 0.0 {
            return (m1 - m2).abs();
        }
        if s1 == s2 {
            return (m1 - m2).abs();
        }
        if s1 == 0.0 || s2 == 0.0 {
            let (point, g) = if s1 == 0.0 { (m1, other) } else { (m2, self) };
            let u = (point - g.mean) / g.sd();
            return g.sd() * (psi(u) + psi(-u));
        }
        let x = (m1 * s2 - m2 * s1) / (s2 - s1);
        let (u1, u2) = ((x - m1) / s1, (x - m2) / s2);
        (s1 * psi(u1) - s2 * psi(u2)).abs() + (s2 * psi(-u2) - s1 * psi(-u1)).abs()
    }

    /// `Var_π(dν/dπ)` with `self = ν`, `pi = π`; infinite when `2v_π ≤ v_ν`.
    pub fn chi2(&self, pi: &Gaussian1d) -> f64 {
        let denom = 2.0 * pi.var - self.var;
        if !(denom > 0.0) {
            return f64::INFINITY;
        }
        let dm = self.mean - pi.mean;
        pi.var / (self.var * denom).sqrt() * (dm * dm / denom).exp() - 1.0
    }
}

/// Finite mixture of one-dimensional Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture1d {
    pub components: Vec<(f64, Gaussian1d)>,
}

impl Mixture1d {
    pub fn single(g: Gaussian1d) -> Self {
        Mixture1d { components: vec![(1.0, g)] }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components.iter().map(|(w, g)| w * g.cdf(x)).sum()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components.iter().map(|(w, g)| w * g.pdf(x)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|(w, g)| w * g.mean).sum()
    }

    pub fn sd(&self) -> f64 {
        let mu = self.mean();
        self.components.iter().map(|(w, g)| w * (g.var + (g.mean - mu).powi(2))).sum::<f64>().sqrt()
    }

    /// Quantile by bisection.
    pub fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = (self.mean() - 40.0 * self.sd(), self.mean() + 40.0 * self.sd());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Bin edges and per-bin probabilities of a projected distribution. The
/// first and last bins are the open tails.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionHistogram {
    pub direction: Vec<f64>,
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

/// Reference side of [`binned_tv`].
pub enum Reference<'a> {
    Samples(&'a [f64]),
    Analytic(&'a Mixture1d),
}

/// Default number of histogram bins.
pub const DEFAULT_BINS: usize = 50;

/// `⟨x, direction⟩` for each sample.
pub fn project(samples: &[Vec<f64>], direction: &[f64]) -> Vec<f64> {
    samples.iter().map(|x| x.iter().zip(direction).map(|(a, b)| a * b).sum()).collect()
}

fn counts_uniform(values: &[f64], lo: f64, hi: f64, n_bins: usize, tails: bool) -> Vec<f64> {
    let extra = if tails { 2 } else { 0 };
    let mut counts = vec![0.0; n_bins + extra];
    let w = (hi - lo) / n_bins as f64;
    for &v in values {
        let k = if v < lo {
            0
        } else if v >= hi {
            if tails {
                n_bins + 1
            } else {
                n_bins - 1
            }
        } else {
            let k = ((v - lo) / w) as usize;
            k.min(n_bins - 1) + usize::from(tails)
        };
        counts[k] += 1.0;
    }
    let n = values.len() as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    counts
}

/// Histogram of projected samples on `n_bins` equal bins over the analytic
/// reference's `mean ± 5 sd`, plus the two tails.
pub fn histogram_against(
    values: &[f64],
    reference: &Mixture1d,
    direction: &[f64],
    n_bins: usize,
) -> ProjectionHistogram {
    let (mu, sd) = (reference.mean(), reference.sd());
    let (lo, hi) = (mu - 5.0 * sd, mu + 5.0 * sd);
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend((0..=n_bins).map(|k| lo + (hi - lo) * k as f64 / n_bins as f64));
    edges.push(f64::INFINITY);
    ProjectionHistogram { direction: direction.to_vec(), edges, masses: counts_uniform(values, lo, hi, n_bins, true) }
}

/// Half the L¹ distance between binned probabilities of projected samples
/// and a reference (samples or an analytic law).
pub fn binned_tv(samples: &[f64], reference: Reference<'_>, n_bins: usize) -> Result<f64> {
    if n_bins == 0 {
        return Err(invalid("n_bins", "must be positive"));
    }
    let need = 10 * n_bins;
    if samples.len() < need {
        return Err(Error::TooFewSamples { found: samples.len(), required: need });
    }
    match reference {
        Reference::Samples(other) => {
            if other.len() < need {
                return Err(Error::TooFewSamples { found: other.len(), required: need });
            }
            let lo = samples.iter().chain(other).cloned().fold(f64::INFINITY, f64::min);
            let hi = samples.iter().chain(other).cloned().fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) {
                return Ok(0.0);
            }
            let pa = counts_uniform(samples, lo, hi, n_bins, false);
            let pb = counts_uniform(other, lo, hi, n_bins, false);
            Ok(0.5 * pa.iter().zip(&pb).map(|(a, b)| (a - b).abs()).sum::<f64>())
        }
        Reference::Analytic(law) => {
            let h = histogram_against(samples, law, &[], n_bins);
            let mut tv = 0.0;
            for (k, w) in h.edges.windows(2).enumerate() {
                let p = law.cdf(w[1]) - law.cdf(w[0]);
                tv += (h.masses[k] - p).abs();
            }
            Ok(0.5 * tv)
        }
    }
}

/// `∫|F_a − F_b|` between two empirical CDFs.
pub fn empirical_w1_1d(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = sa[0].min(sb[0]);
    let mut total = 0.0;
    while i < sa.len() || j < sb.len() {
        let next = match (sa.get(i), sb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - prev);
        while i < sa.len() && sa[i] == next {
            i += 1;
        }
        while j < sb.len() && sb[j] == next {
            j += 1;
        }
        prev = next;
    }
    total
}

/// `∫|F_n − Φ((x − mean)/sd)|` for an empirical CDF `F_n`, exactly.
pub fn w1_empirical_vs_normal(samples: &[f64], mean: f64, sd: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let u = |x: f64| (x - mean) / sd;
    // ∫_a^b |q − F| with F increasing.
    let segment = |a: f64, b: f64, q: f64| -> f64 {
        let int_f = |lo: f64, hi: f64| sd * (psi(u(hi)) - psi(u(lo)));
        let cross = mean + sd * std.inverse_cdf(q.clamp(1e-300, 1.0 - 1e-16));
        if cross <= a {
            int_f(a, b) - q * (b - a)
        } else if cross >= b {
            q * (b - a) - int_f(a, b)
        } else {
            (q * (cross - a) - int_f(a, cross)) + (int_f(cross, b) - q * (b - cross))
        }
    };
    let mut total = sd * psi(u(xs[0]));
    for k in 1..xs.len() {
        total += segment(xs[k - 1], xs[k], k as f64 / n);
    }
    total + sd * psi(-u(xs[xs.len() - 1]))
}

/// Kolmogorov–Smirnov statistic of samples against a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] == x {
            i += 1;
        }
        while j < sb.len() && sb[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / sa.len() as f64 - j as f64 / sb.len() as f64).abs());
    }
    d
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    (-(0.005f64).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Pearson χ² statistic for observed counts against expected counts.
pub fn chi_square_statistic(observed: &[f64], expected: &[f64]) -> f64 {
    observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum()
}

/// `Φ(b) − Φ(b − width)` without cancellation when `width` is small.
fn normal_mass(b: f64, width: f64) -> f64 {
    let a = b - width;
    if width.abs() > 0.05 {
        return if a > 0.0 { normal_cdf(-a) - normal_cdf(-b) } else { normal_cdf(b) - normal_cdf(a) };
    }
    const NODES: [f64; 5] = [0.0, -0.5384693101056831, 0.5384693101056831, -0.906179845938664, 0.906179845938664];
    const WEIGHTS: [f64; 5] =
        [0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891, 0.2369268850561891];
    let (mid, half) = (b - 0.5 * width, 0.5 * width);
    half * NODES.iter().zip(&WEIGHTS).map(|(x, w)| w * normal_pdf(mid + half * x)).sum::<f64>()
}

/// TV between `N(m, var)` and `N(m, var + dvar)`, accurate for tiny `dvar`.
pub fn tv_same_mean(var: f64, dvar: f64) -> f64 {
    if dvar == 0.0 {
        return 0.0;
    }
    let v2 = var + dvar;
    let (s1, s2) = (var.sqrt(), v2.sqrt());
    let x = ((dvar / var).ln_1p() * var * v2 / dvar).sqrt();
    let (u1, u2) = (x / s1, x / s2);
    let du = x * dvar / (s1 * s2 * (s1 + s2));
    let mass = if du.abs() < 0.05 { normal_mass(u1, du) } else { normal_mass(u1, u1 - u2) };
    2.0 * mass.abs()
}

/// W₁ between `N(m, var)` and `N(m, var + dvar)`.
pub fn w1_same_mean(var: f64, dvar: f64) -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() * dvar.abs() / (var.sqrt() + (var + dvar).sqrt())
}

/// One-dimensional Gaussian autoregression `θ ← cθ + (1 − c)μ + noise`
/// followed by the toy sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1 {
    pub c: f64,
    pub mu: f64,
    /// Variance of the per-sweep innovation.
    pub noise: f64,
}

impl Ar1 {
    pub fn stationary(&self) -> Gaussian1d {
        Gaussian1d::new(self.mu, self.noise / (1.0 - self.c * self.c))
    }

    /// `c^{2t}(init.var − v_∞)`, the exact gap to the stationary variance.
    pub fn variance_offset(&self, init_var: f64, t: u64) -> f64 {
        self.c.powf(2.0 * t as f64) * (init_var - self.stationary().var)
    }

    pub fn law(&self, init: Gaussian1d, t: u64) -> Gaussian1d {
        let ct = self.c.powf(t as f64);
        Gaussian1d::new(
            ct * init.mean + (1.0 - ct) * self.mu,
            self.stationary().var + self.variance_offset(init.var, t),
        )
    }
}

/// Autoregression followed by θ under the toy sampler.
pub fn ar1_params(model: &TestModel, rho: f64) -> Result<Ar1> {
    let (sigma, b, mu, r2) = match model {
        TestModel::ToyGaussian1 { sigma, b, mu } => (*sigma, *b as f64, *mu, rho * rho),
        TestModel::ToyGaussian2 { sigma, b, mu } => (*sigma, *b as f64, *mu, *b as f64 * rho * rho),
        _ => return Err(Error::UnsupportedModel(format!("no closed-form kernel for {}", model.name()))),
    };
    let s2 = sigma * sigma;
    Ok(Ar1 { c: s2 / (s2 + r2), mu, noise: (2.0 * r2 * s2 + r2 * r2) / (b * (r2 + s2)) })
}

/// Law of θ after `t` sweeps of the toy sampler started from `init`
/// (a point mass when `init.var = 0`).
pub fn ar1_kernel_t(model: &TestModel, rho: f64, init: Gaussian1d, t: u64) -> Result<Gaussian1d> {
    Ok(ar1_params(model, rho)?.law(init, t))
}

/// `Var_{π_ρ}(dν/dπ_ρ)·(1 − K)^t`.
pub fn tv_envelope_variance(chi2: f64, k: f64, t: u64) -> f64 {
    chi2 * (1.0 - k).powf(t as f64)
}

/// `½√(Var_{π_ρ}(dν/dπ_ρ))·(1 − K)^t`.
pub fn tv_envelope_sqrt(chi2: f64, k: f64, t: u64) -> f64 {
    0.5 * chi2.sqrt() * (1.0 - k).powf(t as f64)
}

/// `W₁(ν, π_ρ)·(1 − K)^t`.
pub fn w1_envelope(w1_0: f64, k: f64, t: u64) -> f64 {
    w1_0 * (1.0 - k).powf(t as f64)
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
