//! Special functions, adaptive quadrature and spectral utilities.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { abs_tol: 1e-12, rel_tol: 1e-10, max_subdivisions: 2000 }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(PartialEq)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive Gauss–Kronrod (7/15) quadrature over the panels delimited by
/// `breakpoints`, bisecting the worst panel until the global error estimate
/// meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_panels<F: FnMut(f64) -> f64>(mut f: F, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    if !(spec.abs_tol > 0.0 && spec.rel_tol > 0.0) {
        return Err(crate::error::invalid("spec", "tolerances must be positive"));
    }
    let mut heap = BinaryHeap::new();
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            let (value, error) = kronrod15(&mut f, w[0], w[1]);
            heap.push(Panel { a: w[0], b: w[1], value, error });
        }
    }
    let mut subdivisions = 0;
    loop {
        let total: f64 = heap.iter().map(|p| p.value).sum();
        let err: f64 = heap.iter().map(|p| p.error).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::QuadratureFailure { error_estimate: f64::INFINITY });
        }
        if err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(total);
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::QuadratureFailure { error_estimate: err });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::QuadratureFailure { error_estimate: err });
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        subdivisions += 1;
    }
}

/// Adaptive quadrature of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_panels(f, &[a, b], spec)
}

/// Natural logarithm of D₋d(z).
pub fn ln_parabolic_cylinder_neg(d: f64, z: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() || !z.is_finite() {
        return Err(crate::error::invalid("d", format!("need d > 0 and finite z, got d={d}, z={z}")));
    }
    let spec = QuadratureSpec { abs_tol: 1e-300, rel_tol: 1e-12, max_subdivisions: 4000 };
    let phi = |x: f64| -x * z - 0.5 * x * x + (d - 1.0) * x.ln();
    let (ln_integral, _) = if d >= 1.0 {
        // Peak of the integrand, used to scale it to order one.
        let x_peak = if d > 1.0 { 0.5 * (-z + (z * z + 4.0 * (d - 1.0)).sqrt()) } else { (-z).max(0.0) };
        let shift = if x_peak > 0.0 {
            phi(x_peak)
        } else if d == 1.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        };
        let shift = if shift.is_finite() { shift } else { 0.0 };
        let x_max = truncation(|x| phi(x) - shift, x_peak.max(1e-3));
        let mut pts = vec![0.0];
        let mut k = 40;
        while k > 0 {
            pts.push(x_max * 0.5f64.powi(k));
            k -= 1;
        }
        if x_peak > 0.0 && x_peak < x_max {
            pts.push(x_peak);
        }
        pts.push(x_max);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let integral = integrate_panels(
            |x| {
                if x <= 0.0 {
                    if d == 1.0 {
                        (-shift).exp()
                    } else {
                        0.0
                    }
                } else {
                    (phi(x) - shift).exp()
                }
            },
            &pts,
            &spec,
        )?;
        (integral.ln() + shift, ())
    } else {
        // x = u^{1/d} removes the x^{d-1} singularity at the origin.
        let psi = |u: f64| {
            let x = u.powf(1.0 / d);
            -x * z - 0.5 * x * x
        };
        let x0 = (-z).max(0.0);
        let shift = -x0 * z - 0.5 * x0 * x0;
        let x_max = truncation(|x| -x * z - 0.5 * x * x - shift, x0.max(1e-3));
        let u_max = x_max.powf(d);
        let mut pts = vec![0.0];
        for k in (1..=40).rev() {
            pts.push(u_max * 0.5f64.powi(k));
        }
        if x0 > 0.0 {
            pts.push(x0.powf(d));
        }
        pts.push(u_max);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let integral = integrate_panels(|u| (psi(u) - shift).exp(), &pts, &spec)?;
        (integral.ln() - d.ln() + shift, ())
    };
    Ok(-0.25 * z * z - ln_gamma(d) + ln_integral)
}

fn truncation<G: Fn(f64) -> f64>(g: G, start: f64) -> f64 {
    let mut x = start.max(1.0);
    while g(x) > -80.0 {
        x *= 1.5;
    }
    x
}

/// Parabolic cylinder function D₋d(z) for d > 0, from its integral
/// representation.
pub fn parabolic_cylinder_neg(d: f64, z: f64) -> Result<f64> {
    ln_parabolic_cylinder_neg(d, z).map(f64::exp)
}

/// Ratio D₋d(x)/D₋d(−x), evaluated in log space.
pub fn parabolic_cylinder_ratio(d: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok((ln_parabolic_cylinder_neg(d, x)? - ln_parabolic_cylinder_neg(d, -x)?).exp())
}

fn symmetry_check(s: &DMatrix<f64>) -> Result<()> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch { expected: s.nrows(), found: s.ncols() });
    }
    let scale = s.amax().max(f64::MIN_POSITIVE);
    let asym = (s - s.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::NonSymmetric { asymmetry: asym });
    }
    Ok(())
}

const DENSE_LIMIT: usize = 2000;

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn lambda_extremes(s: &DMatrix<f64>) -> Result<(f64, f64)> {
    symmetry_check(s)?;
    if s.nrows() == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    if s.nrows() <= DENSE_LIMIT {
        let eig = SymmetricEigen::new(s.clone());
        let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        return Ok((lo, hi));
    }
    let top = power_iteration(s, 0.0)?;
    let bound = s.amax() * s.nrows() as f64;
    let shifted_top = power_iteration(s, bound)?;
    let (a, b) = (top, bound - shifted_top);
    Ok((a.min(b), a.max(b)))
}

/// Dominant eigenvalue of `shift·I − S` (or of `S` when `shift = 0`).
fn power_iteration(s: &DMatrix<f64>, shift: f64) -> Result<f64> {
    let n = s.nrows();
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_7).fract());
    v.normalize_mut();
    let mut lambda = 0.0;
    for it in 0..100_000 {
        let mut w = s * &v;
        if shift != 0.0 {
            w = &v * shift - w;
        }
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w / norm;
        if it > 10 && (next - lambda).abs() <= 1e-13 * next.abs().max(1e-300) {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::NonConvergence { iterations: 100_000, residual: lambda })
}

/// Spectral norm of a symmetric matrix.
pub fn spectral_norm(s: &DMatrix<f64>) -> Result<f64> {
    let (lo, hi) = lambda_extremes(s)?;
    Ok(lo.abs().max(hi.abs()))
}

/// Standard normal CDF, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// ∫|F − G| over the real line, computed on `support` and widened until
/// both CDFs have tail mass below `spec.abs_tol` outside it.
pub fn cdf_l1_distance<F, G>(f: F, g: G, support: (f64, f64), spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let (mut a, mut b) = support;
    if !(b > a) {
        return Err(crate::error::invalid("support", "empty interval"));
    }
    let tail_tol = spec.abs_tol.max(1e-15);
    for _ in 0..200 {
        let left = f(a).max(g(a));
        let right = (1.0 - f(b)).max(1.0 - g(b));
        if left <= tail_tol && right <= tail_tol {
            break;
        }
        let w = b - a;
        if left > tail_tol {
            a -= w;
        }
        if right > tail_tol {
            b += w;
        }
    }
    let panels: Vec<f64> = (0..=64).map(|k| a + (b - a) * k as f64 / 64.0).collect();
    integrate_panels(|x| (f(x) - g(x)).abs(), &panels, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    #[test]
    fn kronrod_integrates_polynomials_exactly() {
        let v = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, &QuadratureSpec::default()).unwrap();
        assert!((v - (64.0 / 6.0 - 1.0 / 6.0 - 9.0)).abs() < 1e-13);
    }

    #[test]
    fn d_minus_one_at_zero() {
        let v = parabolic_cylinder_neg(1.0, 0.0).unwrap();
        assert!((v - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10 * v);
    }

    #[test]
    fn values_at_zero_match_gamma_ratio() {
        for d in [0.3, 0.5, 1.0, 2.0, 3.0, 7.5, 40.0] {
            let want = 2f64.powf(d / 2.0 - 1.0) * gamma(d / 2.0) / gamma(d);
            let got = parabolic_cylinder_neg(d, 0.0).unwrap();
            assert!((got - want).abs() < 1e-10 * want, "d={d}: {got} vs {want}");
        }
    }

    #[test]
    fn recurrence_holds() {
        // D_{-d-1}(z) relation: d·D_{-d-1}(z) + z·D_{-d}(z) - D_{-d+1}(z) = 0.
        for &(d, z) in &[(2.0, 0.7), (3.5, -1.2), (5.0, 2.5)] {
            let lhs = d * parabolic_cylinder_neg(d + 1.0, z).unwrap() + z * parabolic_cylinder_neg(d, z).unwrap()
                - parabolic_cylinder_neg(d - 1.0, z).unwrap();
            assert!(lhs.abs() < 1e-9, "d={d} z={z} residual {lhs}");
        }
    }

    #[test]
    fn ratio_at_zero_is_one() {
        assert_eq!(parabolic_cylinder_ratio(3.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn decreasing_in_z() {
        for d in [0.5, 1.0, 4.0] {
            let mut prev = f64::INFINITY;
            for k in 0..=60 {
                let z = -3.0 + 0.1 * k as f64;
                let v = parabolic_cylinder_neg(d, z).unwrap();
                assert!(v < prev);
                prev = v;
            }
        }
    }

    #[test]
    fn large_negative_argument_does_not_overflow() {
        let r = parabolic_cylinder_ratio(10.0, 30.0).unwrap();
        assert!(r > 0.0 && r < 1e-10);
    }

    #[test]
    fn extremes_of_known_matrices() {
        let (lo, hi) = lambda_extremes(&DMatrix::identity(5, 5)).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));
        let q = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(10, |i, _| 0.25 + 0.75 * i as f64 / 9.0));
        let (lo, hi) = lambda_extremes(&q).unwrap();
        assert!((lo - 0.25).abs() < 1e-14 && (hi - 1.0).abs() < 1e-14);
    }

    #[test]
    fn three_by_three_against_characteristic_roots() {
        // [[2,1,0],[1,2,1],[0,1,2]] has eigenvalues 2-√2, 2, 2+√2.
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let (lo, hi) = lambda_extremes(&m).unwrap();
        assert!((lo - (2.0 - 2f64.sqrt())).abs() < 1e-12);
        assert!((hi - (2.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_matches_dense() {
        let n = 30;
        let b = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0);
        let s = &b * b.transpose() + DMatrix::identity(n, n);
        let (lo, hi) = lambda_extremes(&s).unwrap();
        let top = power_iteration(&s, 0.0).unwrap();
        assert!((top - hi).abs() < 1e-8 * hi);
        assert!(lo >= 1.0 - 1e-10);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(lambda_extremes(&m), Err(Error::NonSymmetric { .. })));
    }

    #[test]
    fn cdf_distance_of_scale_family() {
        let s = 1.7;
        let v = cdf_l1_distance(normal_cdf, |x| normal_cdf(x / s), (-1.0, 1.0), &QuadratureSpec::default()).unwrap();
        let want = (2.0 / std::f64::consts::PI).sqrt() * (s - 1.0);
        assert!((v - want).abs() < 1e-9);
    }
}
