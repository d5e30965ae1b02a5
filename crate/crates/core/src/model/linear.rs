use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// The matrix `Aᵢ` of a split factor.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearOp {
    /// `I_d`.
    Identity(usize),
    /// A single row `xᵀ` (so `dᵢ = 1`).
    Row(Vec<f64>),
    /// General `dᵢ × d` matrix.
    Dense(DMatrix<f64>),
}

impl LinearOp {
    pub fn rows(&self) -> usize {
        match self {
            LinearOp::Identity(d) => *d,
            LinearOp::Row(_) => 1,
            LinearOp::Dense(m) => m.nrows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            LinearOp::Identity(d) => *d,
            LinearOp::Row(r) => r.len(),
            LinearOp::Dense(m) => m.ncols(),
        }
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            LinearOp::Identity(_) => out.copy_from_slice(x),
            LinearOp::Row(r) => out[0] = r.iter().zip(x).map(|(a, b)| a * b).sum(),
            LinearOp::Dense(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum();
                }
            }
        }
    }

    /// `out += Aᵀ y`.
    pub fn apply_t_add(&self, y: &[f64], out: &mut [f64]) {
        match self {
            LinearOp::Identity(_) => out.iter_mut().zip(y).for_each(|(o, v)| *o += v),
            LinearOp::Row(r) => out.iter_mut().zip(r).for_each(|(o, a)| *o += a * y[0]),
            LinearOp::Dense(m) => {
                for j in 0..m.ncols() {
                    out[j] += (0..m.nrows()).map(|i| m[(i, j)] * y[i]).sum::<f64>();
                }
            }
        }
    }

    /// `g += w AᵀA`.
    pub fn gram_add(&self, g: &mut DMatrix<f64>, w: f64) {
        match self {
            LinearOp::Identity(d) => {
                for i in 0..*d {
                    g[(i, i)] += w;
                }
            }
            LinearOp::Row(r) => {
                for i in 0..r.len() {
                    for j in 0..r.len() {
                        g[(i, j)] += w * r[i] * r[j];
                    }
                }
            }
            LinearOp::Dense(m) => *g += m.transpose() * m * w,
        }
    }
}

/// Cholesky factor `G = LLᵀ` of the Gram matrix, with a diagonal fast path.
#[derive(Debug, Clone, PartialEq)]
pub enum GramFactor {
    Diagonal(Vec<f64>),
    /// Row-major lower-triangular `L`.
    Dense {
        n: usize,
        l: Vec<f64>,
    },
}

impl GramFactor {
    pub fn new(g: &DMatrix<f64>) -> Result<Self> {
        let n = g.nrows();
        let is_diag = (0..n).all(|i| (0..n).all(|j| i == j || g[(i, j)] == 0.0));
        if is_diag {
            let diag: Vec<f64> = (0..n).map(|i| g[(i, i)]).collect();
            if diag.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::SingularGram);
            }
            return Ok(GramFactor::Diagonal(diag.iter().map(|v| v.sqrt()).collect()));
        }
        let chol = g.clone().cholesky().ok_or(Error::SingularGram)?;
        let lm = chol.l();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                l[i * n + j] = lm[(i, j)];
            }
        }
        if (0..n).any(|i| !(l[i * n + i] > 0.0)) {
            return Err(Error::SingularGram);
        }
        Ok(GramFactor::Dense { n, l })
    }

    pub fn dim(&self) -> usize {
        match self {
            GramFactor::Diagonal(d) => d.len(),
            GramFactor::Dense { n, .. } => *n,
        }
    }

    /// Solves `L y = x` in place.
    pub fn solve_lower(&self, x: &mut [f64]) {
        match self {
            GramFactor::Diagonal(d) => x.iter_mut().zip(d).for_each(|(v, s)| *v /= s),
            GramFactor::Dense { n, l } => {
                for i in 0..*n {
                    let row = &l[i * n..i * n + i];
                    let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
                    x[i] = (x[i] - s) / l[i * n + i];
                }
            }
        }
    }

    /// Solves `Lᵀ y = x` in place.
    pub fn solve_upper(&self, x: &mut [f64]) {
        match self {
            GramFactor::Diagonal(d) => x.iter_mut().zip(d).for_each(|(v, s)| *v /= s),
            GramFactor::Dense { n, l } => {
                for i in (0..*n).rev() {
                    let mut s = 0.0;
                    for k in i + 1..*n {
                        s += l[k * n + i] * x[k];
                    }
                    x[i] = (x[i] - s) / l[i * n + i];
                }
            }
        }
    }

    /// Solves `G y = x` in place.
    pub fn solve(&self, x: &mut [f64]) {
        self.solve_lower(x);
        self.solve_upper(x);
    }

    /// Reconstructs `LLᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        match self {
            GramFactor::Diagonal(d) => {
                DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d.len(), d.iter().map(|v| v * v)))
            }
            GramFactor::Dense { n, l } => {
                let lm = DMatrix::from_row_slice(*n, *n, l);
                &lm * lm.transpose()
            }
        }
    }

    /// `log det G`.
    pub fn log_det(&self) -> f64 {
        match self {
            GramFactor::Diagonal(d) => 2.0 * d.iter().map(|v| v.ln()).sum::<f64>(),
            GramFactor::Dense { n, l } => 2.0 * (0..*n).map(|i| l[i * n + i].ln()).sum::<f64>(),
        }
    }
}
