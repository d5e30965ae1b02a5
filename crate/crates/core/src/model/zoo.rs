//! Named test models.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::potentials::{sigmoid, GaussianMixture, LogisticGroup, LogisticScalar, Quadratic};
use super::{LinearOp, Potential, SplitFactor, SplitModel};
use crate::error::{invalid, Error, Result};
use crate::rng::{seeded, StreamRng};

/// Synthetic logistic-regression data set with its Zellner prior weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticData {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
    pub alpha: f64,
}

impl LogisticData {
    /// Rademacher covariates scaled to unit norm, labels drawn from the
    /// logistic model with `θ = 1_d`, and `α = 3d/(π²n)`.
    pub fn generate(d: usize, n: usize, seed: u64) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(invalid("d/n", "must be positive"));
        }
        let mut rng = seeded(seed);
        let scale = 1.0 / (d as f64).sqrt();
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x: Vec<f64> = (0..d).map(|_| if rng.random::<bool>() { scale } else { -scale }).collect();
            let p = sigmoid(x.iter().sum());
            ys.push(if rng.random::<f64>() < p { 1.0 } else { 0.0 });
            xs.push(x);
        }
        let alpha = 3.0 * d as f64 / (std::f64::consts::PI.powi(2) * n as f64);
        Ok(LogisticData { xs, ys, alpha })
    }

    pub fn dim(&self) -> usize {
        self.xs[0].len()
    }
}

/// Parameterized members of the model zoo.
#[derive(Debug, Clone, PartialEq)]
pub enum TestModel {
    /// `b` factors `(θ − μ)²/(2σ²)`, each with `A = 1`.
    ToyGaussian1 { sigma: f64, b: usize, mu: f64 },
    /// One factor `b(θ − μ)²/(2σ²)` with `A = 1`.
    ToyGaussian2 { sigma: f64, b: usize, mu: f64 },
    /// One factor `½θᵀdiag(q)θ` with `A = I`.
    AnisoGaussian { q: Vec<f64> },
    /// One factor holding the two-component mixture with offset `a`.
    GaussianMixture { a: Vec<f64> },
    /// One factor per observation with `Aᵢ = xᵢᵀ`.
    LogisticSplit1 { data: LogisticData },
    /// `groups` factors with `Aᵢ = I`, each holding a contiguous block of
    /// observations.
    LogisticSplit2 { data: LogisticData, groups: usize },
}

impl TestModel {
    pub fn toy1(sigma: f64, b: usize, mu: f64) -> Self {
        TestModel::ToyGaussian1 { sigma, b, mu }
    }

    pub fn toy2(sigma: f64, b: usize, mu: f64) -> Self {
        TestModel::ToyGaussian2 { sigma, b, mu }
    }

    /// Diagonal precisions evenly spaced between `m` and `big_m`.
    pub fn aniso(d: usize, m: f64, big_m: f64) -> Self {
        let q = if d == 1 { vec![m] } else { (0..d).map(|i| m + (big_m - m) * i as f64 / (d - 1) as f64).collect() };
        TestModel::AnisoGaussian { q }
    }

    /// Mixture with `a = 1_d/√(2d)`, so `‖a‖² = 1/2`.
    pub fn mixture(d: usize) -> Self {
        TestModel::GaussianMixture { a: vec![1.0 / (2.0 * d as f64).sqrt(); d] }
    }

    pub fn logistic_split1(d: usize, n: usize, seed: u64) -> Self {
        TestModel::LogisticSplit1 { data: LogisticData::generate(d, n, seed).expect("positive sizes") }
    }

    pub fn logistic_split2(d: usize, n: usize, groups: usize, seed: u64) -> Self {
        TestModel::LogisticSplit2 { data: LogisticData::generate(d, n, seed).expect("positive sizes"), groups }
    }

    pub fn dim(&self) -> usize {
        match self {
            TestModel::ToyGaussian1 { .. } | TestModel::ToyGaussian2 { .. } => 1,
            TestModel::AnisoGaussian { q } => q.len(),
            TestModel::GaussianMixture { a } => a.len(),
            TestModel::LogisticSplit1 { data } | TestModel::LogisticSplit2 { data, .. } => data.dim(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestModel::ToyGaussian1 { .. } => "toy-gaussian-1",
            TestModel::ToyGaussian2 { .. } => "toy-gaussian-2",
            TestModel::AnisoGaussian { .. } => "aniso-gaussian",
            TestModel::GaussianMixture { .. } => "gaussian-mixture",
            TestModel::LogisticSplit1 { .. } => "logistic-split1",
            TestModel::LogisticSplit2 { .. } => "logistic-split2",
        }
    }
}

/// Parameters accepted by [`from_name`].
#[derive(Debug, Clone, PartialEq)]
pub struct ZooParams {
    pub sigma: f64,
    pub b: usize,
    pub mu: f64,
    pub d: usize,
    pub n: usize,
    pub kappa: f64,
    pub seed: u64,
}

impl Default for ZooParams {
    fn default() -> Self {
        ZooParams { sigma: 3.0, b: 10, mu: 0.0, d: 10, n: 200, kappa: 4.0, seed: 0 }
    }
}

pub const ZOO_NAMES: [&str; 6] =
    ["toy-gaussian-1", "toy-gaussian-2", "aniso-gaussian", "gaussian-mixture", "logistic-split1", "logistic-split2"];

/// Looks up a zoo model by its command-line name.
pub fn from_name(name: &str, p: &ZooParams) -> Result<TestModel> {
    Ok(match name {
        "toy-gaussian-1" => TestModel::toy1(p.sigma, p.b, p.mu),
        "toy-gaussian-2" => TestModel::toy2(p.sigma, p.b, p.mu),
        "aniso-gaussian" => {
            if !(p.kappa >= 1.0) {
                return Err(invalid("kappa", "must be >= 1"));
            }
            TestModel::aniso(p.d, 1.0 / p.kappa, 1.0)
        }
        "gaussian-mixture" => TestModel::mixture(p.d),
        "logistic-split1" => TestModel::LogisticSplit1 { data: LogisticData::generate(p.d, p.n, p.seed)? },
        "logistic-split2" => TestModel::LogisticSplit2 { data: LogisticData::generate(p.d, p.n, p.seed)?, groups: p.b },
        other => return Err(Error::UnsupportedModel(other.to_string())),
    })
}

/// Builds the split model of a zoo member.
pub fn build(model: &TestModel) -> Result<SplitModel> {
    match model {
        TestModel::ToyGaussian1 { sigma, b, mu } => {
            if !(*sigma > 0.0) || *b == 0 {
                return Err(invalid("sigma/b", "need sigma > 0 and b >= 1"));
            }
            let p: Arc<dyn Potential> = Arc::new(Quadratic::isotropic(1, 1.0 / (sigma * sigma), vec![*mu])?);
            let factors = (0..*b).map(|_| SplitFactor::new(LinearOp::Identity(1), p.clone())).collect::<Result<_>>()?;
            SplitModel::new(1, factors)
        }
        TestModel::ToyGaussian2 { sigma, b, mu } => {
            if !(*sigma > 0.0) || *b == 0 {
                return Err(invalid("sigma/b", "need sigma > 0 and b >= 1"));
            }
            let p: Arc<dyn Potential> = Arc::new(Quadratic::isotropic(1, *b as f64 / (sigma * sigma), vec![*mu])?);
            SplitModel::new(1, vec![SplitFactor::new(LinearOp::Identity(1), p)?])
        }
        TestModel::AnisoGaussian { q } => {
            let d = q.len();
            let p: Arc<dyn Potential> = Arc::new(Quadratic::diagonal(q.clone(), vec![0.0; d])?);
            SplitModel::new(d, vec![SplitFactor::new(LinearOp::Identity(d), p)?])
        }
        TestModel::GaussianMixture { a } => {
            let d = a.len();
            let p: Arc<dyn Potential> = Arc::new(GaussianMixture::new(a.clone())?);
            SplitModel::new(d, vec![SplitFactor::new(LinearOp::Identity(d), p)?])
        }
        TestModel::LogisticSplit1 { data } => {
            let factors = data
                .xs
                .iter()
                .zip(&data.ys)
                .map(|(x, &y)| {
                    let p: Arc<dyn Potential> = Arc::new(LogisticScalar::new(y, data.alpha)?);
                    SplitFactor::new(LinearOp::Row(x.clone()), p)
                })
                .collect::<Result<_>>()?;
            SplitModel::new(data.dim(), factors)
        }
        TestModel::LogisticSplit2 { data, groups } => {
            let n = data.xs.len();
            if *groups == 0 || *groups > n {
                return Err(invalid("groups", "need 1 <= groups <= n"));
            }
            let d = data.dim();
            let mut factors = Vec::with_capacity(*groups);
            for g in 0..*groups {
                let lo = g * n / groups;
                let hi = (g + 1) * n / groups;
                let p: Arc<dyn Potential> =
                    Arc::new(LogisticGroup::new(data.xs[lo..hi].to_vec(), data.ys[lo..hi].to_vec(), data.alpha)?);
                factors.push(SplitFactor::new(LinearOp::Identity(d), p)?);
            }
            SplitModel::new(d, factors)
        }
    }
}

/// Exact draw from the target `π ∝ e^{−U}` where one is available.
pub fn sample_target(model: &TestModel, rng: &mut StreamRng) -> Result<Vec<f64>> {
    match model {
        TestModel::ToyGaussian1 { sigma, b, mu } | TestModel::ToyGaussian2 { sigma, b, mu } => {
            let xi: f64 = StandardNormal.sample(rng);
            Ok(vec![mu + sigma / (*b as f64).sqrt() * xi])
        }
        TestModel::AnisoGaussian { q } => Ok(q
            .iter()
            .map(|qi| {
                let xi: f64 = StandardNormal.sample(rng);
                xi / qi.sqrt()
            })
            .collect()),
        TestModel::GaussianMixture { a } => {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            Ok(a.iter()
                .map(|ai| {
                    let xi: f64 = StandardNormal.sample(rng);
                    sign * ai + xi
                })
                .collect())
        }
        _ => Err(Error::UnsupportedModel(format!("no exact sampler for {}", model.name()))),
    }
}
