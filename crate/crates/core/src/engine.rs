//! The split Gibbs sweep, Langevin baselines and the deterministic
//! optimizers that mirror the sampler.

use std::ops::ControlFlow;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::conditionals::{
    conditional_mode, sample_conditional_rejection, RejectionConfig, RejectionReport, ThetaConditional,
};
use crate::error::{invalid, Error, Result};
use crate::model::{SplitFactor, SplitModel};
use crate::rng::{stream, StreamRng};

/// Whether conditional draws are random or replaced by conditional modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    #[default]
    Stochastic,
    ConditionalMode,
}

/// Sampler settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub rho: f64,
    pub sweeps: u64,
    pub burn_in: u64,
    pub parallel_z: bool,
    pub record_every: u64,
    pub mode: SweepMode,
    /// Use the rejection sampler even when a closed form exists.
    pub force_rejection: bool,
    /// Start each warm start from the previous sweep's `z̃` instead of `Aᵢθ`.
    pub carry_warm_start: bool,
    pub rejection: RejectionConfig,
    /// Gradient tolerance of the inner minimizations in mode sweeps.
    pub mode_tol: f64,
}

impl SamplerConfig {
    pub fn new(rho: f64, sweeps: u64) -> Self {
        SamplerConfig {
            rho,
            sweeps,
            burn_in: 0,
            parallel_z: false,
            record_every: 1,
            mode: SweepMode::Stochastic,
            force_rejection: false,
            carry_warm_start: false,
            rejection: RejectionConfig::default(),
            mode_tol: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(invalid("rho", "must be positive and finite"));
        }
        if self.sweeps > 0 && self.burn_in >= self.sweeps {
            return Err(invalid("burn_in", "must be smaller than sweeps"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be positive"));
        }
        Ok(())
    }
}

/// Current iterate `(θ, z₁..z_b)` of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub theta: Vec<f64>,
    pub z_blocks: Vec<Vec<f64>>,
    pub sweep: u64,
    pub rng_seed_root: u64,
    warm: Option<Vec<Vec<f64>>>,
}

impl ChainState {
    /// Starts at `θ⁰` with `zᵢ = Aᵢθ⁰`.
    pub fn new(model: &SplitModel, theta0: &[f64], seed: u64) -> Result<Self> {
        if theta0.len() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), found: theta0.len() });
        }
        let z_blocks = model
            .factors()
            .iter()
            .map(|f| {
                let mut z = vec![0.0; f.dim()];
                f.a.apply(theta0, &mut z);
                z
            })
            .collect();
        Ok(ChainState { theta: theta0.to_vec(), z_blocks, sweep: 0, rng_seed_root: seed, warm: None })
    }
}

/// Per-sweep diagnostics; proposal counts are zero for closed-form draws.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub proposals: Vec<u64>,
    pub gd_steps: Vec<usize>,
}

impl SweepReport {
    pub fn total_proposals(&self) -> u64 {
        self.proposals.iter().sum()
    }
}

/// Aggregate of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub sweeps: u64,
    pub proposals_per_factor: Vec<u64>,
    pub elapsed: Duration,
}

impl RunReport {
    /// Average proposals per accepted draw, per factor.
    pub fn mean_proposals_per_factor(&self) -> Vec<f64> {
        self.proposals_per_factor.iter().map(|&p| p as f64 / self.sweeps.max(1) as f64).collect()
    }
}

fn draw_block(
    factor: &SplitFactor,
    theta: &[f64],
    config: &SamplerConfig,
    rng: &mut StreamRng,
    warm: Option<&mut Vec<f64>>,
    out: &mut [f64],
) -> Result<RejectionReport> {
    let mut center = vec![0.0; factor.dim()];
    factor.a.apply(theta, &mut center);
    let potential = factor.potential.as_ref();
    match config.mode {
        SweepMode::ConditionalMode => {
            let steps = conditional_mode(potential, &center, config.rho, config.mode_tol, out)?;
            Ok(RejectionReport { proposals_used: 0, warm_start_gd_steps: steps, expected_bound: 1.0 })
        }
        SweepMode::Stochastic => match potential.exact_conditional() {
            Some(exact) if !config.force_rejection => {
                exact.sample(&center, config.rho, rng, out);
                Ok(RejectionReport::default())
            }
            _ => {
                let start = warm.as_ref().map(|w| w.as_slice());
                let report =
                    sample_conditional_rejection(potential, &center, config.rho, rng, &config.rejection, start, out)?;
                if let Some(w) = warm {
                    w.copy_from_slice(out);
                }
                Ok(report)
            }
        },
    }
}

/// Split Gibbs sampler over a shared model.
#[derive(Debug, Clone)]
pub struct Sampler {
    model: Arc<SplitModel>,
    theta_cond: ThetaConditional,
    config: SamplerConfig,
}

impl Sampler {
    pub fn new(model: Arc<SplitModel>, config: SamplerConfig) -> Result<Self> {
        config.validate()?;
        let theta_cond = ThetaConditional::new(&model, config.rho)?;
        Ok(Sampler { model, theta_cond, config })
    }

    pub fn model(&self) -> &SplitModel {
        &self.model
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// One sweep: every `zᵢ` from `θ^{t−1}`, then `θ^t` from the new z.
    pub fn sweep(&self, state: &mut ChainState) -> Result<SweepReport> {
        sgs_sweep(&self.model, &self.theta_cond, state, &self.config)
    }

    /// Runs `config.sweeps` sweeps, calling `callback` after each one.
    pub fn run<F>(&self, state: &mut ChainState, mut callback: F) -> Result<RunReport>
    where
        F: FnMut(u64, &ChainState, &SweepReport) -> ControlFlow<()>,
    {
        let start = Instant::now();
        let mut report = RunReport { proposals_per_factor: vec![0; self.model.num_factors()], ..Default::default() };
        for _ in 0..self.config.sweeps {
            let sr = self.sweep(state)?;
            report.sweeps += 1;
            report.proposals_per_factor.iter_mut().zip(&sr.proposals).for_each(|(a, b)| *a += b);
            if callback(state.sweep, state, &sr).is_break() {
                break;
            }
        }
        report.elapsed = start.elapsed();
        Ok(report)
    }
}

/// One sweep of the split Gibbs sampler. Random draws for block `i` of
/// sweep `t` come from `stream(seed, t, i)`; the θ-draw uses block index `b`.
pub fn sgs_sweep(
    model: &SplitModel,
    theta_cond: &ThetaConditional,
    state: &mut ChainState,
    config: &SamplerConfig,
) -> Result<SweepReport> {
    let b = model.num_factors();
    if state.z_blocks.len() != b || state.theta.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: b, found: state.z_blocks.len() });
    }
    let t = state.sweep + 1;
    let root = state.rng_seed_root;
    if config.carry_warm_start && state.warm.is_none() {
        state.warm = Some(state.z_blocks.clone());
    }
    let theta = &state.theta;
    let factors = model.factors();
    let reports: Vec<Result<RejectionReport>> = match (&mut state.warm, config.carry_warm_start) {
        (Some(warm), true) => {
            let job = |(i, (z, w)): (usize, (&mut Vec<f64>, &mut Vec<f64>))| {
                let mut rng = stream(root, t, i as u64);
                draw_block(&factors[i], theta, config, &mut rng, Some(w), z)
            };
            if config.parallel_z {
                state.z_blocks.par_iter_mut().zip(warm.par_iter_mut()).enumerate().map(job).collect()
            } else {
                state.z_blocks.iter_mut().zip(warm.iter_mut()).enumerate().map(job).collect()
            }
        }
        _ => {
            let job = |(i, z): (usize, &mut Vec<f64>)| {
                let mut rng = stream(root, t, i as u64);
                draw_block(&factors[i], theta, config, &mut rng, None, z)
            };
            if config.parallel_z {
                state.z_blocks.par_iter_mut().enumerate().map(job).collect()
            } else {
                state.z_blocks.iter_mut().enumerate().map(job).collect()
            }
        }
    };
    let mut report = SweepReport { proposals: Vec::with_capacity(b), gd_steps: Vec::with_capacity(b) };
    for r in reports {
        let r = r?;
        report.proposals.push(r.proposals_used);
        report.gd_steps.push(r.warm_start_gd_steps);
    }
    let mut rhs = vec![0.0; model.dim()];
    ThetaConditional::rhs(model, &state.z_blocks, &mut rhs);
    match config.mode {
        SweepMode::Stochastic => {
            let mut rng = stream(root, t, b as u64);
            theta_cond.sample_into(&rhs, &mut rng, &mut state.theta);
        }
        SweepMode::ConditionalMode => theta_cond.mean_into(&rhs, &mut state.theta),
    }
    state.sweep = t;
    Ok(report)
}

fn require_smooth(model: &SplitModel) -> Result<()> {
    match model.constants().iter().position(|c| !c.is_smooth()) {
        Some(i) => Err(Error::NotSmooth { factor: i }),
        None => Ok(()),
    }
}

/// One unadjusted Langevin step `θ − h∇U(θ) + √(2h)ξ`.
pub fn ula_step(model: &SplitModel, theta: &[f64], h: f64, rng: &mut StreamRng) -> Result<Vec<f64>> {
    require_smooth(model)?;
    let grad = model.potential_grad_u(theta)?;
    let s = (2.0 * h).sqrt();
    Ok(theta
        .iter()
        .zip(&grad)
        .map(|(t, g)| {
            let xi: f64 = StandardNormal.sample(&mut *rng);
            t - h * g + s * xi
        })
        .collect())
}

/// One Euler–Maruyama step of Langevin dynamics on the joint potential
/// `Σ Uᵢ(zᵢ) + ‖zᵢ − Aᵢθ‖²/(2ρ²)`, updating every block at once.
pub fn extended_langevin_step(
    model: &SplitModel,
    state: &mut ChainState,
    rho: f64,
    h: f64,
    rng: &mut StreamRng,
) -> Result<()> {
    require_smooth(model)?;
    let inv = 1.0 / (rho * rho);
    let s = (2.0 * h).sqrt();
    let mut grad_theta = vec![0.0; model.dim()];
    let mut new_z = Vec::with_capacity(model.num_factors());
    for (f, z) in model.factors().iter().zip(&state.z_blocks) {
        let mut ax = vec![0.0; f.dim()];
        f.a.apply(&state.theta, &mut ax);
        let mut gz = vec![0.0; f.dim()];
        f.potential.gradient(z, &mut gz);
        let diff: Vec<f64> = z.iter().zip(&ax).map(|(a, b)| (a - b) * inv).collect();
        let neg: Vec<f64> = diff.iter().map(|v| -v).collect();
        f.a.apply_t_add(&neg, &mut grad_theta);
        new_z.push(
            (0..f.dim())
                .map(|k| {
                    let xi: f64 = StandardNormal.sample(&mut *rng);
                    z[k] - h * (gz[k] + diff[k]) + s * xi
                })
                .collect::<Vec<f64>>(),
        );
    }
    for k in 0..state.theta.len() {
        let xi: f64 = StandardNormal.sample(&mut *rng);
        state.theta[k] += -h * grad_theta[k] + s * xi;
    }
    state.z_blocks = new_z;
    state.sweep += 1;
    Ok(())
}

/// Output of [`am_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct AmResult {
    pub theta: Vec<f64>,
    pub z_blocks: Vec<Vec<f64>>,
    pub iterations: usize,
}

/// Output of [`admm_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmResult {
    pub theta: Vec<f64>,
    pub z_blocks: Vec<Vec<f64>>,
    pub duals: Vec<Vec<f64>>,
    pub iterations: usize,
    /// `maxᵢ ‖zᵢ − Aᵢθ‖` after the last iteration.
    pub primal_residual: f64,
}

/// Inner tolerance of [`am_solve`] and [`admm_solve`].
pub const INNER_TOL: f64 = 1e-10;

/// Quadratic-penalty alternating minimization: each `zᵢ` is set to the
/// conditional mode given θ, then θ to `G⁻¹Σ Aᵢᵀzᵢ`.
pub fn am_solve(model: &SplitModel, rho: f64, theta0: &[f64], iters: usize) -> Result<AmResult> {
    require_smooth(model)?;
    let cond = ThetaConditional::new(model, rho)?;
    let mut state = ChainState::new(model, theta0, 0)?;
    let mut rhs = vec![0.0; model.dim()];
    for _ in 0..iters {
        for (f, z) in model.factors().iter().zip(state.z_blocks.iter_mut()) {
            let mut center = vec![0.0; f.dim()];
            f.a.apply(&state.theta, &mut center);
            conditional_mode(f.potential.as_ref(), &center, rho, INNER_TOL, z)?;
        }
        ThetaConditional::rhs(model, &state.z_blocks, &mut rhs);
        cond.mean_into(&rhs, &mut state.theta);
    }
    Ok(AmResult { theta: state.theta, z_blocks: state.z_blocks, iterations: iters })
}

/// Scaled-form ADMM on `Σ Uᵢ(zᵢ)` subject to `zᵢ = Aᵢθ`.
pub fn admm_solve(model: &SplitModel, rho: f64, theta0: &[f64], iters: usize) -> Result<AdmmResult> {
    require_smooth(model)?;
    let cond = ThetaConditional::new(model, rho)?;
    let mut state = ChainState::new(model, theta0, 0)?;
    let mut duals: Vec<Vec<f64>> = model.factors().iter().map(|f| vec![0.0; f.dim()]).collect();
    let mut rhs = vec![0.0; model.dim()];
    let mut residual = f64::INFINITY;
    for _ in 0..iters {
        for ((f, z), u) in model.factors().iter().zip(state.z_blocks.iter_mut()).zip(&duals) {
            let mut center = vec![0.0; f.dim()];
            f.a.apply(&state.theta, &mut center);
            center.iter_mut().zip(u).for_each(|(c, u)| *c -= u);
            conditional_mode(f.potential.as_ref(), &center, rho, INNER_TOL, z)?;
        }
        let shifted: Vec<Vec<f64>> =
            state.z_blocks.iter().zip(&duals).map(|(z, u)| z.iter().zip(u).map(|(a, b)| a + b).collect()).collect();
        ThetaConditional::rhs(model, &shifted, &mut rhs);
        cond.mean_into(&rhs, &mut state.theta);
        residual = 0.0;
        for ((f, z), u) in model.factors().iter().zip(&state.z_blocks).zip(duals.iter_mut()) {
            let mut ax = vec![0.0; f.dim()];
            f.a.apply(&state.theta, &mut ax);
            let mut r2 = 0.0;
            for k in 0..f.dim() {
                let r = z[k] - ax[k];
                u[k] += r;
                r2 += r * r;
            }
            residual = residual.max(r2.sqrt());
        }
    }
    if !residual.is_finite() && iters > 0 {
        return Err(Error::NonConvergence { iterations: iters, residual });
    }
    Ok(AdmmResult { theta: state.theta, z_blocks: state.z_blocks, duals, iterations: iters, primal_residual: residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::zoo::{build, TestModel};
    use crate::rng::seeded;

    fn toy1() -> Arc<SplitModel> {
        Arc::new(build(&TestModel::toy1(3.0, 10, 0.0)).unwrap())
    }

    #[test]
    fn config_validation() {
        let mut c = SamplerConfig::new(1.0, 10);
        c.burn_in = 10;
        assert!(c.validate().is_err());
        assert!(SamplerConfig::new(0.0, 10).validate().is_err());
        assert!(SamplerConfig::new(1.0, 10).validate().is_ok());
    }

    #[test]
    fn chains_are_reproducible_and_schedule_independent() {
        let model = Arc::new(build(&TestModel::logistic_split1(3, 40, 2)).unwrap());
        let mut cfg = SamplerConfig::new(0.5, 20);
        let run = |cfg: &SamplerConfig| {
            let s = Sampler::new(model.clone(), cfg.clone()).unwrap();
            let mut st = ChainState::new(&model, &[0.1, 0.2, 0.3], 77).unwrap();
            s.run(&mut st, |_, _, _| ControlFlow::Continue(())).unwrap();
            st
        };
        let a = run(&cfg);
        let b = run(&cfg);
        cfg.parallel_z = true;
        let c = run(&cfg);
        assert_eq!(a, b);
        assert_eq!(a.theta, c.theta);
        assert_eq!(a.z_blocks, c.z_blocks);
    }

    #[test]
    fn callback_can_stop_early() {
        let model = toy1();
        let s = Sampler::new(model.clone(), SamplerConfig::new(1.0, 100)).unwrap();
        let mut st = ChainState::new(&model, &[0.0], 1).unwrap();
        let rep =
            s.run(&mut st, |t, _, _| if t == 7 { ControlFlow::Break(()) } else { ControlFlow::Continue(()) }).unwrap();
        assert_eq!(rep.sweeps, 7);
        assert_eq!(st.sweep, 7);
    }

    #[test]
    fn zero_step_langevin_is_identity() {
        let model = toy1();
        let mut st = ChainState::new(&model, &[0.4], 1).unwrap();
        let before = st.clone();
        extended_langevin_step(&model, &mut st, 1.0, 0.0, &mut seeded(1)).unwrap();
        assert_eq!(st.theta, before.theta);
        assert_eq!(st.z_blocks, before.z_blocks);
    }

    #[test]
    fn flat_ula_is_random_walk() {
        let p: Arc<dyn crate::model::Potential> =
            Arc::new(crate::model::potentials::Quadratic::isotropic(1, 0.0, vec![0.0]).unwrap());
        let model =
            SplitModel::new(1, vec![SplitFactor::new(crate::model::LinearOp::Identity(1), p).unwrap()]).unwrap();
        let mut rng = seeded(4);
        let n = 50_000;
        let h = 0.3;
        let steps: Vec<f64> = (0..n).map(|_| ula_step(&model, &[0.0], h, &mut rng).unwrap()[0]).collect();
        let var = steps.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let se = 2.0 * h * (2.0 / n as f64).sqrt();
        assert!((var - 2.0 * h).abs() < 4.0 * se);
    }

    #[test]
    fn am_fixed_point_satisfies_first_order_conditions() {
        let model = build(&TestModel::mixture(3)).unwrap();
        let rho = 0.7;
        let r = am_solve(&model, rho, &[0.5, -0.2, 0.9], 200).unwrap();
        for (f, z) in model.factors().iter().zip(&r.z_blocks) {
            assert!(crate::conditionals::conditional_gradient_norm(f, &r.theta, z, rho) <= 1e-8);
        }
        let mut rhs = vec![0.0; 3];
        ThetaConditional::rhs(&model, &r.z_blocks, &mut rhs);
        let g = model.gram() * nalgebra::DVector::from_column_slice(&r.theta);
        for k in 0..3 {
            assert!((g[k] - rhs[k]).abs() < 1e-12);
        }
    }
}
