//! C interface to the split Gibbs sampler.
//!
//! Models and chains are opaque handles created and released through this
//! API. Every fallible function returns an [`SmcStatus`]; on failure a
//! message is available from [`smc_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use libc::{c_char, size_t};
use splitmc::bias::{tv_bound_lipschitz, tv_bound_strongly_convex, w1_bound_single, BiasBound, Distance};
use splitmc::engine::{ChainState, Sampler, SamplerConfig};
use splitmc::model::zoo::{self, ZooParams};
use splitmc::model::{center_model, find_minimizer, SplitModel};
use splitmc::numerics::parabolic_cylinder_neg;
use splitmc::planner::{self, Branch, Plan};
use splitmc::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// A stated validity predicate does not hold (e.g. no strong convexity).
    ValidityViolation = 3,
    /// Quadrature, minimization or rejection sampling failed.
    NumericalFailure = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmcTheorem {
    W1Single = 0,
    TvSingle = 1,
    TvMulti = 2,
    TvNonStrongly = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmcBranch {
    EpsilonSquared = 0,
    ConditionNumber = 1,
    Tie = 2,
    BiasBudget = 3,
    ValidityCap = 4,
    Single = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmcDistance {
    Tv = 0,
    W1 = 1,
}

/// Parameters of the zoo models; unused fields are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SmcZooParams {
    pub sigma: f64,
    pub b: size_t,
    pub mu: f64,
    pub d: size_t,
    pub n: size_t,
    pub kappa: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SmcPlan {
    pub rho2: f64,
    pub t_mix: u64,
    pub t_mix_real: f64,
    pub k_sgs: f64,
    /// NaN when the plan has no initial-divergence constant.
    pub c: f64,
    /// NaN unless the plan regularizes the model.
    pub lambda: f64,
    pub branch: SmcBranch,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SmcBias {
    pub value: f64,
    pub raw: f64,
    pub valid: bool,
    pub distance: SmcDistance,
}

/// Opaque model handle.
pub struct SmcModel {
    inner: Arc<SplitModel>,
}

/// Opaque chain handle.
pub struct SmcChain {
    sampler: Sampler,
    state: ChainState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SmcStatus {
    match e {
        Error::InvalidParameter { .. } | Error::DimensionMismatch { .. } | Error::UnsupportedModel(_) => {
            SmcStatus::InvalidArgument
        }
        e if e.is_validity_violation() => SmcStatus::ValidityViolation,
        _ => SmcStatus::NumericalFailure,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), (SmcStatus, String)>>(f: F) -> SmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside splitmc");
            SmcStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (SmcStatus, String)>;
}

impl<T> IntoFfi<T> for splitmc::Result<T> {
    fn ffi(self) -> Result<T, (SmcStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (SmcStatus, String) {
    (SmcStatus::NullPointer, format!("{what} is null"))
}

fn branch(b: Branch) -> SmcBranch {
    match b {
        Branch::EpsilonSquared => SmcBranch::EpsilonSquared,
        Branch::ConditionNumber => SmcBranch::ConditionNumber,
        Branch::Tie => SmcBranch::Tie,
        Branch::BiasBudget => SmcBranch::BiasBudget,
        Branch::ValidityCap => SmcBranch::ValidityCap,
        Branch::Single => SmcBranch::Single,
    }
}

fn plan_out(p: &Plan) -> SmcPlan {
    SmcPlan {
        rho2: p.rho2,
        t_mix: p.t_mix,
        t_mix_real: p.t_mix_real,
        k_sgs: p.k_sgs,
        c: p.c.unwrap_or(f64::NAN),
        lambda: p.regularizer_lambda.unwrap_or(f64::NAN),
        branch: branch(p.branch),
    }
}

fn bias_out(b: &BiasBound) -> SmcBias {
    SmcBias {
        value: b.value,
        raw: b.raw,
        valid: b.valid,
        distance: match b.distance {
            Distance::Tv => SmcDistance::Tv,
            Distance::W1 => SmcDistance::W1,
        },
    }
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn smc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default zoo parameters.
#[no_mangle]
pub extern "C" fn smc_zoo_params_default() -> SmcZooParams {
    let p = ZooParams::default();
    SmcZooParams { sigma: p.sigma, b: p.b, mu: p.mu, d: p.d, n: p.n, kappa: p.kappa, seed: p.seed }
}

/// Builds a zoo model by name (`toy-gaussian-1`, `aniso-gaussian`, ...).
///
/// # Safety
/// `name` must be a NUL-terminated string, `params` may be null (defaults)
/// or point to a valid struct, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smc_model_zoo(
    name: *const c_char,
    params: *const SmcZooParams,
    out: *mut *mut SmcModel,
) -> SmcStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let name =
            CStr::from_ptr(name).to_str().map_err(|_| (SmcStatus::InvalidArgument, "name is not UTF-8".to_string()))?;
        let p = if params.is_null() { smc_zoo_params_default() } else { *params };
        let zp = ZooParams { sigma: p.sigma, b: p.b, mu: p.mu, d: p.d, n: p.n, kappa: p.kappa, seed: p.seed };
        let model = zoo::build(&zoo::from_name(name, &zp).ffi()?).ffi()?;
        *out = Box::into_raw(Box::new(SmcModel { inner: Arc::new(model) }));
        Ok(())
    })
}

/// Releases a model handle; null is ignored.
///
/// # Safety
/// `model` must come from this API and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn smc_model_free(model: *mut SmcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Dimension of θ, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smc_model_dim(model: *const SmcModel) -> size_t {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

/// Number of factors `b`, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn smc_model_num_factors(model: *const SmcModel) -> size_t {
    model.as_ref().map_or(0, |m| m.inner.num_factors())
}

/// Minimizes the potential and returns a new, centered model. When
/// `theta_star` is non-null it receives the minimizer (`dim` entries).
///
/// # Safety
/// `model` must be live, `out` writable, `theta_star` null or valid for
/// `dim` writes.
#[no_mangle]
pub unsafe extern "C" fn smc_model_center(
    model: *const SmcModel,
    out: *mut *mut SmcModel,
    theta_star: *mut f64,
) -> SmcStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let min = find_minimizer(&m.inner, None, None).ffi()?;
        let centered = center_model(&m.inner, &min.theta_star).ffi()?;
        if !theta_star.is_null() {
            ptr::copy_nonoverlapping(min.theta_star.as_ptr(), theta_star, min.theta_star.len());
        }
        *out = Box::into_raw(Box::new(SmcModel { inner: Arc::new(centered) }));
        Ok(())
    })
}

/// Contraction constant `K_SGS` at coupling `rho`.
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn smc_k_sgs(model: *const SmcModel, rho: f64, out: *mut f64) -> SmcStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = planner::k_sgs(&m.inner, rho).ffi()?;
        Ok(())
    })
}

/// Plan from explicit constants. `d` is ignored by the Wasserstein plan and
/// `radius` is used only by the non-strongly-convex plan.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smc_plan_single(
    theorem: SmcTheorem,
    m1: f64,
    big_m1: f64,
    d: size_t,
    radius: f64,
    eps: f64,
    out: *mut SmcPlan,
) -> SmcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let plan = match theorem {
            SmcTheorem::W1Single => planner::plan_w1_single(m1, big_m1, eps),
            SmcTheorem::TvSingle => planner::plan_tv_single(m1, big_m1, d, eps),
            SmcTheorem::TvNonStrongly => planner::plan_tv_nonstrongly(big_m1, d, radius, eps),
            SmcTheorem::TvMulti => {
                return Err((SmcStatus::InvalidArgument, "use smc_plan_multi for the multi-split plan".into()))
            }
        }
        .ffi()?;
        *out = plan_out(&plan);
        Ok(())
    })
}

/// Multi-split TV plan for a centered model.
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn smc_plan_multi(model: *const SmcModel, eps: f64, out: *mut SmcPlan) -> SmcStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = plan_out(&planner::plan_tv_multi(&m.inner, eps).ffi()?);
        Ok(())
    })
}

/// TV bias bound for Lipschitz factors.
///
/// # Safety
/// `lipschitz` and `dims` must hold `n` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smc_bias_tv_lipschitz(
    lipschitz: *const f64,
    dims: *const size_t,
    n: size_t,
    rho: f64,
    out: *mut SmcBias,
) -> SmcStatus {
    guard(|| {
        if lipschitz.is_null() || dims.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let l = std::slice::from_raw_parts(lipschitz, n);
        let d = std::slice::from_raw_parts(dims, n);
        *out = bias_out(&tv_bound_lipschitz(l, d, rho).ffi()?);
        Ok(())
    })
}

/// TV bias bound for smooth, strongly convex models.
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn smc_bias_tv_strongly_convex(model: *const SmcModel, rho: f64, out: *mut SmcBias) -> SmcStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = bias_out(&tv_bound_strongly_convex(&m.inner, rho).ffi()?);
        Ok(())
    })
}

/// Single-split W₁ bias bound.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smc_bias_w1_single(big_m1: f64, d: size_t, rho: f64, out: *mut SmcBias) -> SmcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = bias_out(&w1_bound_single(big_m1, d, rho).ffi()?);
        Ok(())
    })
}

/// Parabolic cylinder function `D₋ν(z)` for `ν > 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smc_parabolic_cylinder(nu: f64, z: f64, out: *mut f64) -> SmcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = parabolic_cylinder_neg(nu, z).ffi()?;
        Ok(())
    })
}

/// Creates a chain at `theta0` (`dim` entries), or at the model's
/// minimizer / the origin when `theta0` is null.
///
/// # Safety
/// `model` must be live, `theta0` null or valid for `dim` reads, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn smc_chain_new(
    model: *const SmcModel,
    rho: f64,
    seed: u64,
    theta0: *const f64,
    out: *mut *mut SmcChain,
) -> SmcStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = m.inner.dim();
        let start: Vec<f64> = if theta0.is_null() {
            m.inner.theta_star().map(|t| t.to_vec()).unwrap_or_else(|| vec![0.0; d])
        } else {
            std::slice::from_raw_parts(theta0, d).to_vec()
        };
        let sampler = Sampler::new(m.inner.clone(), SamplerConfig::new(rho, 0)).ffi()?;
        let state = ChainState::new(&m.inner, &start, seed).ffi()?;
        *out = Box::into_raw(Box::new(SmcChain { sampler, state }));
        Ok(())
    })
}

/// Advances a chain by `sweeps` sweeps. When `proposals` is non-null it
/// receives the total number of rejection-sampler proposals.
///
/// # Safety
/// `chain` must be live; `proposals` null or writable.
#[no_mangle]
pub unsafe extern "C" fn smc_chain_step(chain: *mut SmcChain, sweeps: u64, proposals: *mut u64) -> SmcStatus {
    guard(|| {
        let c = chain.as_mut().ok_or_else(|| null("chain"))?;
        let mut total = 0u64;
        for _ in 0..sweeps {
            total += c.sampler.sweep(&mut c.state).ffi()?.total_proposals();
        }
        if !proposals.is_null() {
            *proposals = total;
        }
        Ok(())
    })
}

/// Copies the current θ into `out`, which must hold `len >= dim` entries.
///
/// # Safety
/// `chain` must be live and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn smc_chain_theta(chain: *const SmcChain, out: *mut f64, len: size_t) -> SmcStatus {
    guard(|| {
        let c = chain.as_ref().ok_or_else(|| null("chain"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let theta = &c.state.theta;
        if len < theta.len() {
            return Err((SmcStatus::InvalidArgument, format!("buffer holds {len} values, need {}", theta.len())));
        }
        ptr::copy_nonoverlapping(theta.as_ptr(), out, theta.len());
        Ok(())
    })
}

/// Number of completed sweeps, or 0 for a null handle.
///
/// # Safety
/// `chain` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn smc_chain_sweeps(chain: *const SmcChain) -> u64 {
    chain.as_ref().map_or(0, |c| c.state.sweep)
}

/// Releases a chain handle; null is ignored.
///
/// # Safety
/// `chain` must come from this API and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn smc_chain_free(chain: *mut SmcChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}
