use std::ffi::{CStr, CString};
use std::ptr;

use splitmc_ffi::*;

fn toy(name: &str, sigma: f64, b: usize) -> *mut SmcModel {
    let mut p = smc_zoo_params_default();
    p.sigma = sigma;
    p.b = b;
    let name = CString::new(name).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { smc_model_zoo(name.as_ptr(), &p, &mut out) }, SmcStatus::Ok);
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(smc_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn toy_contraction_constant() {
    let m = toy("toy-gaussian-2", 3.0, 10);
    assert_eq!(unsafe { smc_model_dim(m) }, 1);
    assert_eq!(unsafe { smc_model_num_factors(m) }, 1);
    let mut k = 0.0;
    assert_eq!(unsafe { smc_k_sgs(m, 1.0, &mut k) }, SmcStatus::Ok);
    assert!((k - 10.0 / 19.0).abs() < 1e-12, "{k}");
    unsafe { smc_model_free(m) };
}

#[test]
fn unknown_model_sets_error() {
    let name = CString::new("no-such-model").unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { smc_model_zoo(name.as_ptr(), ptr::null(), &mut out) };
    assert_eq!(status, SmcStatus::InvalidArgument);
    assert!(out.is_null());
    assert!(last_error().contains("no-such-model"), "{}", last_error());
}

#[test]
fn null_arguments_are_rejected() {
    let mut k = 0.0;
    assert_eq!(unsafe { smc_k_sgs(ptr::null(), 1.0, &mut k) }, SmcStatus::NullPointer);
    assert_eq!(unsafe { smc_chain_step(ptr::null_mut(), 1, ptr::null_mut()) }, SmcStatus::NullPointer);
    assert_eq!(unsafe { smc_model_dim(ptr::null()) }, 0);
    unsafe {
        smc_model_free(ptr::null_mut());
        smc_chain_free(ptr::null_mut());
    }
}

#[test]
fn single_split_plan_and_bias() {
    let mut plan =
        SmcPlan { rho2: 0.0, t_mix: 0, t_mix_real: 0.0, k_sgs: 0.0, c: 0.0, lambda: 0.0, branch: SmcBranch::Single };
    assert_eq!(unsafe { smc_plan_single(SmcTheorem::TvSingle, 0.25, 1.0, 10, 0.0, 0.1, &mut plan) }, SmcStatus::Ok);
    assert!(plan.rho2 > 0.0 && plan.t_mix > 0);
    assert!(plan.k_sgs > 0.0 && plan.k_sgs < 1.0);

    let status = unsafe { smc_plan_single(SmcTheorem::TvSingle, 0.25, 1.0, 10, 0.0, 1.5, &mut plan) };
    assert_eq!(status, SmcStatus::ValidityViolation, "{}", last_error());

    let mut bias = SmcBias { value: 0.0, raw: 0.0, valid: false, distance: SmcDistance::Tv };
    assert_eq!(unsafe { smc_bias_w1_single(1.0, 4, 0.1, &mut bias) }, SmcStatus::Ok);
    assert_eq!(bias.distance, SmcDistance::W1);
    assert!((bias.value - 0.01 * 2.0 / 2.0).abs() < 1e-12, "{}", bias.value);

    let l = [1.0, 2.0];
    let d = [1usize, 1];
    assert_eq!(unsafe { smc_bias_tv_lipschitz(l.as_ptr(), d.as_ptr(), 2, 0.0, &mut bias) }, SmcStatus::Ok);
    assert_eq!(bias.value, 0.0);
}

#[test]
fn parabolic_cylinder_at_zero() {
    // D₋₁(0) = √(π/2).
    let mut v = 0.0;
    assert_eq!(unsafe { smc_parabolic_cylinder(1.0, 0.0, &mut v) }, SmcStatus::Ok);
    assert!((v - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10, "{v}");
}

#[test]
fn chain_runs_and_reports() {
    let m = toy("toy-gaussian-1", 3.0, 5);
    let mut centered = ptr::null_mut();
    let mut star = [f64::NAN];
    assert_eq!(unsafe { smc_model_center(m, &mut centered, star.as_mut_ptr()) }, SmcStatus::Ok);
    assert!(star[0].abs() < 1e-8);

    let mut bias = SmcBias { value: 0.0, raw: 0.0, valid: false, distance: SmcDistance::W1 };
    assert_eq!(unsafe { smc_bias_tv_strongly_convex(centered, 0.5, &mut bias) }, SmcStatus::Ok);
    assert!(bias.value > 0.0 && bias.distance == SmcDistance::Tv);

    let mut chain = ptr::null_mut();
    assert_eq!(unsafe { smc_chain_new(centered, 0.5, 7, ptr::null(), &mut chain) }, SmcStatus::Ok);
    let mut proposals = 0u64;
    assert_eq!(unsafe { smc_chain_step(chain, 20, &mut proposals) }, SmcStatus::Ok);
    assert_eq!(unsafe { smc_chain_sweeps(chain) }, 20);
    let mut theta = [f64::NAN];
    assert_eq!(unsafe { smc_chain_theta(chain, theta.as_mut_ptr(), 1) }, SmcStatus::Ok);
    assert!(theta[0].is_finite());
    assert_eq!(unsafe { smc_chain_theta(chain, theta.as_mut_ptr(), 0) }, SmcStatus::InvalidArgument);

    // Same seed, same trajectory.
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { smc_chain_new(centered, 0.5, 7, ptr::null(), &mut again) }, SmcStatus::Ok);
    assert_eq!(unsafe { smc_chain_step(again, 20, ptr::null_mut()) }, SmcStatus::Ok);
    let mut theta2 = [f64::NAN];
    assert_eq!(unsafe { smc_chain_theta(again, theta2.as_mut_ptr(), 1) }, SmcStatus::Ok);
    assert_eq!(theta[0].to_bits(), theta2[0].to_bits());

    unsafe {
        smc_chain_free(chain);
        smc_chain_free(again);
        smc_model_free(centered);
        smc_model_free(m);
    }
}

#[test]
fn multi_split_plan_needs_centering() {
    let m = toy("toy-gaussian-1", 3.0, 5);
    let mut plan =
        SmcPlan { rho2: 0.0, t_mix: 0, t_mix_real: 0.0, k_sgs: 0.0, c: 0.0, lambda: 0.0, branch: SmcBranch::Single };
    let status = unsafe { smc_plan_multi(m, 0.1, &mut plan) };
    assert_ne!(status, SmcStatus::Ok);
    let mut centered = ptr::null_mut();
    assert_eq!(unsafe { smc_model_center(m, &mut centered, ptr::null_mut()) }, SmcStatus::Ok);
    assert_eq!(unsafe { smc_plan_multi(centered, 0.1, &mut plan) }, SmcStatus::Ok, "{}", last_error());
    assert!(plan.rho2 > 0.0 && plan.t_mix > 0);
    unsafe {
        smc_model_free(centered);
        smc_model_free(m);
    }
}
