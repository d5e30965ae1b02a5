//! Split Gibbs sampling for composite log-concave targets
//! `π(θ) ∝ exp(−Σᵢ Uᵢ(Aᵢθ))`.
//!
//! The sampler runs on the augmented density
//! `π_ρ(θ, z) ∝ exp(−Σᵢ Uᵢ(zᵢ) − Σᵢ‖zᵢ − Aᵢθ‖²/(2ρ²))`, alternating an
//! exact Gaussian draw of θ with independent draws of each `zᵢ`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bias;
pub mod conditionals;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod planner;
pub mod rng;
pub mod trace;

pub use engine::{ChainState, Sampler, SamplerConfig, SweepMode};
pub use error::{Error, Result};
pub use model::{center_model, find_minimizer, SplitFactor, SplitModel};
pub use planner::{Plan, Theorem};
