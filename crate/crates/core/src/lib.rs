//! Randomized data-driven stabilization of unknown stochastic linear systems.
//!
//! The plant `x(t+1) = A₀x(t) + B₀u(t) + ξ(t+1)` is unknown. Two randomized
//! procedures learn `θ₀ = [A₀, B₀]` well enough that the certainty-equivalent
//! gain `L(θ̂)` stabilizes it:
//!
//! * **stochastic feedback** applies `k` Gaussian gains `L_i`, one per episode;
//! * **stochastic parameter** draws Gaussian parameters `θ_i` and applies
//!   their optimal gains `L(θ_i)`.
//!
//! Each episode yields a least-squares estimate of its closed-loop matrix
//! `A₀ + B₀L_i`; one joint least-squares problem over the episodes recovers
//! `θ̂`. The [`harness`] module runs Monte Carlo campaigns over horizons,
//! episode counts and randomization scales.

pub mod algorithms;
pub mod error;
pub mod estimation;
pub mod extended;
pub mod harness;
pub mod linalg;
pub mod riccati;
pub mod system;

pub use algorithms::{
    draw_feedback, draw_parameter, run, run_sf, run_sp, AlgoConfig, Algorithm, Arithmetic,
    RunResult, RunSeeds,
};
pub use error::{Error, Result};
pub use estimation::{
    closed_loop_ls, estimation_error, recover_theta, ClosedLoopEstimate, GainBasis,
};
pub use riccati::{
    closed_loop_radius, feedback_gain, solve_dare, spectral_radius, CostPair, RiccatiSolution,
    SolverOptions,
};
pub use system::{
    preset_benchmark, simulate_episode, step, DynamicsParameter, NoiseKind, NoiseModel,
    NoiseSource, StateCap, SystemDescription, TrajectoryLog,
};
