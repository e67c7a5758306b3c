//! Rotor imbalance suppression with two balancing heads.
//!
//! The pipeline: decompose the imbalance load into per-plane forces,
//! reduce each balancing head to a potential on the torus, solve the
//! steady problem in closed form, compute infinite-horizon open-loop
//! optima by direct transcription, certify the stabilization rate with
//! Lojasiewicz decay bounds, and synthesize a feedback law by
//! semi-Lagrangian value iteration.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod optim;
pub mod potential;
pub mod rl;
pub mod rotor;
pub mod steady;
pub mod torus;
pub mod transcription;

pub use analysis::{
    build_certificate, build_head_certificate, check_decay_bounds, estimate_lipschitz,
    estimate_lipschitz_head, estimate_lojasiewicz_head, fit_rate, lambda_conjugacy_residual,
    predict_rate, predict_rate_head, sqrt_spd_2x2, DecayCertificate, DecayMargins, RateReport,
    DEFAULT_FIT_WINDOW, LOJA_LOCAL_RADIUS,
};
pub use dynamics::{
    energy, integrate_el, phase_portrait, pontryagin_residual, ELState, PhasePortrait,
    PontryaginState,
};
pub use error::{Error, Result};
pub use potential::{HeadPotential, JointPotential, PendulumPotential, TorusPotential};
pub use rl::{
    bellman_sweep, feedback_rollout, hj_residual, initial_guess, required_iterations,
    value_iteration, HjReport, Rollout, ValueTable, ViOptions, ViStats,
};
pub use rotor::{
    balancing_force, decompose_imbalance, head_problem, imbalance_indicator, HeadProblem,
    PlaneForces, RotorConfig,
};
pub use steady::{
    can_fully_balance, exp_threshold, steady_argmin, steady_state, HeadZeroSet, MassPositions,
    SteadyOptimum,
};
pub use torus::AngleState;
pub use transcription::{
    select_horizon, solve_open_loop, solve_path, Horizon, HorizonRule, SolveOptions, SolvePath,
    SolveReport, Trajectory,
};
