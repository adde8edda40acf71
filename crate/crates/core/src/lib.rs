//! Simulation of the one-dimensional contact process through its graphical
//! construction, with monotone couplings in the infection rate and in the
//! initial configuration, Monte Carlo estimators of the sensitivity to
//! initial conditions, and exact small-ring oracles.

pub mod error;
pub mod estimators;
pub mod exec;
pub mod harris;
pub mod lattice;
pub mod oracle;
pub mod rng;
pub mod stats;
mod strip;

pub use error::{Error, Result};
pub use estimators::{
    conditional_independence, conditional_occupation, delta_sensitivity, occupation_estimate, sensitivity_direct, sensitivity_dual,
    survival_probability, survival_profile, ConditionalOccupation, DeltaMode, EstimateWithCI, EstimatorKind,
    IndependenceTest, RunConfig, SensitivityPoint, Sign, SurvivalEstimate, WindowSetup,
};
pub use exec::Execution;
pub use harris::{
    run_coupled_initial, run_coupled_lambda, run_single, sample_bernoulli_window, Backend, ClockKind,
    CoupledTrajectory, Rates, RunSummary, Simulator,
};
pub use lattice::{f_sensitivity, imp_margin, imp_threshold, Configuration, ModelParams, WindowLambdaR};
pub use rng::ReplicaStream;
