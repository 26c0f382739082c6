//! Transmitter scheduling for a platoon of cooperating FMCW radars.
//!
//! The crate builds the multistatic space-time steering vector seen by the
//! lead vehicle, casts the choice of which transmit antenna fires on which
//! pulse (the TDM schedule) as a quadratic assignment problem, solves it with
//! power-method-like iterations around an exact Hungarian solver, and
//! evaluates the resulting detector analytically and by Monte Carlo.
//!
//! Module map:
//!
//! - [`scenario`], [`steering`], [`selection`], [`covariance`]: platoon
//!   geometry, steering vectors and TDM masks.
//! - [`assignment`]: linear assignment (Hungarian / Munkres).
//! - [`scheduler`]: the quadratic form and the iterative scheduler.
//! - [`detection`], [`roc`]: detector statistics and ROC estimation.
//! - [`synth`]: reference and randomized scenarios for experiments.

pub mod assignment;
pub mod covariance;
pub mod detection;
pub mod error;
pub mod linalg;
pub mod matfile;
pub mod roc;
pub mod scenario;
pub mod scheduler;
pub mod selection;
pub mod steering;
pub mod synth;

pub use num_complex::Complex64;

pub use assignment::{assignment_to_matrix, hungarian_min, Assignment, CostMatrix};
pub use covariance::{CovarianceModel, NoiseBlock};
pub use detection::{
    analytic_pd, analytic_pfa, hypoexp_cdf, mean_h1, test_statistic, whitened_energy,
    AlphaModel, DetectorInputs, MeanMode,
};
pub use error::{Result, TdmError};
pub use roc::{roc_monte_carlo, MonteCarloRun, RocCurve};
pub use scenario::{Dims, DopplerMode, Radar, Scenario, Target, Vec2, Vehicle};
pub use scheduler::{
    build_q, build_s_matrix, diagonal_load, objective, optimize_schedule, power_iterations,
    QuadraticForm, ScheduleOptions, ScheduleResult,
};
pub use selection::{validate_selection, SelectionMatrix, SelectionViolation};
pub use steering::{
    apply_tdm, array_steering, doppler_steering, doppler_velocity, snapshot, stacked_steering,
    vehicle_steering, SteeringVector,
};
