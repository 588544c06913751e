//! Data generation from the partly linear additive Cox truth and the
//! seeded Monte Carlo harness built on it.

mod monte_carlo;
mod oracle;
mod truth;

pub use monte_carlo::{
    curve_error, curve_error_of, quantile, replicate_seed, run_monte_carlo, trapezoid_l2,
    BandPoint, CoefficientSummary, McConfig, McReport, McSummary, ReplicateRecord,
    MAX_FAILURE_RATE,
};
pub use oracle::{finite_diff_gradient, finite_diff_jacobian};
pub use truth::{generate_dataset, SimulationTruth};
