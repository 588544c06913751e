//! Sieve maximum likelihood for the additive transformation model with
//! current status data.
//!
//! Each record `(v, delta, z, w)` has `P(delta = 1) = F(beta'z + H(v) +
//! sum_j h_j(w_j))` for a known error law `F`. The monotone `H` is written as
//! the integral of `exp(g)` with `g` a B-spline, and each `h_j` is a
//! B-spline constrained to integrate to zero; all coefficients are fitted
//! jointly by Newton ascent.

pub mod error;
pub mod estimator;
pub mod io;
pub mod likelihood;
pub mod link;
pub mod par;
pub mod simulation;
pub mod spline;

pub use error::{Error, Result};
pub use estimator::{fit, select_knots, FitConfig, FitResult, SieveLayout};
pub use likelihood::{Design, ModelSpec, Observation, ParameterVector};
pub use link::LinkFamily;
pub use par::Execution;
pub use simulation::{generate_dataset, run_monte_carlo, McConfig, SimulationTruth};
pub use spline::{CenteredBasisMap, SplineBasis, TransformationSpec};
