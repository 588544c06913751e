//! Sieve maximum likelihood: Newton ascent over all coefficients, AIC
//! knot-count selection, the Schur-complement information estimate for the
//! linear coefficients, and curve estimates.

mod aic;
mod curves;
mod fit;
mod inference;
mod information;

use serde::{Deserialize, Serialize};

pub use aic::{default_grid, select_knots, AicRow, KnotSelection};
pub use curves::{default_grids, predict_curves, Curves};
pub(crate) use curves::curves_for;
pub use fit::{fit, fit_from, initial_point, start_points, Bounds, FitResult};
pub use inference::{confidence_intervals, normal_quantile, wald_statistic, ConfidenceInterval};
pub use information::{information, schur_information, Information};

use crate::error::{Error, Result};
use crate::likelihood::{ModelSpec, Observation};
use crate::link::LinkFamily;
use crate::par::Execution;
use crate::spline::{KnotPlacement, SplineBasis};

/// Spline degrees and basis sizes `(K_0, K_1, ..., K_d)` for `H` and each
/// additive component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SieveLayout {
    pub degrees: Vec<usize>,
    pub counts: Vec<usize>,
    #[serde(default)]
    pub placement: KnotPlacement,
}

impl SieveLayout {
    /// Quadratic splines with `counts` basis functions each.
    pub fn quadratic(counts: Vec<usize>) -> Self {
        Self {
            degrees: vec![2; counts.len()],
            counts,
            placement: KnotPlacement::Uniform,
        }
    }

    pub fn with_counts(&self, counts: Vec<usize>) -> Self {
        Self {
            counts,
            ..self.clone()
        }
    }

    /// Builds bases over the observed ranges of `v` and each `w_j`.
    pub fn model_spec(
        &self,
        link: LinkFamily,
        data: &[Observation],
        quadrature_order: usize,
    ) -> Result<ModelSpec> {
        let first = data
            .first()
            .ok_or_else(|| Error::DegenerateData("no observations".into()))?;
        let d = first.w.len();
        if self.degrees.len() != d + 1 {
            return Err(Error::shape("spline degrees", d + 1, self.degrees.len()));
        }
        if self.counts.len() != d + 1 {
            return Err(Error::shape("basis counts", d + 1, self.counts.len()));
        }
        if let Some(bad) = data.iter().find(|o| o.w.len() != d || o.z.len() != first.z.len()) {
            return Err(Error::shape("covariates per record", d, bad.w.len()));
        }
        let v: Vec<f64> = data.iter().map(|o| o.v).collect();
        let basis0 =
            SplineBasis::with_placement(self.placement, self.degrees[0], self.counts[0], &v)?;
        let bases = (0..d)
            .map(|j| {
                let w: Vec<f64> = data.iter().map(|o| o.w[j]).collect();
                SplineBasis::with_placement(
                    self.placement,
                    self.degrees[j + 1],
                    self.counts[j + 1],
                    &w,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        ModelSpec::new(link, first.z.len(), basis0, bases, quadrature_order)
    }
}

/// Optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub loglik_rel_tolerance: f64,
    pub ridge_epsilon: f64,
    pub ridge_max: f64,
    pub max_step_halvings: usize,
    /// Bound `c0` on `|g + log(u_v - l_v)|` for the log-derivative `g` of
    /// the transformation, imposed coefficient-wise on `gamma0`. Infinite
    /// disables it.
    pub log_derivative_bound: f64,
    /// Extra Newton runs from transformations of different constant slope;
    /// the best converged run wins. The likelihood is not concave in
    /// `gamma0`, so one start can stop at a local maximum.
    pub restarts: usize,
    pub execution: Execution,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            loglik_rel_tolerance: 1e-9,
            ridge_epsilon: 1e-8,
            ridge_max: 1e-2,
            max_step_halvings: 60,
            log_derivative_bound: 10.0,
            restarts: 2,
            execution: Execution::Parallel,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gradient_tolerance", self.gradient_tolerance),
            ("loglik_rel_tolerance", self.loglik_rel_tolerance),
            ("ridge_epsilon", self.ridge_epsilon),
            ("ridge_max", self.ridge_max),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        if self.log_derivative_bound.is_nan() || self.log_derivative_bound <= 0.0 {
            return Err(Error::Config(format!(
                "log_derivative_bound must be positive, got {}",
                self.log_derivative_bound
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// One accepted (or final) Newton iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub loglik: f64,
    pub grad_inf: f64,
    /// Step length accepted by the line search (0 for the final record).
    pub step: f64,
    /// Ridge added to the negated Hessian for this step.
    pub ridge: f64,
    pub hessian_max_eigenvalue: f64,
    pub hessian_max_abs_eigenvalue: f64,
}
