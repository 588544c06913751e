use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::FitResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `Phi^-1(p)`.
pub fn normal_quantile(p: f64) -> f64 {
    if p == 0.5 {
        0.0
    } else {
        Normal::standard().inverse_cdf(p)
    }
}

/// Wald intervals `beta_k +- z_{(1+level)/2} se_k` for every linear
/// coefficient, intercept included.
pub fn confidence_intervals(fit: &FitResult, level: f64) -> Result<Vec<ConfidenceInterval>> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::Config(format!("confidence level must be in [0, 1), got {level}")));
    }
    let se = fit.se_beta.as_ref().ok_or(Error::SingularInformation)?;
    let z = normal_quantile(0.5 * (1.0 + level));
    Ok(fit
        .params
        .beta
        .iter()
        .zip(se)
        .map(|(&b, &s)| ConfidenceInterval {
            estimate: b,
            lower: b - z * s,
            upper: b + z * s,
        })
        .collect())
}

/// `d' S^-1 d` with `d = beta[idx] - reference` and `S` the matching block
/// of `I^-1 / n`. Over all coefficients this is `n d' I d`.
pub fn wald_statistic(fit: &FitResult, indices: &[usize], reference: &[f64]) -> Result<f64> {
    if indices.len() != reference.len() {
        return Err(Error::shape("wald reference", indices.len(), reference.len()));
    }
    let l = fit.params.beta.len();
    if let Some(&bad) = indices.iter().find(|&&i| i >= l) {
        return Err(Error::shape("wald index bound", l, bad));
    }
    let cov = fit
        .information
        .as_ref()
        .and_then(|i| i.covariance(fit.n))
        .ok_or(Error::SingularInformation)?;
    let k = indices.len();
    let sub = nalgebra::DMatrix::from_fn(k, k, |r, c| cov[(indices[r], indices[c])]);
    let d = DVector::from_iterator(
        k,
        indices.iter().zip(reference).map(|(&i, r)| fit.params.beta[i] - r),
    );
    let chol = sub.cholesky().ok_or(Error::SingularInformation)?;
    Ok(d.dot(&chol.solve(&d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantiles() {
        assert_eq!(normal_quantile(0.5), 0.0);
        assert_abs_diff_eq!(normal_quantile(0.975), 1.959_963_984_540_054, epsilon = 1e-12);
    }
}
