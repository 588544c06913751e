use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::likelihood::Design;

const RIDGE_START: f64 = 1e-8;
const RIDGE_MAX: f64 = 1e-2;

/// Empirical outer-product information of the per-record scores and the
/// efficient information for the linear coefficients obtained by
/// projecting out the spline directions.
#[derive(Debug, Clone)]
pub struct Information {
    /// `(1/n) sum_i A_i A_i'` over all free coordinates.
    pub joint: DMatrix<f64>,
    pub i11: DMatrix<f64>,
    pub i12: DMatrix<f64>,
    pub i22: DMatrix<f64>,
    /// `I11 - I12 I22^-1 I21`.
    pub efficient: DMatrix<f64>,
    /// Ridge that was needed to factorize `I22` (zero if none).
    pub ridge: f64,
}

impl Information {
    /// `I^-1 / n`, the estimated covariance of the linear coefficients.
    pub fn covariance(&self, n: usize) -> Option<DMatrix<f64>> {
        let inv = self.efficient.clone().cholesky()?.inverse();
        Some(inv / n as f64)
    }

    pub fn standard_errors(&self, n: usize) -> Option<Vec<f64>> {
        let cov = self.covariance(n)?;
        Some(cov.diagonal().iter().map(|v| v.sqrt()).collect())
    }
}

/// Splits `joint` after the first `l` coordinates and forms the Schur
/// complement of the nuisance block.
pub fn schur_information(joint: &DMatrix<f64>, l: usize) -> Result<Information> {
    let p = joint.nrows();
    assert!(l <= p && joint.ncols() == p, "joint information must be square");
    let joint = (joint + joint.transpose()) * 0.5;
    let i11 = joint.view((0, 0), (l, l)).into_owned();
    let i12 = joint.view((0, l), (l, p - l)).into_owned();
    let i22 = joint.view((l, l), (p - l, p - l)).into_owned();
    if p == l {
        return Ok(Information {
            efficient: i11.clone(),
            joint,
            i11,
            i12,
            i22,
            ridge: 0.0,
        });
    }
    let mut ridge = 0.0;
    let chol = loop {
        let mut m = i22.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += ridge;
        }
        if let Some(c) = m.cholesky() {
            break c;
        }
        ridge = if ridge == 0.0 { RIDGE_START } else { ridge * 10.0 };
        if ridge > RIDGE_MAX {
            return Err(Error::SingularInformation);
        }
    };
    let projected = chol.solve(&i12.transpose());
    let mut efficient = &i11 - &i12 * projected;
    efficient = (&efficient + efficient.transpose()) * 0.5;
    Ok(Information {
        joint,
        i11,
        i12,
        i22,
        efficient,
        ridge,
    })
}

/// Information estimate at the coefficients `x` (normally the maximizer).
pub fn information(design: &Design<'_>, x: &[f64]) -> Result<Information> {
    let joint = design.outer_product_information(x)?;
    schur_information(&joint, design.spec().n_linear())
}
