use nalgebra::{DMatrix, DVector};

use super::SplineBasis;
use crate::error::{Error, Result};

/// Reparametrizes a spline `gamma' B` through a `K x (K-1)` map whose
/// columns span the null space of `c' = (integral of B_k)'`, so every
/// function built from reduced coefficients integrates to zero.
///
/// The map is the trailing `K-1` columns of the Householder reflector that
/// sends `c` to a multiple of `e_1`, hence it has orthonormal columns.
#[derive(Debug, Clone)]
pub struct CenteredBasisMap {
    source: SplineBasis,
    integral_weights: Vec<f64>,
    reduction: DMatrix<f64>,
}

impl CenteredBasisMap {
    pub fn new(source: SplineBasis) -> Result<Self> {
        let k = source.num_basis();
        if k < 2 {
            return Err(Error::InvalidKnots(
                "a centered basis needs at least two basis functions".into(),
            ));
        }
        let c = source.integrals();
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut v = DVector::from_column_slice(&c);
        v[0] += norm.copysign(c[0]);
        let vtv = v.dot(&v);
        let reflector = DMatrix::<f64>::identity(k, k) - (&v * v.transpose()) * (2.0 / vtv);
        let reduction = reflector.columns(1, k - 1).into_owned();
        Ok(Self {
            source,
            integral_weights: c,
            reduction,
        })
    }

    pub fn source(&self) -> &SplineBasis {
        &self.source
    }

    pub fn integral_weights(&self) -> &[f64] {
        &self.integral_weights
    }

    pub fn reduction_map(&self) -> &DMatrix<f64> {
        &self.reduction
    }

    pub fn reduced_dim(&self) -> usize {
        self.reduction.ncols()
    }

    /// Full-length coefficients `M r`.
    pub fn full_coefficients(&self, reduced: &[f64]) -> Result<Vec<f64>> {
        if reduced.len() != self.reduced_dim() {
            return Err(Error::shape(
                "reduced coefficients",
                self.reduced_dim(),
                reduced.len(),
            ));
        }
        let r = DVector::from_column_slice(reduced);
        Ok((&self.reduction * r).as_slice().to_vec())
    }

    /// Projects full coefficients onto the reduced coordinates. Exact
    /// inverse of [`full_coefficients`](Self::full_coefficients) whenever
    /// `c' gamma = 0`.
    pub fn reduce(&self, full: &[f64]) -> Result<Vec<f64>> {
        if full.len() != self.source.num_basis() {
            return Err(Error::shape(
                "full coefficients",
                self.source.num_basis(),
                full.len(),
            ));
        }
        let g = DVector::from_column_slice(full);
        Ok((self.reduction.transpose() * g).as_slice().to_vec())
    }

    /// `M' B(t)`, the design row for the reduced coefficients.
    pub fn reduced_row(&self, t: f64) -> Result<Vec<f64>> {
        let b = DVector::from_vec(self.source.eval(t)?);
        Ok((self.reduction.transpose() * b).as_slice().to_vec())
    }

    /// `h(t) = (M r)' B(t)`.
    pub fn eval_centered(&self, reduced: &[f64], t: f64) -> Result<f64> {
        let full = self.full_coefficients(reduced)?;
        let b = self.source.eval(t)?;
        Ok(full.iter().zip(&b).map(|(g, b)| g * b).sum())
    }
}
