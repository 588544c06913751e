//! B-spline bases, the integral-centering reparametrization for additive
//! components, and the exponentiated-spline integral that realizes the
//! monotone transformation.

mod basis;
mod centering;
mod quadrature;
mod transform;

pub use basis::{KnotPlacement, SplineBasis};
pub use centering::CenteredBasisMap;
pub use quadrature::GaussLegendre;
pub use transform::{NodeSet, TransformationSpec};

/// Gauss-Legendre nodes per knot span unless configured otherwise.
pub const DEFAULT_QUADRATURE_ORDER: usize = 10;

/// `m` equally spaced points from `lo` to `hi`, endpoints exact.
pub fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (m - 1) as f64;
            let mut out: Vec<f64> = (0..m).map(|i| lo + step * i as f64).collect();
            out[m - 1] = hi;
            out
        }
    }
}
