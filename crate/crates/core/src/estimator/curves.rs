use serde::{Deserialize, Serialize};

use super::FitResult;
use crate::error::{Error, Result};
use crate::likelihood::{ModelSpec, ParameterVector};
use crate::spline::linspace;

/// Tabulated transformation and additive components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    pub v: Vec<f64>,
    pub transformation: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub components: Vec<Vec<f64>>,
}

/// `m` equally spaced points over each basis domain.
pub fn default_grids(spec: &ModelSpec, m: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (lo, hi) = spec.basis0().domain();
    let w = spec
        .components()
        .iter()
        .map(|c| {
            let (a, b) = c.source().domain();
            linspace(a, b, m)
        })
        .collect();
    (linspace(lo, hi, m), w)
}

pub fn predict_curves(fit: &FitResult, grid_v: &[f64], grid_w: &[Vec<f64>]) -> Result<Curves> {
    curves_for(&fit.spec, &fit.params, grid_v, grid_w)
}

pub(crate) fn curves_for(
    spec: &ModelSpec,
    params: &ParameterVector,
    grid_v: &[f64],
    grid_w: &[Vec<f64>],
) -> Result<Curves> {
    spec.check_params(params)?;
    if grid_w.len() != spec.components().len() {
        return Err(Error::shape("component grids", spec.components().len(), grid_w.len()));
    }
    let h = spec.transformation(params)?;
    let transformation = grid_v
        .iter()
        .map(|&v| h.integrate_exp_spline(v))
        .collect::<Result<Vec<_>>>()?;
    let components = grid_w
        .iter()
        .enumerate()
        .map(|(j, grid)| {
            grid.iter()
                .map(|&w| spec.component(params, j, w))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Curves {
        v: grid_v.to_vec(),
        transformation,
        w: grid_w.to_vec(),
        components,
    })
}
