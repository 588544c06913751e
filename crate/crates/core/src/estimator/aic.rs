use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{fit, FitConfig, FitResult, SieveLayout};
use crate::error::{Error, Result};
use crate::likelihood::Observation;
use crate::link::LinkFamily;
use crate::par::map_indices;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AicRow {
    pub counts: Vec<usize>,
    pub free_dim: usize,
    pub loglik: Option<f64>,
    pub aic: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct KnotSelection {
    pub chosen: Vec<usize>,
    pub table: Vec<AicRow>,
    pub best: FitResult,
}

/// Cartesian product of `range` over `d + 1` functions, lexicographic.
pub fn default_grid(d: usize, range: RangeInclusive<usize>) -> Vec<Vec<usize>> {
    let mut grid: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..=d {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                range.clone().map(move |k| {
                    let mut next = prefix.clone();
                    next.push(k);
                    next
                })
            })
            .collect();
    }
    grid
}

/// Fits every candidate basis size and picks the smallest AIC
/// `-2 loglik + 2 (free dimension)`. Near-ties (relative 1e-12) go to the
/// candidate with fewer parameters.
pub fn select_knots(
    layout: &SieveLayout,
    link: LinkFamily,
    data: &[Observation],
    grid: &[Vec<usize>],
    quadrature_order: usize,
    config: &FitConfig,
) -> Result<KnotSelection> {
    if grid.is_empty() {
        return Err(Error::KnotSelection("empty candidate grid".into()));
    }
    let specs = grid
        .iter()
        .map(|counts| layout.with_counts(counts.clone()).model_spec(link, data, quadrature_order))
        .collect::<Result<Vec<_>>>()?;
    if let Some(spec) = specs.iter().find(|s| s.free_dim() >= data.len()) {
        return Err(Error::KnotSelection(format!(
            "candidate {:?} has {} free parameters for {} records",
            spec.basis_counts(),
            spec.free_dim(),
            data.len()
        )));
    }
    let fits = map_indices(specs.len(), config.execution, |i| fit(&specs[i], data, config));

    let table: Vec<AicRow> = specs
        .iter()
        .zip(&fits)
        .map(|(spec, f)| match f {
            Ok(f) => AicRow {
                counts: spec.basis_counts(),
                free_dim: spec.free_dim(),
                loglik: Some(f.loglik),
                aic: Some(f.aic),
                iterations: Some(f.iterations),
                error: None,
            },
            Err(e) => AicRow {
                counts: spec.basis_counts(),
                free_dim: spec.free_dim(),
                loglik: None,
                aic: None,
                iterations: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut best: Option<usize> = None;
    for (i, row) in table.iter().enumerate() {
        let Some(aic) = row.aic else { continue };
        best = match best {
            None => Some(i),
            Some(b) => {
                let current = table[b].aic.expect("best row has an aic");
                let tie = (aic - current).abs() <= 1e-12 * current.abs().max(1.0);
                let better = if tie {
                    (row.free_dim, &row.counts) < (table[b].free_dim, &table[b].counts)
                } else {
                    aic < current
                };
                Some(if better { i } else { b })
            }
        };
    }
    let Some(b) = best else {
        let reasons: Vec<String> = table
            .iter()
            .map(|r| format!("{:?}: {}", r.counts, r.error.as_deref().unwrap_or("?")))
            .collect();
        return Err(Error::KnotSelection(format!(
            "no candidate converged ({})",
            reasons.join("; ")
        )));
    };
    let best_fit = fits
        .into_iter()
        .nth(b)
        .expect("index in range")
        .expect("best candidate converged");
    Ok(KnotSelection {
        chosen: table[b].counts.clone(),
        table,
        best: best_fit,
    })
}
