use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{default_grid, FitConfig, SieveLayout};
use crate::link::LinkFamily;
use crate::simulation::McConfig;
use crate::spline::KnotPlacement;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Links {
    One(LinkFamily),
    Many(Vec<LinkFamily>),
}

impl Links {
    pub fn to_vec(&self) -> Vec<LinkFamily> {
        match self {
            Links::One(l) => vec![*l],
            Links::Many(v) => v.clone(),
        }
    }
}

/// Candidate basis sizes: an explicit list, or every combination of
/// `min..=max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AicGrid {
    #[serde(default)]
    pub candidates: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub min: Option<usize>,
    #[serde(default)]
    pub max: Option<usize>,
}

impl AicGrid {
    pub fn expand(&self, d: usize) -> Result<Vec<Vec<usize>>> {
        if let Some(c) = &self.candidates {
            if self.min.is_some() || self.max.is_some() {
                return Err(Error::Config("aic_grid: give either candidates or min/max".into()));
            }
            if let Some(bad) = c.iter().find(|k| k.len() != d + 1) {
                return Err(Error::Config(format!(
                    "aic_grid candidate {bad:?} needs {} entries",
                    d + 1
                )));
            }
            return Ok(c.clone());
        }
        let lo = self.min.unwrap_or(3);
        let hi = self.max.unwrap_or(10);
        if lo > hi {
            return Err(Error::Config(format!("aic_grid: min {lo} exceeds max {hi}")));
        }
        Ok(default_grid(d, lo..=hi))
    }
}

impl Default for AicGrid {
    fn default() -> Self {
        Self {
            candidates: None,
            min: Some(3),
            max: Some(10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub n: usize,
    pub replicates: usize,
    /// Choose basis sizes per replicate by AIC over `aic_grid`.
    pub per_replicate_aic: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            n: 400,
            replicates: 400,
            per_replicate_aic: false,
        }
    }
}

/// Settings shared by all subcommands. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub link: Links,
    /// Spline degree per function; quadratic when absent.
    pub degrees: Option<Vec<usize>>,
    /// Basis size per function; 5 each when absent.
    pub knots: Option<Vec<usize>>,
    /// When present, `fit` selects basis sizes by AIC over this grid.
    pub aic_grid: Option<AicGrid>,
    pub placement: KnotPlacement,
    pub quadrature_order: usize,
    pub curve_points: usize,
    pub level: f64,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub fit: FitConfig,
    pub simulation: SimulationSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            link: Links::One(LinkFamily::ExtremeValue),
            degrees: None,
            knots: None,
            aic_grid: None,
            placement: KnotPlacement::Uniform,
            quadrature_order: crate::spline::DEFAULT_QUADRATURE_ORDER,
            curve_points: 201,
            level: 0.95,
            seed: None,
            out_dir: None,
            fit: FitConfig::default(),
            simulation: SimulationSection::default(),
        }
    }
}

pub const DEFAULT_SEED: u64 = 20_100_601;

impl RunConfig {
    pub fn from_json(text: &str, source: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            Error::Input(format!(
                "{source}: line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.fit.validate()?;
        if self.link.to_vec().is_empty() {
            return Err(Error::Config("at least one link is required".into()));
        }
        if self.curve_points < 2 {
            return Err(Error::Config("curve_points must be at least 2".into()));
        }
        if self.quadrature_order == 0 {
            return Err(Error::Config("quadrature_order must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.level) {
            return Err(Error::Config(format!("level must be in [0, 1), got {}", self.level)));
        }
        Ok(())
    }

    /// Layout for `d` additive components.
    pub fn layout(&self, d: usize) -> Result<SieveLayout> {
        let degrees = self.degrees.clone().unwrap_or_else(|| vec![2; d + 1]);
        let counts = self.knots.clone().unwrap_or_else(|| vec![5; d + 1]);
        for (what, v) in [("degrees", &degrees), ("knots", &counts)] {
            if v.len() != d + 1 {
                return Err(Error::Config(format!(
                    "{what} needs {} entries (one for v and one per w column), got {}",
                    d + 1,
                    v.len()
                )));
            }
        }
        Ok(SieveLayout {
            degrees,
            counts,
            placement: self.placement,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// Monte Carlo settings for the one-component simulation truth.
    pub fn monte_carlo(&self) -> Result<McConfig> {
        let aic_grid = if self.simulation.per_replicate_aic {
            Some(self.aic_grid.clone().unwrap_or_default().expand(1)?)
        } else {
            None
        };
        Ok(McConfig {
            n: self.simulation.n,
            replicates: self.simulation.replicates,
            master_seed: self.seed(),
            layout: self.layout(1)?,
            aic_grid,
            quadrature_order: self.quadrature_order,
            level: self.level,
            curve_points: self.curve_points,
            fit: self.fit,
            execution: self.fit.execution,
        })
    }
}
