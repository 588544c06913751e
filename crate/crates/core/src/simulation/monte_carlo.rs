use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::truth::{generate_dataset, SimulationTruth};
use crate::error::{Error, Result};
use crate::estimator::{
    default_grids, fit, normal_quantile, predict_curves, select_knots, wald_statistic, Curves,
    FitConfig, FitResult, SieveLayout,
};
use crate::par::{map_indices, Execution};
use crate::spline::linspace;

/// Largest tolerated fraction of failed replicates.
pub const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n: usize,
    pub replicates: usize,
    pub master_seed: u64,
    pub layout: SieveLayout,
    /// Select basis sizes per replicate by AIC over this grid instead of
    /// using `layout.counts`.
    pub aic_grid: Option<Vec<Vec<usize>>>,
    pub quadrature_order: usize,
    pub level: f64,
    pub curve_points: usize,
    pub fit: FitConfig,
    /// How replicates are scheduled; each fit then runs sequentially.
    pub execution: Execution,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n: 400,
            replicates: 400,
            master_seed: 20_100_601,
            layout: SieveLayout::quadratic(vec![5, 5]),
            aic_grid: None,
            quadrature_order: crate::spline::DEFAULT_QUADRATURE_ORDER,
            level: 0.95,
            curve_points: 201,
            fit: FitConfig::default(),
            execution: Execution::Parallel,
        }
    }
}

/// Pointwise curve values on the truth grids for `H` and `h_1`.
type BandValues = (Vec<Option<f64>>, Vec<Option<f64>>);

/// Per-replicate outcome; coefficient vectors exclude the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: usize,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    pub counts: Vec<usize>,
    /// Coefficients of the transformation held at their bound.
    pub active_bounds: usize,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub ci_hit: Vec<bool>,
    pub joint_hit: bool,
    pub wald: f64,
    pub l2_transformation: f64,
    pub l2_component: f64,
    pub error: Option<String>,
    #[serde(skip)]
    band_values: Option<BandValues>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub truth: f64,
    pub bias: f64,
    /// Absent with a single replicate.
    pub sd: Option<f64>,
    pub mean_esd: f64,
    pub coverage: f64,
    pub coverage_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n: usize,
    pub replicates: usize,
    pub failures: usize,
    /// Successful replicates whose fit ended with a coefficient at its bound.
    pub at_bound: usize,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    pub level: f64,
    pub coefficients: Vec<CoefficientSummary>,
    /// Wald ellipsoid for all non-intercept coefficients against the
    /// chi-square quantile with that many degrees of freedom.
    pub joint_coverage: f64,
    pub joint_coverage_se: f64,
    pub joint_method: String,
    pub mean_l2_transformation: f64,
    pub mean_l2_component: f64,
    pub median_l2_transformation: f64,
    pub median_l2_component: f64,
}

/// Pointwise summary of fitted curves across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub x: f64,
    pub truth: f64,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct McReport {
    pub summary: McSummary,
    pub replicates: Vec<ReplicateRecord>,
    pub transformation_band: Vec<BandPoint>,
    pub component_band: Vec<BandPoint>,
}

/// Replicate seed: SplitMix64 of the master seed advanced `index + 1` times.
pub fn replicate_seed(master: u64, index: usize) -> u64 {
    let mut z = master.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trapezoid-rule `L2` norm of `values` sampled at `x`.
pub fn trapezoid_l2(x: &[f64], values: &[f64]) -> f64 {
    x.windows(2)
        .zip(values.windows(2))
        .map(|(xs, vs)| 0.5 * (xs[1] - xs[0]) * (vs[0] * vs[0] + vs[1] * vs[1]))
        .sum::<f64>()
        .sqrt()
}

/// `L2` distances between tabulated curves and the truth, after fixing the
/// unidentified constants the same way the fit does: the transformation
/// vanishes at the left end of its grid and the component has zero mean.
pub fn curve_error_of(curves: &Curves, truth: &SimulationTruth) -> (f64, f64) {
    let v = &curves.v;
    let h_err = match v.first() {
        Some(&lo) => {
            let anchor = truth.transformation(lo);
            let diff: Vec<f64> = v
                .iter()
                .zip(&curves.transformation)
                .map(|(&x, &est)| est - (truth.transformation(x) - anchor))
                .collect();
            trapezoid_l2(v, &diff)
        }
        None => 0.0,
    };
    let c_err = match (curves.w.first(), curves.components.first()) {
        (Some(w), Some(est)) if w.len() > 1 => {
            let mean = truth.component_mean(w[0], w[w.len() - 1]);
            let diff: Vec<f64> = w
                .iter()
                .zip(est)
                .map(|(&x, &e)| e - (truth.component(x) - mean))
                .collect();
            trapezoid_l2(w, &diff)
        }
        _ => 0.0,
    };
    (h_err, c_err)
}

/// `(||H_hat - H0||_2, ||h_hat - h0||_2)` on `points` equally spaced grid
/// points over the fitted domains.
pub fn curve_error(fit: &FitResult, truth: &SimulationTruth, points: usize) -> Result<(f64, f64)> {
    let (gv, gw) = default_grids(&fit.spec, points);
    let curves = predict_curves(fit, &gv, &gw)?;
    Ok(curve_error_of(&curves, truth))
}

fn band_grids(truth: &SimulationTruth, points: usize) -> (Vec<f64>, Vec<f64>) {
    (
        linspace(truth.v_range.0, truth.v_range.1, points),
        linspace(truth.w_range.0, truth.w_range.1, points),
    )
}

/// Fitted curves on the common band grids, shifted by the truth's
/// constants so they estimate `H0` and `h0` themselves; `None` outside the
/// replicate's fitted domain.
fn band_values(
    fit: &FitResult,
    truth: &SimulationTruth,
    grid_v: &[f64],
    grid_w: &[f64],
) -> Result<BandValues> {
    let spec = &fit.spec;
    let h = spec.transformation(&fit.params)?;
    let (lo, _) = spec.basis0().domain();
    let h_shift = truth.transformation(lo);
    let hv = grid_v
        .iter()
        .map(|&v| h.integrate_exp_spline(v).ok().map(|x| x + h_shift))
        .collect();
    let (a, b) = spec.components()[0].source().domain();
    let c_shift = truth.component_mean(a, b);
    let cw = grid_w
        .iter()
        .map(|&w| spec.component(&fit.params, 0, w).ok().map(|x| x + c_shift))
        .collect();
    Ok((hv, cw))
}

fn run_replicate(
    truth: &SimulationTruth,
    config: &McConfig,
    fit_config: &FitConfig,
    index: usize,
    grids: &(Vec<f64>, Vec<f64>),
) -> ReplicateRecord {
    let seed = replicate_seed(config.master_seed, index);
    let mut record = ReplicateRecord {
        index,
        seed,
        converged: false,
        iterations: 0,
        counts: config.layout.counts.clone(),
        active_bounds: 0,
        beta: Vec::new(),
        se: Vec::new(),
        ci_hit: Vec::new(),
        joint_hit: false,
        wald: f64::NAN,
        l2_transformation: f64::NAN,
        l2_component: f64::NAN,
        error: None,
        band_values: None,
    };
    let outcome = (|| -> Result<()> {
        let data = generate_dataset(truth, config.n, seed);
        let fitted = match &config.aic_grid {
            Some(grid) => {
                select_knots(
                    &config.layout,
                    truth.link,
                    &data,
                    grid,
                    config.quadrature_order,
                    fit_config,
                )?
                .best
            }
            None => {
                let spec = config
                    .layout
                    .model_spec(truth.link, &data, config.quadrature_order)?;
                fit(&spec, &data, fit_config)?
            }
        };
        record.converged = fitted.converged;
        record.iterations = fitted.iterations;
        record.counts = fitted.spec.basis_counts();
        record.active_bounds = fitted.active_bounds.len();
        record.beta = fitted.params.beta[1..].to_vec();
        let se = fitted.se_beta.as_ref().ok_or(Error::SingularInformation)?;
        record.se = se[1..].to_vec();
        let z = normal_quantile(0.5 * (1.0 + config.level));
        record.ci_hit = record
            .beta
            .iter()
            .zip(&record.se)
            .zip(truth.beta)
            .map(|((b, s), t)| (b - t).abs() <= z * s)
            .collect();
        let k = record.beta.len();
        let indices: Vec<usize> = (1..=k).collect();
        record.wald = wald_statistic(&fitted, &indices, &truth.beta[..k])?;
        let chi = ChiSquared::new(k as f64)
            .map_err(|e| Error::Harness(e.to_string()))?
            .inverse_cdf(config.level);
        record.joint_hit = record.wald <= chi;
        let (eh, ec) = curve_error(&fitted, truth, config.curve_points)?;
        record.l2_transformation = eh;
        record.l2_component = ec;
        record.band_values = Some(band_values(&fitted, truth, &grids.0, &grids.1)?);
        Ok(())
    })();
    if let Err(e) = outcome {
        record.converged = false;
        record.error = Some(e.to_string());
    }
    record
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    Some((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt())
}

/// Type-7 quantile; sorts `xs`.
pub fn quantile(xs: &mut [f64], prob: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let h = (xs.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(xs.len() - 1);
    xs[lo] + (h - lo as f64) * (xs[hi] - xs[lo])
}

fn band(grid: &[f64], truth: impl Fn(f64) -> f64, columns: &[&Vec<Option<f64>>]) -> Vec<BandPoint> {
    grid.iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut vals: Vec<f64> = columns.iter().filter_map(|c| c[i]).collect();
            let (mean_v, lower, upper) = if vals.is_empty() {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                let m = mean(&vals);
                (m, quantile(&mut vals, 0.025), quantile(&mut vals, 0.975))
            };
            BandPoint {
                x,
                truth: truth(x),
                mean: mean_v,
                lower,
                upper,
                count: vals.len(),
            }
        })
        .collect()
}

/// Seeded Monte Carlo study: generate, fit, and summarize each replicate.
pub fn run_monte_carlo(truth: &SimulationTruth, config: &McConfig) -> Result<McReport> {
    if config.replicates == 0 {
        return Err(Error::Harness("at least one replicate is required".into()));
    }
    if !(0.0..1.0).contains(&config.level) {
        return Err(Error::Config(format!("level must be in [0, 1), got {}", config.level)));
    }
    config.fit.validate()?;
    let mut fit_config = config.fit;
    if config.execution.is_parallel() {
        fit_config.execution = Execution::Sequential;
    }
    let grids = band_grids(truth, config.curve_points.max(2));
    let records = map_indices(config.replicates, config.execution, |r| {
        run_replicate(truth, config, &fit_config, r, &grids)
    });

    let ok: Vec<&ReplicateRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let failures = records.len() - ok.len();
    if failures as f64 > MAX_FAILURE_RATE * records.len() as f64 {
        let first = records
            .iter()
            .find_map(|r| r.error.clone())
            .unwrap_or_default();
        return Err(Error::Harness(format!(
            "{failures} of {} replicates failed (first: {first})",
            records.len()
        )));
    }
    if ok.is_empty() {
        return Err(Error::Harness("no successful replicates".into()));
    }

    let k = ok[0].beta.len();
    let names = ["beta1", "beta2"];
    let r = ok.len() as f64;
    let coefficients = (0..k)
        .map(|c| {
            let est: Vec<f64> = ok.iter().map(|rec| rec.beta[c]).collect();
            let se: Vec<f64> = ok.iter().map(|rec| rec.se[c]).collect();
            let coverage = ok.iter().filter(|rec| rec.ci_hit[c]).count() as f64 / r;
            CoefficientSummary {
                name: names.get(c).map_or_else(|| format!("beta{}", c + 1), |s| s.to_string()),
                truth: truth.beta[c],
                bias: mean(&est) - truth.beta[c],
                sd: sample_sd(&est),
                mean_esd: mean(&se),
                coverage,
                coverage_se: (coverage * (1.0 - coverage) / r).sqrt(),
            }
        })
        .collect();
    let joint = ok.iter().filter(|rec| rec.joint_hit).count() as f64 / r;
    let mut l2h: Vec<f64> = ok.iter().map(|rec| rec.l2_transformation).collect();
    let mut l2c: Vec<f64> = ok.iter().map(|rec| rec.l2_component).collect();

    let summary = McSummary {
        n: config.n,
        replicates: records.len(),
        failures,
        at_bound: ok.iter().filter(|rec| rec.active_bounds > 0).count(),
        master_seed: config.master_seed,
        seeds: records.iter().map(|rec| rec.seed).collect(),
        level: config.level,
        coefficients,
        joint_coverage: joint,
        joint_coverage_se: (joint * (1.0 - joint) / r).sqrt(),
        joint_method: format!("wald ellipsoid, chi-square({k}) quantile"),
        mean_l2_transformation: mean(&l2h),
        mean_l2_component: mean(&l2c),
        median_l2_transformation: quantile(&mut l2h, 0.5),
        median_l2_component: quantile(&mut l2c, 0.5),
    };

    let hv: Vec<&Vec<Option<f64>>> = ok
        .iter()
        .filter_map(|rec| rec.band_values.as_ref().map(|b| &b.0))
        .collect();
    let cw: Vec<&Vec<Option<f64>>> = ok
        .iter()
        .filter_map(|rec| rec.band_values.as_ref().map(|b| &b.1))
        .collect();
    let transformation_band = band(&grids.0, |v| truth.transformation(v), &hv);
    let component_band = band(&grids.1, |w| truth.component(w), &cw);

    Ok(McReport {
        summary,
        replicates: records,
        transformation_band,
        component_band,
    })
}
