use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::dataset::{csv_error, read_dataset, Dataset};
use super::num;
use crate::error::{Error, Result};
use crate::estimator::{
    confidence_intervals, default_grids, fit, predict_curves, select_knots, AicRow, Curves,
    FitResult, IterationRecord,
};
use crate::likelihood::{ModelSpec, ParameterVector};
use crate::link::LinkFamily;
use crate::simulation::{run_monte_carlo, McReport, McSummary, SimulationTruth};
use crate::spline::SplineBasis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SavedBasis {
    pub degree: usize,
    pub interior_knots: Vec<f64>,
    pub domain: (f64, f64),
}

impl SavedBasis {
    fn of(b: &SplineBasis) -> Self {
        Self {
            degree: b.degree(),
            interior_knots: b.interior_knots().to_vec(),
            domain: b.domain(),
        }
    }

    fn basis(&self) -> Result<SplineBasis> {
        SplineBasis::new(self.degree, &self.interior_knots, self.domain)
    }
}

/// Everything needed to rebuild the fitted curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SavedModel {
    pub link: LinkFamily,
    pub n_linear: usize,
    pub transformation_basis: SavedBasis,
    pub component_bases: Vec<SavedBasis>,
    pub quadrature_order: usize,
    pub params: ParameterVector,
}

impl SavedModel {
    pub fn of(fit: &FitResult) -> Self {
        let spec = &fit.spec;
        Self {
            link: spec.link(),
            n_linear: spec.n_linear(),
            transformation_basis: SavedBasis::of(spec.basis0()),
            component_bases: spec.components().iter().map(|c| SavedBasis::of(c.source())).collect(),
            quadrature_order: spec.quadrature_order(),
            params: fit.params.clone(),
        }
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        let spec = ModelSpec::new(
            self.link,
            self.n_linear,
            self.transformation_basis.basis()?,
            self.component_bases
                .iter()
                .map(SavedBasis::basis)
                .collect::<Result<Vec<_>>>()?,
            self.quadrature_order,
        )?;
        spec.check_params(&self.params)?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub iterations: usize,
    pub initial_loglik: f64,
    pub final_loglik: f64,
    pub final_grad_inf: f64,
    /// Largest finite ridge used by a Newton step.
    pub max_ridge: f64,
    /// Steps that fell back to the eigenvalue-modified direction.
    pub eigen_fallback_steps: usize,
}

impl TraceSummary {
    fn of(trace: &[IterationRecord]) -> Self {
        let first = trace.first();
        let last = trace.last();
        Self {
            iterations: last.map_or(0, |r| r.iteration),
            initial_loglik: first.map_or(f64::NAN, |r| r.loglik),
            final_loglik: last.map_or(f64::NAN, |r| r.loglik),
            final_grad_inf: last.map_or(f64::NAN, |r| r.grad_inf),
            max_ridge: trace
                .iter()
                .map(|r| r.ridge)
                .filter(|r| r.is_finite())
                .fold(0.0, f64::max),
            eigen_fallback_steps: trace.iter().filter(|r| r.ridge.is_infinite()).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub link: LinkFamily,
    pub n: usize,
    pub events: usize,
    pub z_names: Vec<String>,
    pub w_names: Vec<String>,
    pub knots: Vec<usize>,
    pub degrees: Vec<usize>,
    pub free_dim: usize,
    pub loglik: f64,
    pub aic: f64,
    pub converged: bool,
    /// Free coordinates held at the transformation's coefficient bound.
    pub active_bounds: Vec<usize>,
    pub level: f64,
    pub coefficients: Vec<CoefficientReport>,
    pub trace: TraceSummary,
    pub aic_table: Option<Vec<AicRow>>,
    pub model: SavedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFile {
    pub fits: Vec<FitReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AicReport {
    pub link: LinkFamily,
    pub chosen: Vec<usize>,
    pub table: Vec<AicRow>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(csv_error)
}

pub fn read_fit_file(path: &Path) -> Result<FitFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::Input(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn report(fit: &FitResult, data: &Dataset, level: f64, table: Option<Vec<AicRow>>) -> Result<FitReport> {
    let cis = confidence_intervals(fit, level).ok();
    let names = std::iter::once("intercept".to_string()).chain(data.z_names.iter().cloned());
    let coefficients = names
        .zip(&fit.params.beta)
        .enumerate()
        .map(|(k, (name, &estimate))| CoefficientReport {
            name,
            estimate,
            se: fit.se_beta.as_ref().map(|s| s[k]),
            lower: cis.as_ref().map(|c| c[k].lower),
            upper: cis.as_ref().map(|c| c[k].upper),
        })
        .collect();
    Ok(FitReport {
        link: fit.spec.link(),
        n: fit.n,
        events: data.observations.iter().filter(|o| o.delta).count(),
        z_names: data.z_names.clone(),
        w_names: data.w_names.clone(),
        knots: fit.spec.basis_counts(),
        degrees: std::iter::once(fit.spec.basis0().degree())
            .chain(fit.spec.components().iter().map(|c| c.source().degree()))
            .collect(),
        free_dim: fit.free_dim(),
        loglik: fit.loglik,
        aic: fit.aic,
        converged: fit.converged,
        active_bounds: fit.active_bounds.clone(),
        level,
        coefficients,
        trace: TraceSummary::of(&fit.trace),
        aic_table: table,
        model: SavedModel::of(fit),
    })
}

fn write_trace(path: &Path, traces: &[(LinkFamily, Vec<IterationRecord>)]) -> Result<()> {
    let mut wtr = csv_writer(path)?;
    wtr.write_record([
        "link",
        "iteration",
        "loglik",
        "grad_inf",
        "step",
        "ridge",
        "hessian_max_eigenvalue",
        "hessian_max_abs_eigenvalue",
    ])
    .map_err(csv_error)?;
    for (link, trace) in traces {
        for r in trace {
            wtr.write_record([
                link.to_string(),
                r.iteration.to_string(),
                num(r.loglik),
                num(r.grad_inf),
                num(r.step),
                num(r.ridge),
                num(r.hessian_max_eigenvalue),
                num(r.hessian_max_abs_eigenvalue),
            ])
            .map_err(csv_error)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

fn write_curves(path: &Path, w_names: &[String], curves: &[(LinkFamily, Curves)]) -> Result<()> {
    let mut wtr = csv_writer(path)?;
    let mut header = vec!["link".to_string(), "v".to_string(), "H".to_string()];
    for n in w_names {
        header.push(format!("w_{n}"));
        header.push(format!("h_{n}"));
    }
    wtr.write_record(&header).map_err(csv_error)?;
    for (link, c) in curves {
        for i in 0..c.v.len() {
            let mut row = vec![link.to_string(), num(c.v[i]), num(c.transformation[i])];
            for j in 0..c.w.len() {
                row.push(num(c.w[j][i]));
                row.push(num(c.components[j][i]));
            }
            wtr.write_record(&row).map_err(csv_error)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Fits every configured link and writes `fit.json` and `curves.csv` into
/// `out_dir`. On non-convergence `trace.csv` is written instead and the
/// error returned.
pub fn cmd_fit(data_path: &Path, config: &RunConfig, out_dir: &Path) -> Result<FitFile> {
    config.validate()?;
    let data = read_dataset(data_path)?;
    let d = data.w_names.len();
    let layout = config.layout(d)?;
    let grid = config.aic_grid.as_ref().map(|g| g.expand(d)).transpose()?;
    fs::create_dir_all(out_dir)?;

    let mut reports = Vec::new();
    let mut curves = Vec::new();
    let mut traces = Vec::new();
    for link in config.link.to_vec() {
        let outcome = match &grid {
            Some(g) => select_knots(
                &layout,
                link,
                &data.observations,
                g,
                config.quadrature_order,
                &config.fit,
            )
            .map(|s| (s.best, Some(s.table))),
            None => layout
                .model_spec(link, &data.observations, config.quadrature_order)
                .and_then(|spec| fit(&spec, &data.observations, &config.fit))
                .map(|f| (f, None)),
        };
        let (fitted, table) = match outcome {
            Ok(ok) => ok,
            Err(Error::NonConvergence {
                iterations,
                grad_inf,
                trace,
            }) => {
                traces.push((link, trace.clone()));
                write_trace(&out_dir.join("trace.csv"), &traces)?;
                return Err(Error::NonConvergence {
                    iterations,
                    grad_inf,
                    trace,
                });
            }
            Err(e) => return Err(e),
        };
        traces.push((link, fitted.trace.clone()));
        let (gv, gw) = default_grids(&fitted.spec, config.curve_points);
        curves.push((link, predict_curves(&fitted, &gv, &gw)?));
        reports.push(report(&fitted, &data, config.level, table)?);
    }
    let file = FitFile { fits: reports };
    write_json(&out_dir.join("fit.json"), &file)?;
    write_curves(&out_dir.join("curves.csv"), &data.w_names, &curves)?;
    Ok(file)
}

/// Re-evaluates the curves stored in `fit.json` on `points` grid points per
/// function and writes them to `out_path` in the `curves.csv` layout.
pub fn predict(fit_path: &Path, points: usize, out_path: &Path) -> Result<Vec<(LinkFamily, Curves)>> {
    if points < 2 {
        return Err(Error::Config("curve_points must be at least 2".into()));
    }
    let file = read_fit_file(fit_path)?;
    let Some(first) = file.fits.first() else {
        return Err(Error::Input(format!("{}: no fits stored", fit_path.display())));
    };
    let w_names = first.w_names.clone();
    let mut out = Vec::new();
    for r in &file.fits {
        let spec = r.model.spec()?;
        let (gv, gw) = default_grids(&spec, points);
        let curves = crate::estimator::curves_for(&spec, &r.model.params, &gv, &gw)?;
        out.push((r.link, curves));
    }
    if let Some(parent) = out_path.parent() {
        fs::create_dir_all(parent)?;
    }
    write_curves(out_path, &w_names, &out)?;
    Ok(out)
}

/// Fits every candidate in the configured grid (default `{3..10}^(d+1)`)
/// for each link and writes `aic.csv`.
pub fn cmd_aic(data_path: &Path, config: &RunConfig, out_dir: &Path) -> Result<Vec<AicReport>> {
    config.validate()?;
    let data = read_dataset(data_path)?;
    let d = data.w_names.len();
    let layout = config.layout(d)?;
    let grid = config.aic_grid.clone().unwrap_or_default().expand(d)?;
    fs::create_dir_all(out_dir)?;

    let mut reports = Vec::new();
    for link in config.link.to_vec() {
        let sel = select_knots(
            &layout,
            link,
            &data.observations,
            &grid,
            config.quadrature_order,
            &config.fit,
        )?;
        reports.push(AicReport {
            link,
            chosen: sel.chosen,
            table: sel.table,
        });
    }

    let mut wtr = csv_writer(&out_dir.join("aic.csv"))?;
    let mut header = vec!["link".to_string()];
    header.extend((0..=d).map(|j| format!("k{j}")));
    header.extend(
        ["free_dim", "loglik", "aic", "iterations", "selected", "error"].map(String::from),
    );
    wtr.write_record(&header).map_err(csv_error)?;
    for rep in &reports {
        for row in &rep.table {
            let mut rec = vec![rep.link.to_string()];
            rec.extend(row.counts.iter().map(usize::to_string));
            rec.push(row.free_dim.to_string());
            rec.push(row.loglik.map(num).unwrap_or_default());
            rec.push(row.aic.map(num).unwrap_or_default());
            rec.push(row.iterations.map(|i| i.to_string()).unwrap_or_default());
            rec.push(u8::from(row.counts == rep.chosen).to_string());
            rec.push(row.error.clone().unwrap_or_default());
            wtr.write_record(&rec).map_err(csv_error)?;
        }
    }
    wtr.flush()?;
    Ok(reports)
}

/// Runs the Monte Carlo study and writes `summary.json`, `replicates.csv`
/// and `bands.csv`.
pub fn cmd_simulate(config: &RunConfig, out_dir: &Path) -> Result<McReport> {
    config.validate()?;
    let mc = config.monte_carlo()?;
    let truth = SimulationTruth::default();
    let report = run_monte_carlo(&truth, &mc)?;
    fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("summary.json"), &report.summary)?;

    let k = report
        .replicates
        .iter()
        .map(|r| r.beta.len())
        .max()
        .unwrap_or(0);
    let mut wtr = csv_writer(&out_dir.join("replicates.csv"))?;
    let mut header = vec!["index".to_string(), "seed".to_string(), "converged".to_string()];
    header.push("iterations".into());
    header.push("knots".into());
    header.push("active_bounds".into());
    header.extend((1..=k).map(|c| format!("beta{c}")));
    header.extend((1..=k).map(|c| format!("se{c}")));
    header.extend((1..=k).map(|c| format!("hit{c}")));
    header.extend(["joint_hit", "wald", "l2_H", "l2_h", "error"].map(String::from));
    wtr.write_record(&header).map_err(csv_error)?;
    for r in &report.replicates {
        let mut rec = vec![
            r.index.to_string(),
            r.seed.to_string(),
            u8::from(r.converged).to_string(),
            r.iterations.to_string(),
            r.counts
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(";"),
            r.active_bounds.to_string(),
        ];
        let pad = |v: Vec<String>| {
            let mut v = v;
            v.resize(k, String::new());
            v
        };
        rec.extend(pad(r.beta.iter().map(|&x| num(x)).collect()));
        rec.extend(pad(r.se.iter().map(|&x| num(x)).collect()));
        rec.extend(pad(r.ci_hit.iter().map(|&h| u8::from(h).to_string()).collect()));
        rec.push(u8::from(r.joint_hit).to_string());
        rec.push(num(r.wald));
        rec.push(num(r.l2_transformation));
        rec.push(num(r.l2_component));
        rec.push(r.error.clone().unwrap_or_default());
        wtr.write_record(&rec).map_err(csv_error)?;
    }
    wtr.flush()?;

    let mut wtr = csv_writer(&out_dir.join("bands.csv"))?;
    wtr.write_record(["curve", "x", "truth", "mean", "lower", "upper", "count"])
        .map_err(csv_error)?;
    for (name, band) in [("H", &report.transformation_band), ("h", &report.component_band)] {
        for p in band {
            wtr.write_record([
                name.to_string(),
                num(p.x),
                num(p.truth),
                num(p.mean),
                num(p.lower),
                num(p.upper),
                p.count.to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    wtr.flush()?;
    Ok(report)
}

/// Bias, SD, ESD and coverage per coefficient plus the joint coverage row.
pub fn format_table(s: &McSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "n = {}, replicates = {} ({} failed, {} at the bound), nominal level {}",
        s.n, s.replicates, s.failures, s.at_bound, s.level
    );
    let _ = writeln!(out, "{:<8}{:>10}{:>10}{:>10}{:>10}", "", "Bias", "SD", "ESD", "Coverage");
    for c in &s.coefficients {
        let sd = c.sd.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        let _ = writeln!(
            out,
            "{:<8}{:>10.4}{:>10}{:>10.4}{:>10.4}",
            c.name, c.bias, sd, c.mean_esd, c.coverage
        );
    }
    let _ = writeln!(out, "{:<8}{:>40.4}", "Joint", s.joint_coverage);
    let _ = writeln!(
        out,
        "L2 error (median): H {:.4}, h {:.4}",
        s.median_l2_transformation, s.median_l2_component
    );
    out
}
