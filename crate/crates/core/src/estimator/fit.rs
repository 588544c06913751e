use nalgebra::{DMatrix, DVector};

use super::{information, FitConfig, Information, IterationRecord};
use crate::error::{Error, Result};
use crate::likelihood::{eigen_extremes, Design, ModelSpec, Observation, Order, ParameterVector};

#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub params: ParameterVector,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub score_inf: f64,
    pub trace: Vec<IterationRecord>,
    /// Free coordinates held at the `gamma0` box at the optimum.
    pub active_bounds: Vec<usize>,
    /// `None` when the nuisance block of the information could not be
    /// factorized.
    pub information: Option<Information>,
    /// `sqrt(diag(I^-1) / n)`; `None` when the efficient information is
    /// singular.
    pub se_beta: Option<Vec<f64>>,
    pub aic: f64,
    pub n: usize,
}

impl FitResult {
    pub fn free_dim(&self) -> usize {
        self.spec.free_dim()
    }
}

/// Coordinate-wise box on the free vector: `gamma0` is confined to
/// `|gamma0_k + log(u_v - l_v)| <= bound`, everything else is free.
#[derive(Debug, Clone)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(spec: &ModelSpec, bound: f64) -> Self {
        let p = spec.free_dim();
        let mut lower = vec![f64::NEG_INFINITY; p];
        let mut upper = vec![f64::INFINITY; p];
        let (lo, hi) = spec.basis0().domain();
        let shift = (hi - lo).ln();
        let l = spec.n_linear();
        for k in l..l + spec.basis0().num_basis() {
            lower[k] = -bound - shift;
            upper[k] = bound - shift;
        }
        Self { lower, upper }
    }

    pub fn project(&self, x: &mut DVector<f64>) {
        for (k, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[k], self.upper[k]);
        }
    }

    /// Coordinates sitting on a bound whose gradient points outward.
    fn binding(&self, x: &DVector<f64>, g: &DVector<f64>) -> Vec<bool> {
        (0..x.len())
            .map(|k| (x[k] <= self.lower[k] && g[k] < 0.0) || (x[k] >= self.upper[k] && g[k] > 0.0))
            .collect()
    }
}

/// All coefficients zero except the intercept, which is set so that
/// `F(intercept)` equals the observed event fraction.
pub fn initial_point(spec: &ModelSpec, data: &[Observation]) -> Vec<f64> {
    let mut x = vec![0.0; spec.free_dim()];
    let rate = data.iter().filter(|o| o.delta).count() as f64 / data.len().max(1) as f64;
    x[0] = spec.link().quantile(rate.clamp(1e-6, 1.0 - 1e-6));
    x
}

/// Constant shifted log-derivative levels tried after the initial point.
const RESTART_LEVELS: [f64; 6] = [2.0, -2.0, 4.0, -4.0, 6.0, -6.0];

/// The initial point followed by `restarts` points whose transformation is
/// linear with slope `exp(c) / (u_v - l_v)`, intercept re-matched to the
/// event fraction. Levels beyond the fixed list repeat with growing size.
pub fn start_points(spec: &ModelSpec, data: &[Observation], restarts: usize) -> Vec<Vec<f64>> {
    let base = initial_point(spec, data);
    let (lo, hi) = spec.basis0().domain();
    let width = hi - lo;
    // summed in sorted order so the result ignores record order
    let mut fractions: Vec<f64> = data.iter().map(|o| ((o.v - lo) / width).clamp(0.0, 1.0)).collect();
    fractions.sort_by(f64::total_cmp);
    let mean_fraction = fractions.iter().sum::<f64>() / data.len().max(1) as f64;
    let l = spec.n_linear();
    let k0 = spec.basis0().num_basis();
    let mut out = vec![base.clone()];
    for r in 0..restarts {
        let level = RESTART_LEVELS[r % RESTART_LEVELS.len()] * (1 + r / RESTART_LEVELS.len()) as f64;
        let mut x = base.clone();
        for c in &mut x[l..l + k0] {
            *c = level - width.ln();
        }
        // H(v) = exp(level) (v - l_v) / width here; offset its mean
        x[0] = base[0] - level.exp() * mean_fraction;
        out.push(x);
    }
    out
}

/// Runs [`fit_from`] at every point of [`start_points`] and keeps the
/// converged run with the largest log-likelihood. Fails with the first
/// run's error when no run converges.
pub fn fit(spec: &ModelSpec, data: &[Observation], config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let mut best: Option<FitResult> = None;
    let mut first_error = None;
    for start in start_points(spec, data, config.restarts) {
        match fit_from(spec, data, config, &start) {
            Ok(f) => {
                if best.as_ref().is_none_or(|b| f.loglik > b.loglik) {
                    best = Some(f);
                }
            }
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    match (best, first_error) {
        (Some(f), _) => Ok(f),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("at least one start is always tried"),
    }
}

/// Maximizes the sieve log-likelihood by damped projected Newton ascent from
/// `start` (projected onto the box first).
///
/// Each step solves `(-H + ridge I) d = g` over the coordinates not held at
/// the `gamma0` box; the ridge starts at zero and escalates from
/// `ridge_epsilon` by factors of ten up to `ridge_max`. Past that the step
/// uses the absolute eigenvalues of `-H`. Steps are halved until the
/// log-likelihood strictly increases. Convergence is judged on the
/// projected gradient.
pub fn fit_from(
    spec: &ModelSpec,
    data: &[Observation],
    config: &FitConfig,
    start: &[f64],
) -> Result<FitResult> {
    config.validate()?;
    let design = Design::new(spec, data)?.with_execution(config.execution);
    let n = design.n();
    let p = design.free_dim();
    if p >= n {
        return Err(Error::Config(format!(
            "free dimension {p} must be smaller than the sample size {n}"
        )));
    }
    let bounds = Bounds::new(spec, config.log_derivative_bound);

    if start.len() != p {
        return Err(Error::Config(format!(
            "start has {} coordinates, expected {p}",
            start.len()
        )));
    }
    let mut x = DVector::from_column_slice(start);
    bounds.project(&mut x);
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut previous: Option<f64> = None;

    for iteration in 0..=config.max_iterations {
        let eval = design.evaluate(x.as_slice(), Order::Hessian)?;
        let g = eval.score.expect("gradient requested");
        let h = eval.hessian.expect("hessian requested");
        let loglik = eval.loglik;
        let mut fixed = bounds.binding(&x, &g);
        let projected = masked(&g, &fixed);
        let grad_inf = projected.amax();
        let scaled_tol = config.gradient_tolerance * (1.0 + loglik.abs());
        let (top, spread) = eigen_extremes(&h);
        let mut record = IterationRecord {
            iteration,
            loglik,
            grad_inf,
            step: 0.0,
            ridge: 0.0,
            hessian_max_eigenvalue: top,
            hessian_max_abs_eigenvalue: spread,
        };

        let stalled = previous.is_some_and(|prev| {
            (loglik - prev).abs() <= config.loglik_rel_tolerance * loglik.abs().max(1.0)
        });
        let done = |trace: Vec<IterationRecord>, x: DVector<f64>, fixed: &[bool]| {
            let active = (0..p).filter(|&k| fixed[k]).collect();
            finish(spec, &design, x, loglik, grad_inf, iteration, trace, active)
        };
        if grad_inf <= config.gradient_tolerance || (stalled && grad_inf <= scaled_tol) {
            trace.push(record);
            return done(trace, x, &fixed);
        }
        if iteration == config.max_iterations {
            trace.push(record);
            break;
        }

        // Hold bound coordinates the Newton step would push outward too, so
        // the projected path starts in an ascent direction.
        let (direction, ridge) = loop {
            let (d, ridge) = ascent_direction(&h, &g, &fixed, config);
            let mut grew = false;
            for k in 0..p {
                let outward = (x[k] <= bounds.lower[k] && d[k] < 0.0)
                    || (x[k] >= bounds.upper[k] && d[k] > 0.0);
                if outward && !fixed[k] {
                    fixed[k] = true;
                    grew = true;
                }
            }
            if !grew {
                break (d, ridge);
            }
        };
        record.ridge = ridge;

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=config.max_step_halvings {
            let mut candidate = &x + &direction * step;
            bounds.project(&mut candidate);
            let value = design.loglik(candidate.as_slice())?;
            if value.is_finite() && value > loglik {
                accepted = Some(candidate);
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some(next) => {
                record.step = step;
                trace.push(record);
                x = next;
                previous = Some(loglik);
            }
            None if grad_inf <= scaled_tol => {
                // no representable ascent left at this precision
                trace.push(record);
                return done(trace, x, &fixed);
            }
            None => {
                trace.push(record);
                return Err(Error::NonConvergence {
                    iterations: iteration,
                    grad_inf,
                    trace,
                });
            }
        }
    }
    let last = trace.last().map_or(f64::NAN, |r| r.grad_inf);
    Err(Error::NonConvergence {
        iterations: config.max_iterations,
        grad_inf: last,
        trace,
    })
}

fn masked(g: &DVector<f64>, fixed: &[bool]) -> DVector<f64> {
    DVector::from_iterator(g.len(), g.iter().zip(fixed).map(|(&v, &f)| if f { 0.0 } else { v }))
}

/// Newton direction over the coordinates not in `fixed` (zero elsewhere).
fn ascent_direction(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    fixed: &[bool],
    config: &FitConfig,
) -> (DVector<f64>, f64) {
    let free: Vec<usize> = (0..g.len()).filter(|&k| !fixed[k]).collect();
    let m = free.len();
    let neg_h = DMatrix::from_fn(m, m, |i, j| -h[(free[i], free[j])]);
    let gf = DVector::from_iterator(m, free.iter().map(|&k| g[k]));
    let (df, ridge) = free_direction(&neg_h, &gf, config);
    let mut d = DVector::zeros(g.len());
    for (i, &k) in free.iter().enumerate() {
        d[k] = df[i];
    }
    (d, ridge)
}

fn free_direction(neg_h: &DMatrix<f64>, g: &DVector<f64>, config: &FitConfig) -> (DVector<f64>, f64) {
    let p = g.len();
    let mut ridge = 0.0;
    loop {
        let mut m = neg_h.clone();
        for i in 0..p {
            m[(i, i)] += ridge;
        }
        if let Some(chol) = m.cholesky() {
            return (chol.solve(g), ridge);
        }
        ridge = if ridge == 0.0 {
            config.ridge_epsilon
        } else {
            ridge * 10.0
        };
        if ridge > config.ridge_max {
            break;
        }
    }
    let sym = (neg_h + neg_h.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let floor = config.ridge_max.max(1e-8 * eig.eigenvalues.amax());
    let proj = eig.eigenvectors.transpose() * g;
    let scaled = DVector::from_iterator(
        p,
        proj.iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, lambda)| c / lambda.abs().max(floor)),
    );
    (&eig.eigenvectors * scaled, f64::INFINITY)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    spec: &ModelSpec,
    design: &Design<'_>,
    x: DVector<f64>,
    loglik: f64,
    score_inf: f64,
    iterations: usize,
    trace: Vec<IterationRecord>,
    active_bounds: Vec<usize>,
) -> Result<FitResult> {
    let n = design.n();
    let info = information(design, x.as_slice()).ok();
    let se_beta = info.as_ref().and_then(|i| i.standard_errors(n));
    Ok(FitResult {
        spec: spec.clone(),
        params: spec.unflatten(x.as_slice())?,
        loglik,
        iterations,
        converged: true,
        score_inf,
        trace,
        active_bounds,
        information: info,
        se_beta,
        aic: -2.0 * loglik + 2.0 * spec.aic_parameters() as f64,
        n,
    })
}
