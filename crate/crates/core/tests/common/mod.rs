#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sievefit::estimator::Bounds;
use sievefit::likelihood::{Design, ModelSpec, Observation, ParameterVector};
use sievefit::simulation::{finite_diff_gradient, finite_diff_jacobian};
use sievefit::{LinkFamily, SplineBasis};

pub const FAMILIES: [LinkFamily; 5] = [
    LinkFamily::ExtremeValue,
    LinkFamily::Logistic,
    LinkFamily::Pareto(0.5),
    LinkFamily::Pareto(2.0),
    LinkFamily::Probit,
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random layout: 1-3 linear terms, 0-2 components, degrees 1-3, 3-6
/// basis functions, random domains.
pub fn random_spec(rng: &mut ChaCha8Rng, link: LinkFamily) -> ModelSpec {
    let l = rng.random_range(1..=3);
    let d = rng.random_range(0..=2);
    let basis = |rng: &mut ChaCha8Rng| {
        let degree = rng.random_range(1..=3);
        let k = rng.random_range(degree + 1..=6).max(3);
        let lo = rng.random_range(-1.0..1.0);
        let width = rng.random_range(0.5..3.0);
        SplineBasis::uniform(degree, k, (lo, lo + width)).unwrap()
    };
    let b0 = basis(rng);
    let bases = (0..d).map(|_| basis(rng)).collect();
    ModelSpec::new(link, l, b0, bases, 7).unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng, spec: &ModelSpec, scale: f64) -> ParameterVector {
    let x: Vec<f64> = (0..spec.free_dim())
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    spec.unflatten(&x).unwrap()
}

/// Records with covariates drawn uniformly over the spline domains and
/// `delta` drawn from the model at `params`.
pub fn model_data(
    rng: &mut ChaCha8Rng,
    spec: &ModelSpec,
    params: &ParameterVector,
    n: usize,
) -> Vec<Observation> {
    let (lo, hi) = spec.basis0().domain();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v = rng.random_range(lo..=hi);
        let z: Vec<f64> = (1..spec.n_linear())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let w: Vec<f64> = spec
            .components()
            .iter()
            .map(|c| {
                let (a, b) = c.source().domain();
                rng.random_range(a..=b)
            })
            .collect();
        let probe = Observation::new(v, false, &z, w.clone());
        let theta = spec.theta(params, &probe).unwrap();
        let delta = rng.random::<f64>() < spec.link().cdf(theta);
        out.push(Observation::new(v, delta, &z, w));
    }
    // both outcomes are needed for a valid design
    if out.iter().all(|o| o.delta) {
        out[0].delta = false;
    }
    if out.iter().all(|o| !o.delta) {
        out[0].delta = true;
    }
    out
}

/// `max |a - b| / max(max |b|, 1)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Analytic score against central differences of the log-likelihood.
pub fn gradient_error(design: &Design<'_>, x: &[f64]) -> f64 {
    let g = design.score(x).unwrap();
    let fd = finite_diff_gradient(|p| design.loglik(p).unwrap(), x, 1e-5);
    rel_err(g.as_slice(), &fd)
}

/// Analytic Hessian against central differences of the analytic score.
pub fn hessian_error(design: &Design<'_>, x: &[f64]) -> f64 {
    let h = design.hessian(x).unwrap();
    let fd = finite_diff_jacobian(|p| design.score(p).unwrap().as_slice().to_vec(), x, 1e-5);
    let p = x.len();
    let analytic: Vec<f64> = (0..p).flat_map(|i| (0..p).map(move |j| (i, j))).map(|(i, j)| h[(i, j)]).collect();
    let numeric: Vec<f64> = fd.iter().flatten().copied().collect();
    rel_err(&analytic, &numeric)
}

/// Largest eigenvalue of the symmetric part over one plus its spectral norm.
pub fn nsd_excess(h: &nalgebra::DMatrix<f64>) -> f64 {
    let (top, norm) = sievefit::likelihood::eigen_extremes(h);
    top / (1.0 + norm)
}

/// Derivative-free maximizer: compass search from several starts inside the
/// same coefficient box as the Newton fit. The step doubles after a
/// successful sweep and halves after a failed one; each start is capped at
/// `max_evals` evaluations.
pub fn compass_oracle(
    design: &Design<'_>,
    bounds: &Bounds,
    starts: &[Vec<f64>],
    tolerance: f64,
    max_evals: usize,
) -> (f64, Vec<f64>) {
    let p = design.free_dim();
    let f = |x: &nalgebra::DVector<f64>| {
        let v = design.loglik(x.as_slice()).unwrap();
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for start in starts {
        let mut x = nalgebra::DVector::from_column_slice(start);
        bounds.project(&mut x);
        let mut fx = f(&x);
        let mut step = 0.5;
        let mut evals = 0;
        while step > tolerance && evals < max_evals {
            let mut improved = false;
            for k in 0..p {
                for sign in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[k] += sign * step;
                    bounds.project(&mut y);
                    let fy = f(&y);
                    evals += 1;
                    if fy > fx {
                        x = y;
                        fx = fy;
                        improved = true;
                        break;
                    }
                }
            }
            step = if improved { (step * 2.0).min(4.0) } else { step * 0.5 };
        }
        if fx > best.0 {
            best = (fx, x.as_slice().to_vec());
        }
    }
    best
}

/// Scores every start, then refines the `keep` best by compass search.
pub fn multistart_oracle(
    design: &Design<'_>,
    bounds: &Bounds,
    starts: &[Vec<f64>],
    keep: usize,
) -> (f64, Vec<f64>) {
    let mut scored: Vec<(f64, Vec<f64>)> = starts
        .iter()
        .map(|s| {
            let mut x = nalgebra::DVector::from_column_slice(s);
            bounds.project(&mut x);
            let v = design.loglik(x.as_slice()).unwrap();
            (if v.is_finite() { v } else { f64::NEG_INFINITY }, x.as_slice().to_vec())
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let best: Vec<Vec<f64>> = scored.into_iter().take(keep).map(|(_, x)| x).collect();
    compass_oracle(design, bounds, &best, 1e-9, 200_000)
}
