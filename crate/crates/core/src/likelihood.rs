//! Sieve log-likelihood for current status data and its analytic
//! derivatives over the free coefficients `(beta, gamma0, reduced gamma_j)`.
//!
//! For one record `theta = beta'z + H(v) + sum_j h_j(w_j)` and the
//! contribution is `delta log F(theta) + (1 - delta) log(1 - F(theta))`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::LinkFamily;
use crate::par::{chunked_reduce, Execution};
use crate::spline::{CenteredBasisMap, GaussLegendre, NodeSet, SplineBasis, TransformationSpec};

/// One current-status record. `z[0]` is the intercept and must equal 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub v: f64,
    pub delta: bool,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

impl Observation {
    /// Builds a record, prepending the intercept to `covariates`.
    pub fn new(v: f64, delta: bool, covariates: &[f64], w: Vec<f64>) -> Self {
        let mut z = Vec::with_capacity(covariates.len() + 1);
        z.push(1.0);
        z.extend_from_slice(covariates);
        Self { v, delta, z, w }
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.v
            .total_cmp(&other.v)
            .then(self.delta.cmp(&other.delta))
            .then_with(|| cmp_slices(&self.z, &other.z))
            .then_with(|| cmp_slices(&self.w, &other.w))
    }
}

fn cmp_slices(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// Coefficients in constrained coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub beta: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub reduced_gammas: Vec<Vec<f64>>,
}

impl ParameterVector {
    /// `(beta, gamma0, reduced gamma_1, ..., reduced gamma_d)` as one vector.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(
            self.beta.len()
                + self.gamma0.len()
                + self.reduced_gammas.iter().map(Vec::len).sum::<usize>(),
        );
        out.extend_from_slice(&self.beta);
        out.extend_from_slice(&self.gamma0);
        for r in &self.reduced_gammas {
            out.extend_from_slice(r);
        }
        out
    }
}

/// Link, spline bases and quadrature rule defining one sieve model.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    link: LinkFamily,
    n_linear: usize,
    basis0: SplineBasis,
    components: Vec<CenteredBasisMap>,
    rule: GaussLegendre,
}

impl ModelSpec {
    pub fn new(
        link: LinkFamily,
        n_linear: usize,
        basis0: SplineBasis,
        bases: Vec<SplineBasis>,
        quadrature_order: usize,
    ) -> Result<Self> {
        if n_linear == 0 {
            return Err(Error::Config("the linear part needs at least the intercept".into()));
        }
        if quadrature_order == 0 {
            return Err(Error::Config("quadrature order must be positive".into()));
        }
        let components = bases
            .into_iter()
            .map(CenteredBasisMap::new)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            link,
            n_linear,
            basis0,
            components,
            rule: GaussLegendre::new(quadrature_order),
        })
    }

    /// Same bases under a different link.
    pub fn with_link(&self, link: LinkFamily) -> Self {
        Self {
            link,
            ..self.clone()
        }
    }

    pub fn link(&self) -> LinkFamily {
        self.link
    }

    pub fn n_linear(&self) -> usize {
        self.n_linear
    }

    pub fn basis0(&self) -> &SplineBasis {
        &self.basis0
    }

    pub fn components(&self) -> &[CenteredBasisMap] {
        &self.components
    }

    pub fn quadrature_order(&self) -> usize {
        self.rule.order()
    }

    /// `(K_0, K_1, ..., K_d)`.
    pub fn basis_counts(&self) -> Vec<usize> {
        std::iter::once(self.basis0.num_basis())
            .chain(self.components.iter().map(|c| c.source().num_basis()))
            .collect()
    }

    /// `l + K_0 + sum_j (K_j - 1)`.
    pub fn free_dim(&self) -> usize {
        self.n_linear
            + self.basis0.num_basis()
            + self.components.iter().map(|c| c.reduced_dim()).sum::<usize>()
    }

    /// `l + sum_j K_j`, the parameter count charged by AIC. Exceeds the free
    /// dimension by one per centered component.
    pub fn aic_parameters(&self) -> usize {
        self.n_linear
            + self.basis0.num_basis()
            + self.components.iter().map(|c| c.source().num_basis()).sum::<usize>()
    }

    pub fn zeros(&self) -> ParameterVector {
        ParameterVector {
            beta: vec![0.0; self.n_linear],
            gamma0: vec![0.0; self.basis0.num_basis()],
            reduced_gammas: self
                .components
                .iter()
                .map(|c| vec![0.0; c.reduced_dim()])
                .collect(),
        }
    }

    pub fn unflatten(&self, flat: &[f64]) -> Result<ParameterVector> {
        if flat.len() != self.free_dim() {
            return Err(Error::shape("parameter vector", self.free_dim(), flat.len()));
        }
        let (beta, rest) = flat.split_at(self.n_linear);
        let (gamma0, mut rest) = rest.split_at(self.basis0.num_basis());
        let mut reduced_gammas = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let (head, tail) = rest.split_at(c.reduced_dim());
            reduced_gammas.push(head.to_vec());
            rest = tail;
        }
        Ok(ParameterVector {
            beta: beta.to_vec(),
            gamma0: gamma0.to_vec(),
            reduced_gammas,
        })
    }

    pub fn check_params(&self, params: &ParameterVector) -> Result<()> {
        if params.beta.len() != self.n_linear {
            return Err(Error::shape("beta", self.n_linear, params.beta.len()));
        }
        if params.gamma0.len() != self.basis0.num_basis() {
            return Err(Error::shape("gamma0", self.basis0.num_basis(), params.gamma0.len()));
        }
        if params.reduced_gammas.len() != self.components.len() {
            return Err(Error::shape(
                "additive components",
                self.components.len(),
                params.reduced_gammas.len(),
            ));
        }
        for (j, (c, r)) in self.components.iter().zip(&params.reduced_gammas).enumerate() {
            if r.len() != c.reduced_dim() {
                return Err(Error::shape(format!("reduced gamma[{j}]"), c.reduced_dim(), r.len()));
            }
        }
        Ok(())
    }

    pub fn transformation(&self, params: &ParameterVector) -> Result<TransformationSpec> {
        TransformationSpec::new(
            self.basis0.clone(),
            params.gamma0.clone(),
            self.rule.order(),
        )
    }

    /// `h_j(w)` for the `j`-th additive component (zero-based).
    pub fn component(&self, params: &ParameterVector, j: usize, w: f64) -> Result<f64> {
        let map = self
            .components
            .get(j)
            .ok_or_else(|| Error::shape("component index", self.components.len(), j))?;
        let reduced = params
            .reduced_gammas
            .get(j)
            .ok_or_else(|| Error::shape("additive components", self.components.len(), j))?;
        map.source().check(&format!("w[{j}]"), w)?;
        map.eval_centered(reduced, w)
    }

    pub fn check_observation(&self, obs: &Observation) -> Result<()> {
        if obs.z.len() != self.n_linear {
            return Err(Error::shape("z", self.n_linear, obs.z.len()));
        }
        if obs.z[0] != 1.0 {
            return Err(Error::Config(format!(
                "z[0] must be the intercept 1, found {}",
                obs.z[0]
            )));
        }
        if obs.w.len() != self.components.len() {
            return Err(Error::shape("w", self.components.len(), obs.w.len()));
        }
        if obs.z.iter().chain(&obs.w).any(|x| !x.is_finite()) {
            return Err(Error::DegenerateData("non-finite covariate".into()));
        }
        self.basis0.check("v", obs.v)?;
        for (j, (c, &w)) in self.components.iter().zip(&obs.w).enumerate() {
            c.source().check(&format!("w[{j}]"), w)?;
        }
        Ok(())
    }

    /// `theta = beta'z + H(v) + sum_j h_j(w_j)`, evaluated from scratch.
    pub fn theta(&self, params: &ParameterVector, obs: &Observation) -> Result<f64> {
        self.check_params(params)?;
        self.check_observation(obs)?;
        let linear: f64 = params.beta.iter().zip(&obs.z).map(|(b, z)| b * z).sum();
        let h = self.transformation(params)?.integrate_exp_spline(obs.v)?;
        let mut additive = 0.0;
        for j in 0..self.components.len() {
            additive += self.component(params, j, obs.w[j])?;
        }
        Ok(linear + h + additive)
    }
}

/// How much of the derivative information to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value,
    Gradient,
    Hessian,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loglik: f64,
    pub score: Option<DVector<f64>>,
    pub hessian: Option<DMatrix<f64>>,
}

/// Evaluation bundle for one `(ModelSpec, data)` pair.
///
/// Everything that does not depend on the coefficients is computed once:
/// the fixed design row `(z, M_1'B_1(w_1), ...)`, and the quadrature nodes of
/// `H`, split into whole knot spans shared by all records plus one partial
/// span per record. Records are held in a canonical order so results do not
/// depend on the order of the input.
#[derive(Debug, Clone)]
pub struct Design<'a> {
    spec: &'a ModelSpec,
    exec: Execution,
    delta: Vec<bool>,
    fixed: Vec<f64>,
    fixed_width: usize,
    full_spans_below: Vec<usize>,
    partial: Vec<NodeSet>,
    spans: Vec<NodeSet>,
}

struct SpanPrefix {
    value: Vec<f64>,
    grad: Vec<Vec<f64>>,
    hess: Vec<DMatrix<f64>>,
}

impl<'a> Design<'a> {
    pub fn new(spec: &'a ModelSpec, data: &[Observation]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::DegenerateData("no observations".into()));
        }
        let events = data.iter().filter(|o| o.delta).count();
        if events == 0 || events == data.len() {
            return Err(Error::DegenerateData(format!(
                "all {} records have delta = {}; the likelihood has no maximum",
                data.len(),
                u8::from(events > 0)
            )));
        }
        for obs in data {
            spec.check_observation(obs)?;
        }
        let mut sorted: Vec<&Observation> = data.iter().collect();
        sorted.sort_by(|a, b| a.canonical_cmp(b));

        let l = spec.n_linear;
        let fixed_width = l + spec.components.iter().map(|c| c.reduced_dim()).sum::<usize>();
        let breaks = spec.basis0.breakpoints();
        let spans: Vec<NodeSet> = breaks
            .windows(2)
            .map(|w| NodeSet::new(&spec.basis0, &spec.rule, w[0], w[1]))
            .collect();

        let n = sorted.len();
        let mut delta = Vec::with_capacity(n);
        let mut fixed = Vec::with_capacity(n * fixed_width);
        let mut full_spans_below = Vec::with_capacity(n);
        let mut partial = Vec::with_capacity(n);
        for obs in sorted {
            delta.push(obs.delta);
            fixed.extend_from_slice(&obs.z);
            for (c, &w) in spec.components.iter().zip(&obs.w) {
                fixed.extend(c.reduced_row(w)?);
            }
            let below = breaks[1..].partition_point(|&b| b <= obs.v);
            let start = breaks[below.min(breaks.len() - 1)];
            full_spans_below.push(below);
            partial.push(NodeSet::new(&spec.basis0, &spec.rule, start, obs.v));
        }
        Ok(Self {
            spec,
            exec: Execution::default(),
            delta,
            fixed,
            fixed_width,
            full_spans_below,
            partial,
            spans,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn spec(&self) -> &ModelSpec {
        self.spec
    }

    pub fn n(&self) -> usize {
        self.delta.len()
    }

    pub fn free_dim(&self) -> usize {
        self.spec.free_dim()
    }

    pub fn deltas(&self) -> &[bool] {
        &self.delta
    }

    fn prefix(&self, gamma0: &[f64], order: Order) -> SpanPrefix {
        let k0 = gamma0.len();
        let m = self.spans.len();
        let mut out = SpanPrefix {
            value: vec![0.0; m + 1],
            grad: vec![vec![0.0; k0]; m + 1],
            hess: Vec::new(),
        };
        let want_hess = order == Order::Hessian;
        if want_hess {
            out.hess = vec![DMatrix::zeros(k0, k0); m + 1];
        }
        for (s, nodes) in self.spans.iter().enumerate() {
            let mut v = out.value[s];
            let mut g = out.grad[s].clone();
            let mut h = if want_hess { Some(out.hess[s].clone()) } else { None };
            nodes.accumulate(gamma0, &mut v, &mut g, h.as_mut());
            out.value[s + 1] = v;
            out.grad[s + 1] = g;
            if let Some(h) = h {
                out.hess[s + 1] = h;
            }
        }
        out
    }

    /// Fills `dtheta` with the gradient of `theta_i` and, when requested,
    /// `hess_h` with `d2 H(v_i) / d gamma0^2`; returns `theta_i`.
    fn record(
        &self,
        i: usize,
        x: &[f64],
        prefix: &SpanPrefix,
        dtheta: &mut [f64],
        hess_h: Option<&mut DMatrix<f64>>,
    ) -> f64 {
        let l = self.spec.n_linear;
        let k0 = self.spec.basis0.num_basis();
        let row = &self.fixed[i * self.fixed_width..(i + 1) * self.fixed_width];
        let gamma0 = &x[l..l + k0];

        let below = self.full_spans_below[i];
        let mut h = prefix.value[below];
        let grad_h = &mut dtheta[l..l + k0];
        grad_h.copy_from_slice(&prefix.grad[below]);
        let mut hess_h = hess_h;
        if let Some(m) = hess_h.as_deref_mut() {
            m.copy_from(&prefix.hess[below]);
        }
        self.partial[i].accumulate(gamma0, &mut h, grad_h, hess_h);

        let mut theta = h;
        for (f, &r) in row.iter().enumerate() {
            let idx = if f < l { f } else { f + k0 };
            theta += r * x[idx];
            dtheta[idx] = r;
        }
        theta
    }

    /// Linear predictors `theta_i` in canonical record order.
    pub fn thetas(&self, x: &[f64]) -> Vec<f64> {
        let prefix = self.prefix(&x[self.gamma0_range()], Order::Gradient);
        let mut dtheta = vec![0.0; self.free_dim()];
        (0..self.n())
            .map(|i| self.record(i, x, &prefix, &mut dtheta, None))
            .collect()
    }

    fn gamma0_range(&self) -> std::ops::Range<usize> {
        let l = self.spec.n_linear;
        l..l + self.spec.basis0.num_basis()
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.free_dim() {
            return Err(Error::shape("parameter vector", self.free_dim(), x.len()));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64], order: Order) -> Result<Evaluation> {
        self.check_len(x)?;
        let p = self.free_dim();
        let l = self.spec.n_linear;
        let k0 = self.spec.basis0.num_basis();
        let link = self.spec.link;
        let prefix = self.prefix(&x[self.gamma0_range()], order);

        let chunk = |range: std::ops::Range<usize>| {
            let mut acc = Evaluation {
                loglik: 0.0,
                score: (order >= Order::Gradient).then(|| DVector::zeros(p)),
                hessian: (order == Order::Hessian).then(|| DMatrix::zeros(p, p)),
            };
            let mut dtheta = DVector::zeros(p);
            let mut hess_h = (order == Order::Hessian).then(|| DMatrix::zeros(k0, k0));
            for i in range {
                let theta = self.record(i, x, &prefix, dtheta.as_mut_slice(), hess_h.as_mut());
                let q = link.q_derivatives(self.delta[i], theta);
                acc.loglik += q.value;
                if let Some(g) = acc.score.as_mut() {
                    g.axpy(q.first, &dtheta, 1.0);
                }
                if let (Some(h), Some(hh)) = (acc.hessian.as_mut(), hess_h.as_ref()) {
                    h.ger(q.second, &dtheta, &dtheta, 1.0);
                    let mut block = h.view_mut((l, l), (k0, k0));
                    block.zip_apply(hh, |a, b| *a += q.first * b);
                }
            }
            acc
        };
        let merge = |mut a: Evaluation, b: Evaluation| {
            a.loglik += b.loglik;
            if let (Some(x), Some(y)) = (a.score.as_mut(), b.score) {
                *x += y;
            }
            if let (Some(x), Some(y)) = (a.hessian.as_mut(), b.hessian) {
                *x += y;
            }
            a
        };
        Ok(chunked_reduce(self.n(), self.exec, chunk, merge).expect("design is non-empty"))
    }

    pub fn loglik(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(x, Order::Value)?.loglik)
    }

    pub fn score(&self, x: &[f64]) -> Result<DVector<f64>> {
        Ok(self.evaluate(x, Order::Gradient)?.score.expect("gradient requested"))
    }

    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.evaluate(x, Order::Hessian)?.hessian.expect("hessian requested"))
    }

    /// Per-record score vectors `Q(theta_i) d theta_i`, one row per record.
    pub fn score_rows(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(x)?;
        let p = self.free_dim();
        let prefix = self.prefix(&x[self.gamma0_range()], Order::Gradient);
        let mut rows = DMatrix::zeros(self.n(), p);
        let mut dtheta = vec![0.0; p];
        for i in 0..self.n() {
            let theta = self.record(i, x, &prefix, &mut dtheta, None);
            let q = self.spec.link.q_theta(self.delta[i], theta);
            for (c, d) in dtheta.iter().enumerate() {
                rows[(i, c)] = q * d;
            }
        }
        Ok(rows)
    }

    /// `(1/n) sum_i A_i A_i'` for the per-record scores `A_i`.
    pub fn outer_product_information(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(x)?;
        let p = self.free_dim();
        let prefix = self.prefix(&x[self.gamma0_range()], Order::Gradient);
        let link = self.spec.link;
        let chunk = |range: std::ops::Range<usize>| {
            let mut acc = DMatrix::zeros(p, p);
            let mut dtheta = DVector::zeros(p);
            for i in range {
                let theta = self.record(i, x, &prefix, dtheta.as_mut_slice(), None);
                let q = link.q_theta(self.delta[i], theta);
                acc.ger(q * q, &dtheta, &dtheta, 1.0);
            }
            acc
        };
        let total = chunked_reduce(self.n(), self.exec, chunk, |a, b| a + b)
            .expect("design is non-empty");
        Ok(total / self.n() as f64)
    }
}

pub fn theta(spec: &ModelSpec, params: &ParameterVector, obs: &Observation) -> Result<f64> {
    spec.theta(params, obs)
}

pub fn loglik(spec: &ModelSpec, params: &ParameterVector, data: &[Observation]) -> Result<f64> {
    spec.check_params(params)?;
    Design::new(spec, data)?.loglik(&params.flatten())
}

pub fn score(
    spec: &ModelSpec,
    params: &ParameterVector,
    data: &[Observation],
) -> Result<DVector<f64>> {
    spec.check_params(params)?;
    Design::new(spec, data)?.score(&params.flatten())
}

pub fn hessian(
    spec: &ModelSpec,
    params: &ParameterVector,
    data: &[Observation],
) -> Result<DMatrix<f64>> {
    spec.check_params(params)?;
    Design::new(spec, data)?.hessian(&params.flatten())
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    eigen_extremes(m).0
}

/// Largest eigenvalue and largest absolute eigenvalue of the symmetric part.
pub fn eigen_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    (
        eig.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        eig.iter().fold(0.0, |a: f64, x| a.max(x.abs())),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn spec_with(link: LinkFamily, l: usize) -> ModelSpec {
        let b0 = SplineBasis::uniform(2, 4, (0.0, 2.0)).unwrap();
        let b1 = SplineBasis::uniform(2, 4, (0.0, 1.0)).unwrap();
        ModelSpec::new(link, l, b0, vec![b1], 7).unwrap()
    }

    #[test]
    fn zero_coefficients_leave_only_the_identity_transformation() {
        let spec = spec_with(LinkFamily::Logistic, 2);
        let obs = Observation::new(1.3, true, &[0.0], vec![0.4]);
        let t = spec.theta(&spec.zeros(), &obs).unwrap();
        assert_abs_diff_eq!(t, 1.3, epsilon = 1e-14);
    }

    #[test]
    fn intercept_only_at_lower_bound() {
        let spec = spec_with(LinkFamily::Logistic, 2);
        let mut p = spec.zeros();
        p.beta = vec![2.0, 0.0];
        let obs = Observation::new(0.0, true, &[5.0], vec![0.9]);
        assert_eq!(spec.theta(&p, &obs).unwrap(), 2.0);
    }

    #[test]
    fn out_of_domain_names_the_coordinate() {
        let spec = spec_with(LinkFamily::Logistic, 2);
        let obs = Observation::new(1.0, true, &[0.0], vec![1.5]);
        match spec.theta(&spec.zeros(), &obs) {
            Err(Error::Domain { what, .. }) => assert_eq!(what, "w[0]"),
            other => panic!("expected a domain error, got {other:?}"),
        }
        let obs = Observation::new(2.5, true, &[0.0], vec![0.5]);
        match spec.theta(&spec.zeros(), &obs) {
            Err(Error::Domain { what, .. }) => assert_eq!(what, "v"),
            other => panic!("expected a domain error, got {other:?}"),
        }
    }

    fn intercept_only() -> ModelSpec {
        // l = 1, K0 = 1 (degree 0): H(v) = exp(gamma0) (v - lo)
        let b0 = SplineBasis::new(0, &[], (0.0, 1.0)).unwrap();
        ModelSpec::new(LinkFamily::Logistic, 1, b0, vec![], 3).unwrap()
    }

    #[test]
    fn single_record_loglik_is_log_half() {
        let spec = intercept_only();
        let data = vec![
            Observation::new(0.0, true, &[], vec![]),
            Observation::new(0.0, false, &[], vec![]),
        ];
        let mut p = spec.zeros();
        p.gamma0 = vec![0.0];
        assert_abs_diff_eq!(loglik(&spec, &p, &data).unwrap(), 2.0 * 0.5f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn intercept_score_and_curvature_at_zero() {
        let spec = intercept_only();
        let data = vec![
            Observation::new(0.0, true, &[], vec![]),
            Observation::new(1.0, false, &[], vec![]),
        ];
        let design = Design::new(&spec, &data).unwrap();
        // record at v = 0 has theta = 0; the other has theta = 1
        let g = design.score(&[0.0, 0.0]).unwrap();
        let s1 = 1.0 / (1.0 + (-1.0f64).exp());
        assert_abs_diff_eq!(g[0], 0.5 - s1, epsilon = 1e-15);
        let h = design.hessian(&[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(h[(0, 0)], -0.25 - s1 * (1.0 - s1), epsilon = 1e-15);
    }

    #[test]
    fn degenerate_data_is_rejected() {
        let spec = intercept_only();
        let data = vec![
            Observation::new(0.2, true, &[], vec![]),
            Observation::new(0.7, true, &[], vec![]),
        ];
        assert!(matches!(
            Design::new(&spec, &data),
            Err(Error::DegenerateData(_))
        ));
        assert!(matches!(Design::new(&spec, &[]), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn design_thetas_match_direct_evaluation() {
        let spec = spec_with(LinkFamily::ExtremeValue, 2);
        let params = ParameterVector {
            beta: vec![0.3, -0.7],
            gamma0: vec![0.4, -0.2, 0.9, 0.1],
            reduced_gammas: vec![vec![0.5, -1.0, 0.25]],
        };
        let data: Vec<Observation> = (0..40)
            .map(|i| {
                let u = i as f64 / 39.0;
                Observation::new(2.0 * u, i % 3 == 0, &[u * u - 0.5], vec![(u * 7.0).fract()])
            })
            .collect();
        let design = Design::new(&spec, &data).unwrap();
        let thetas = design.thetas(&params.flatten());
        let mut sorted = data.clone();
        sorted.sort_by(|a, b| a.canonical_cmp(b));
        for (obs, t) in sorted.iter().zip(&thetas) {
            assert_relative_eq!(spec.theta(&params, obs).unwrap(), *t, max_relative = 1e-13);
        }
    }

    #[test]
    fn flatten_round_trip() {
        let spec = spec_with(LinkFamily::Logistic, 3);
        let flat: Vec<f64> = (0..spec.free_dim()).map(|i| i as f64).collect();
        assert_eq!(spec.unflatten(&flat).unwrap().flatten(), flat);
        assert!(spec.unflatten(&flat[1..]).is_err());
    }
}
