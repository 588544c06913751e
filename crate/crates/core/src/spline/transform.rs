use nalgebra::DMatrix;

use super::{GaussLegendre, SplineBasis};
use crate::error::{Error, Result};

/// Quadrature nodes over a piece of the transformation domain together with
/// the non-zero basis values at each node. The values do not depend on the
/// coefficients, so a node set is built once and reused at every iterate.
#[derive(Debug, Clone, Default)]
pub struct NodeSet {
    width: usize,
    first: Vec<usize>,
    weight: Vec<f64>,
    local: Vec<f64>,
}

impl NodeSet {
    /// Gauss-Legendre nodes on every knot span intersected with `[a, b]`.
    pub fn new(basis: &SplineBasis, rule: &GaussLegendre, a: f64, b: f64) -> Self {
        let width = basis.degree() + 1;
        let mut set = NodeSet {
            width,
            ..Default::default()
        };
        if b <= a {
            return set;
        }
        let mut buf = vec![0.0; width];
        for w in basis.breakpoints().windows(2) {
            let lo = w[0].max(a);
            let hi = w[1].min(b);
            if hi <= lo {
                continue;
            }
            for (x, wt) in rule.mapped(lo, hi) {
                let first = basis.eval_nonzero(x, &mut buf);
                set.first.push(first);
                set.weight.push(wt);
                set.local.extend_from_slice(&buf);
            }
        }
        set
    }

    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    fn local(&self, i: usize) -> &[f64] {
        &self.local[i * self.width..(i + 1) * self.width]
    }

    /// Integral of `exp(gamma' B)`.
    pub fn value(&self, gamma: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.len() {
            let (first, b) = (self.first[i], self.local(i));
            let g: f64 = b.iter().zip(&gamma[first..]).map(|(b, c)| b * c).sum();
            total += self.weight[i] * g.exp();
        }
        total
    }

    /// Adds the integrals of `exp(g)`, `B exp(g)` and optionally
    /// `B B' exp(g)` into the accumulators.
    pub fn accumulate(
        &self,
        gamma: &[f64],
        value: &mut f64,
        grad: &mut [f64],
        mut hess: Option<&mut DMatrix<f64>>,
    ) {
        for i in 0..self.len() {
            let (first, b) = (self.first[i], self.local(i));
            let g: f64 = b.iter().zip(&gamma[first..]).map(|(b, c)| b * c).sum();
            let we = self.weight[i] * g.exp();
            *value += we;
            for (r, &br) in b.iter().enumerate() {
                grad[first + r] += we * br;
            }
            if let Some(h) = hess.as_deref_mut() {
                for (r, &br) in b.iter().enumerate() {
                    for (c, &bc) in b.iter().enumerate() {
                        h[(first + r, first + c)] += we * br * bc;
                    }
                }
            }
        }
    }
}

/// Monotone transformation `H(v) = integral from lo to v of exp(gamma0' B0(s)) ds`.
#[derive(Debug, Clone)]
pub struct TransformationSpec {
    basis: SplineBasis,
    gamma0: Vec<f64>,
    rule: GaussLegendre,
}

impl TransformationSpec {
    pub fn new(basis: SplineBasis, gamma0: Vec<f64>, quadrature_order: usize) -> Result<Self> {
        if gamma0.len() != basis.num_basis() {
            return Err(Error::shape("gamma0", basis.num_basis(), gamma0.len()));
        }
        if quadrature_order == 0 {
            return Err(Error::Config("quadrature order must be positive".into()));
        }
        Ok(Self {
            basis,
            gamma0,
            rule: GaussLegendre::new(quadrature_order),
        })
    }

    pub fn basis(&self) -> &SplineBasis {
        &self.basis
    }

    pub fn gamma0(&self) -> &[f64] {
        &self.gamma0
    }

    pub fn quadrature_order(&self) -> usize {
        self.rule.order()
    }

    /// `g(v) = gamma0' B0(v) = log H'(v)`.
    pub fn log_derivative(&self, v: f64) -> Result<f64> {
        let b = self.basis.eval(v)?;
        Ok(b.iter().zip(&self.gamma0).map(|(b, g)| b * g).sum())
    }

    fn nodes_to(&self, v: f64) -> Result<NodeSet> {
        self.basis.check("v", v)?;
        Ok(NodeSet::new(&self.basis, &self.rule, self.basis.domain().0, v))
    }

    pub fn integrate_exp_spline(&self, v: f64) -> Result<f64> {
        Ok(self.nodes_to(v)?.value(&self.gamma0))
    }

    /// `dH(v)/dgamma0_k = integral of B0k exp(g)`.
    pub fn grad_h(&self, v: f64) -> Result<Vec<f64>> {
        let nodes = self.nodes_to(v)?;
        let mut value = 0.0;
        let mut grad = vec![0.0; self.gamma0.len()];
        nodes.accumulate(&self.gamma0, &mut value, &mut grad, None);
        Ok(grad)
    }

    /// `d2H(v)/dgamma0 dgamma0' = integral of B0 B0' exp(g)`.
    pub fn hess_h(&self, v: f64) -> Result<DMatrix<f64>> {
        let nodes = self.nodes_to(v)?;
        let k = self.gamma0.len();
        let mut value = 0.0;
        let mut grad = vec![0.0; k];
        let mut hess = DMatrix::zeros(k, k);
        nodes.accumulate(&self.gamma0, &mut value, &mut grad, Some(&mut hess));
        Ok(hess)
    }
}
