use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clamped B-spline basis on a closed interval.
///
/// The knot vector repeats each boundary `degree + 1` times, so the basis
/// interpolates at the ends and sums to one everywhere on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis {
    degree: usize,
    knots: Vec<f64>,
    domain: (f64, f64),
}

/// Where interior knots go when only a basis size is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnotPlacement {
    #[default]
    Uniform,
    Quantile,
}

impl SplineBasis {
    pub fn new(degree: usize, interior_knots: &[f64], domain: (f64, f64)) -> Result<Self> {
        let (lo, hi) = domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidKnots(format!(
                "domain [{lo}, {hi}] must be a finite interval with lo < hi"
            )));
        }
        if interior_knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidKnots("interior knots must be finite".into()));
        }
        if interior_knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidKnots(format!(
                "interior knots must be strictly increasing, got {interior_knots:?}"
            )));
        }
        if let Some(&bad) = interior_knots.iter().find(|&&k| k <= lo || k >= hi) {
            return Err(Error::domain("interior knot", bad, lo, hi));
        }
        let mut knots = Vec::with_capacity(interior_knots.len() + 2 * (degree + 1));
        knots.extend(std::iter::repeat_n(lo, degree + 1));
        knots.extend_from_slice(interior_knots);
        knots.extend(std::iter::repeat_n(hi, degree + 1));
        Ok(Self {
            degree,
            knots,
            domain,
        })
    }

    /// Basis with `num_basis` functions and equally spaced interior knots.
    pub fn uniform(degree: usize, num_basis: usize, domain: (f64, f64)) -> Result<Self> {
        let n_interior = interior_count(degree, num_basis)?;
        let (lo, hi) = domain;
        let step = (hi - lo) / (n_interior + 1) as f64;
        let interior: Vec<f64> = (1..=n_interior).map(|i| lo + step * i as f64).collect();
        Self::new(degree, &interior, domain)
    }

    /// Basis with interior knots at empirical quantiles of `values`; the
    /// domain is the observed range.
    pub fn quantile(degree: usize, num_basis: usize, values: &[f64]) -> Result<Self> {
        let n_interior = interior_count(degree, num_basis)?;
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = match (sorted.first(), sorted.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Err(Error::InvalidKnots("no values for quantile knots".into())),
        };
        let mut interior: Vec<f64> = (1..=n_interior)
            .map(|i| empirical_quantile(&sorted, i as f64 / (n_interior + 1) as f64))
            .collect();
        interior.dedup();
        if interior.len() != n_interior {
            return Err(Error::InvalidKnots(
                "quantile knots coincide; too few distinct values".into(),
            ));
        }
        Self::new(degree, &interior, (lo, hi))
    }

    pub fn with_placement(
        placement: KnotPlacement,
        degree: usize,
        num_basis: usize,
        values: &[f64],
    ) -> Result<Self> {
        match placement {
            KnotPlacement::Uniform => {
                let (lo, hi) = values
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                        (lo.min(x), hi.max(x))
                    });
                Self::uniform(degree, num_basis, (lo, hi))
            }
            KnotPlacement::Quantile => Self::quantile(degree, num_basis, values),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn interior_knots(&self) -> &[f64] {
        &self.knots[self.degree + 1..self.knots.len() - self.degree - 1]
    }

    /// Distinct knot values `lo = b_0 < b_1 < ... < b_m = hi`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.interior_knots().len() + 2);
        out.push(self.domain.0);
        out.extend_from_slice(self.interior_knots());
        out.push(self.domain.1);
        out
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.domain.0 && t <= self.domain.1
    }

    pub(crate) fn check(&self, what: &str, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::domain(what, t, self.domain.0, self.domain.1))
        }
    }

    /// Index `mu` of the knot span with `knots[mu] <= t < knots[mu + 1]`;
    /// the right endpoint belongs to the last non-empty span.
    fn span(&self, t: f64) -> usize {
        let p = self.degree;
        let last = self.num_basis() - 1;
        if t >= self.knots[last + 1] {
            return last;
        }
        // upper_bound over [p, last]
        let slice = &self.knots[p..=last + 1];
        let pos = slice.partition_point(|&k| k <= t);
        p + pos - 1
    }

    /// Writes the `degree + 1` possibly non-zero basis values at `t` into
    /// `out` and returns the index of the first one. `t` must be in range.
    pub fn eval_nonzero(&self, t: f64, out: &mut [f64]) -> usize {
        let p = self.degree;
        debug_assert_eq!(out.len(), p + 1);
        let mu = self.span(t);
        let k = &self.knots;
        out[0] = 1.0;
        let mut left = [0.0f64; 16];
        let mut right = [0.0f64; 16];
        assert!(p < 16, "degree above 15 is not supported");
        for j in 1..=p {
            left[j] = t - k[mu + 1 - j];
            right[j] = k[mu + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
        mu - p
    }

    /// Full basis vector `(B_1(t), ..., B_K(t))`.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        self.check("t", t)?;
        let mut local = vec![0.0; self.degree + 1];
        let first = self.eval_nonzero(t, &mut local);
        let mut full = vec![0.0; self.num_basis()];
        full[first..first + local.len()].copy_from_slice(&local);
        Ok(full)
    }

    /// `c_k = integral of B_k over the domain = (t_{k+p+1} - t_k) / (p + 1)`.
    pub fn integrals(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis())
            .map(|k| (self.knots[k + p + 1] - self.knots[k]) / (p + 1) as f64)
            .collect()
    }
}

fn interior_count(degree: usize, num_basis: usize) -> Result<usize> {
    num_basis.checked_sub(degree + 1).ok_or_else(|| {
        Error::InvalidKnots(format!(
            "a degree-{degree} basis needs at least {} functions, got {num_basis}",
            degree + 1
        ))
    })
}

/// Linear-interpolation quantile of sorted data (type 7).
fn empirical_quantile(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn degree_zero_without_interior_knots_is_an_indicator() {
        let b = SplineBasis::new(0, &[], (0.0, 1.0)).unwrap();
        assert_eq!(b.num_basis(), 1);
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(b.eval(t).unwrap(), vec![1.0]);
        }
        assert!(b.eval(1.5).is_err());
    }

    #[test]
    fn quadratic_with_three_interior_knots_has_six_functions() {
        let b = SplineBasis::new(2, &[0.25, 0.5, 0.75], (0.0, 1.0)).unwrap();
        assert_eq!(b.num_basis(), 6);
        assert_eq!(b.knots().len(), 9);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(matches!(
            SplineBasis::new(2, &[0.5, 0.25], (0.0, 1.0)),
            Err(Error::InvalidKnots(_))
        ));
        assert!(matches!(
            SplineBasis::new(2, &[0.0, 0.5], (0.0, 1.0)),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            SplineBasis::new(2, &[0.5, 1.2], (0.0, 1.0)),
            Err(Error::Domain { .. })
        ));
        assert!(SplineBasis::uniform(2, 2, (0.0, 1.0)).is_err());
    }

    #[test]
    fn hat_function_peaks_at_its_knot() {
        let b = SplineBasis::new(1, &[0.5], (0.0, 1.0)).unwrap();
        assert_eq!(b.eval(0.5).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(b.eval(1.0).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(b.eval(0.0).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn integrals_match_quadrature() {
        let b = SplineBasis::new(2, &[0.2, 0.45, 0.8], (0.0, 1.0)).unwrap();
        let c = b.integrals();
        let m = 20_000;
        let mut acc = vec![0.0; b.num_basis()];
        for i in 0..m {
            let t = (i as f64 + 0.5) / m as f64;
            for (a, v) in acc.iter_mut().zip(b.eval(t).unwrap()) {
                *a += v / m as f64;
            }
        }
        for (a, e) in acc.iter().zip(&c) {
            assert_abs_diff_eq!(a, e, epsilon = 1e-8);
        }
        assert_abs_diff_eq!(c.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn quantile_knots_follow_the_data() {
        let values: Vec<f64> = (0..101).map(|i| (i as f64 / 100.0).powi(2)).collect();
        let b = SplineBasis::quantile(2, 4, &values).unwrap();
        assert_eq!(b.domain(), (0.0, 1.0));
        assert_abs_diff_eq!(b.interior_knots()[0], 0.25, epsilon = 1e-12);
    }
}
