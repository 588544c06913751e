use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::likelihood::Observation;
use crate::link::LinkFamily;

/// Partly linear additive Cox model observed under current status:
/// `P(delta = 1 | z, w, v) = F(H0(v) + beta'z + h0(w))` with extreme-value
/// `F`, `H0(v) = log A(e^v)`, `A(u) = e^k0 (e^(u/3) - 1)` and
/// `h0(w) = sin(w/1.2 - 1) - k0`. `v` is drawn on `[0.2, 1.8]` and enters
/// `H0` directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    pub beta: [f64; 2],
    pub k0: f64,
    pub z1_range: (f64, f64),
    pub z2_success: f64,
    pub w_range: (f64, f64),
    pub v_range: (f64, f64),
    pub link: LinkFamily,
}

impl Default for SimulationTruth {
    fn default() -> Self {
        Self {
            beta: [0.3, 0.25],
            k0: 0.06516,
            z1_range: (0.5, 1.5),
            z2_success: 0.5,
            w_range: (1.0, 10.0),
            v_range: (0.2, 1.8),
            link: LinkFamily::ExtremeValue,
        }
    }
}

impl SimulationTruth {
    /// `A(u) = e^k0 (e^(u/3) - 1)`.
    pub fn a(&self, u: f64) -> f64 {
        self.k0.exp() * (u / 3.0).exp_m1()
    }

    /// `H0(v) = log A(e^v)`.
    pub fn transformation(&self, v: f64) -> f64 {
        self.a(v.exp()).ln()
    }

    /// `h0(w) = sin(w/1.2 - 1) - k0`.
    pub fn component(&self, w: f64) -> f64 {
        (w / 1.2 - 1.0).sin() - self.k0
    }

    /// Mean of `h0` over `[a, b]`, in closed form.
    pub fn component_mean(&self, a: f64, b: f64) -> f64 {
        let antiderivative = |w: f64| -1.2 * (w / 1.2 - 1.0).cos();
        (antiderivative(b) - antiderivative(a)) / (b - a) - self.k0
    }

    pub fn theta(&self, z: [f64; 2], w: f64, v: f64) -> f64 {
        self.transformation(v) + self.beta[0] * z[0] + self.beta[1] * z[1] + self.component(w)
    }

    /// CDF of the standard exponential truncated to `v_range`.
    pub fn v_cdf(&self, v: f64) -> f64 {
        let (a, b) = self.v_range;
        let x = v.clamp(a, b);
        ((-a).exp() - (-x).exp()) / ((-a).exp() - (-b).exp())
    }

    /// Inverse of [`v_cdf`](Self::v_cdf).
    pub fn v_quantile(&self, u: f64) -> f64 {
        let (a, b) = self.v_range;
        (a - (u * (a - b).exp_m1()).ln_1p()).clamp(a, b)
    }
}

/// `n` records drawn with a ChaCha8 stream seeded by `seed`. Each record
/// consumes, in order: `z1`, `z2`, `w`, `v`, and the uniform deciding
/// `delta`.
pub fn generate_dataset(truth: &SimulationTruth, n: usize, seed: u64) -> Vec<Observation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (z_lo, z_hi) = truth.z1_range;
    let (w_lo, w_hi) = truth.w_range;
    (0..n)
        .map(|_| {
            let z1 = z_lo + (z_hi - z_lo) * rng.random::<f64>();
            let z2 = if rng.random::<f64>() < truth.z2_success { 1.0 } else { 0.0 };
            let w = w_lo + (w_hi - w_lo) * rng.random::<f64>();
            let v = truth.v_quantile(rng.random::<f64>());
            let p = truth.link.cdf(truth.theta([z1, z2], w, v));
            let delta = rng.random::<f64>() < p;
            Observation::new(v, delta, &[z1, z2], vec![w])
        })
        .collect()
}
