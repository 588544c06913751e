//! Residual-error distributions `F` for the transformation model.
//!
//! Everything the likelihood needs is expressed through the ratios
//! `f/F`, `f/(1-F)` and `f'/f`, each evaluated in a form that stays finite
//! for `|s|` up to several hundred.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, Normal};
use libm::erfc;

use crate::error::{Error, Result};

/// Below this shape the Pareto family is evaluated as its extreme-value limit.
pub const PARETO_LIMIT_SHAPE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkFamily {
    /// `F(s) = 1 - exp(-e^s)`: proportional hazards.
    ExtremeValue,
    /// `F(s) = e^s / (1 + e^s)`: proportional odds.
    Logistic,
    /// `F(s) = 1 - (1 + gamma e^s)^(-1/gamma)`: odds-rate family.
    Pareto(f64),
    /// Standard normal `F`.
    Probit,
}

/// `q(delta, s) = delta log F(s) + (1 - delta) log(1 - F(s))` and its first
/// two derivatives in `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QDerivatives {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// Stable pieces shared by all evaluations at one point.
#[derive(Debug, Clone, Copy)]
struct Terms {
    log_cdf: f64,
    log_sf: f64,
    /// `f / F`
    hazard_lower: f64,
    /// `f / (1 - F)`
    hazard_upper: f64,
    /// `f' / f`
    score: f64,
}

impl LinkFamily {
    pub fn pareto(shape: f64) -> Result<Self> {
        if shape.is_nan() || shape <= 0.0 {
            return Err(Error::InvalidShape {
                family: "pareto".into(),
                value: shape,
            });
        }
        Ok(LinkFamily::Pareto(shape))
    }

    /// Effective family after the small-shape Pareto dispatch.
    fn resolved(self) -> Self {
        match self {
            LinkFamily::Pareto(g) if g < PARETO_LIMIT_SHAPE => LinkFamily::ExtremeValue,
            other => other,
        }
    }

    fn terms(self, s: f64) -> Terms {
        match self.resolved() {
            LinkFamily::ExtremeValue => {
                let x = s.exp();
                let log_cdf = if x < 1e-10 { s - 0.5 * x } else { (-(-x).exp_m1()).ln() };
                let hazard_lower = if x < 1e-300 {
                    1.0
                } else if x > 700.0 {
                    0.0
                } else {
                    x / x.exp_m1()
                };
                Terms {
                    log_cdf,
                    log_sf: -x,
                    hazard_lower,
                    hazard_upper: x,
                    score: 1.0 - x,
                }
            }
            LinkFamily::Logistic => Terms {
                log_cdf: -softplus(-s),
                log_sf: -softplus(s),
                hazard_lower: sigmoid(-s),
                hazard_upper: sigmoid(s),
                score: (-0.5 * s).tanh(),
            },
            LinkFamily::Pareto(g) => {
                let y = s + g.ln();
                let sp = softplus(y);
                let cum = sp / g;
                let log_cdf = if cum < 1e-10 {
                    log_softplus(y) - g.ln() - 0.5 * cum
                } else {
                    (-(-cum).exp_m1()).ln()
                };
                let log_pdf = s - (1.0 / g + 1.0) * sp;
                Terms {
                    log_cdf,
                    log_sf: -cum,
                    hazard_lower: (log_pdf - log_cdf).exp(),
                    hazard_upper: (s - sp).exp(),
                    score: 1.0 - (1.0 / g + 1.0) * sigmoid(y),
                }
            }
            LinkFamily::Probit => {
                let (log_cdf, log_sf) = (log_ndtr(s), log_ndtr(-s));
                Terms {
                    log_cdf,
                    log_sf,
                    hazard_lower: normal_hazard(-s),
                    hazard_upper: normal_hazard(s),
                    score: -s,
                }
            }
        }
    }

    pub fn cdf(self, s: f64) -> f64 {
        match self.resolved() {
            LinkFamily::ExtremeValue => -(-s.exp()).exp_m1(),
            LinkFamily::Logistic => sigmoid(s),
            LinkFamily::Pareto(g) => -(-softplus(s + g.ln()) / g).exp_m1(),
            LinkFamily::Probit => 0.5 * erfc(-s * FRAC_1_SQRT_2),
        }
    }

    /// `(log F(s), log(1 - F(s)))`.
    pub fn log_cdf_pair(self, s: f64) -> (f64, f64) {
        let t = self.terms(s);
        (t.log_cdf, t.log_sf)
    }

    pub fn pdf(self, s: f64) -> f64 {
        self.pdf_and_dpdf(s).0
    }

    /// `(f(s), f'(s))`.
    pub fn pdf_and_dpdf(self, s: f64) -> (f64, f64) {
        let f = match self.resolved() {
            LinkFamily::ExtremeValue => (s - s.exp()).exp(),
            LinkFamily::Logistic => sigmoid(s) * sigmoid(-s),
            LinkFamily::Pareto(g) => (s - (1.0 / g + 1.0) * softplus(s + g.ln())).exp(),
            LinkFamily::Probit => (-0.5 * s * s).exp() / (2.0 * PI).sqrt(),
        };
        (f, f * self.terms(s).score)
    }

    /// `Q(s) = f(s) (delta / F(s) - (1 - delta) / (1 - F(s)))`.
    pub fn q_theta(self, delta: bool, s: f64) -> f64 {
        self.q_derivatives(delta, s).first
    }

    pub fn q_derivatives(self, delta: bool, s: f64) -> QDerivatives {
        let t = self.terms(s);
        let out = if let LinkFamily::Logistic = self.resolved() {
            let curvature = -sigmoid(s) * sigmoid(-s);
            if delta {
                QDerivatives {
                    value: t.log_cdf,
                    first: t.hazard_lower,
                    second: curvature,
                }
            } else {
                QDerivatives {
                    value: t.log_sf,
                    first: -t.hazard_upper,
                    second: curvature,
                }
            }
        } else if delta {
            // (f'F - f^2) / F^2
            let gap = -self.concavity_margins(s).0;
            QDerivatives {
                value: t.log_cdf,
                first: t.hazard_lower,
                // the gap may be infinite once the hazard has underflowed
                second: if t.hazard_lower == 0.0 { 0.0 } else { t.hazard_lower * gap },
            }
        } else {
            // -(f'(1-F) + f^2) / (1-F)^2
            let gap = self.concavity_margins(s).1;
            QDerivatives {
                value: t.log_sf,
                first: -t.hazard_upper,
                second: -t.hazard_upper * gap,
            }
        };
        debug_assert!(
            out.second <= 1e-12,
            "log-concavity violated for {self} at s = {s}"
        );
        out
    }

    /// `(f^2 - f'F) / (fF)` and `(f^2 + f'(1-F)) / (f(1-F))`. Same signs as
    /// the unscaled margins, which underflow in the tails. Both are positive
    /// for every family.
    pub fn concavity_margins(self, s: f64) -> (f64, f64) {
        match self.resolved() {
            // score + hazard is exactly one; the sum overflows far out
            LinkFamily::ExtremeValue => (-ev_score_gap(s), 1.0),
            LinkFamily::Logistic => (sigmoid(s), sigmoid(-s)),
            LinkFamily::Pareto(g) => (pareto_lower_margin(s, g), sigmoid(-(s + g.ln()))),
            LinkFamily::Probit => {
                let t = self.terms(s);
                (t.hazard_lower - t.score, t.hazard_upper + t.score)
            }
        }
    }

    /// `F^{-1}(p)` for `0 < p < 1`.
    pub fn quantile(self, p: f64) -> f64 {
        match self.resolved() {
            LinkFamily::ExtremeValue => (-(-p).ln_1p()).ln(),
            LinkFamily::Logistic => (p / (1.0 - p)).ln(),
            LinkFamily::Pareto(g) => ((-g * (-p).ln_1p()).exp_m1() / g).ln(),
            LinkFamily::Probit => Normal::standard().inverse_cdf(p),
        }
    }
}

impl fmt::Display for LinkFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkFamily::ExtremeValue => write!(f, "extreme_value"),
            LinkFamily::Logistic => write!(f, "logistic"),
            LinkFamily::Pareto(g) => write!(f, "pareto:{g}"),
            LinkFamily::Probit => write!(f, "probit"),
        }
    }
}

impl FromStr for LinkFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "extreme_value" => Ok(LinkFamily::ExtremeValue),
            "logistic" => Ok(LinkFamily::Logistic),
            "probit" => Ok(LinkFamily::Probit),
            _ => match s.strip_prefix("pareto:") {
                Some(shape) => {
                    let g: f64 = shape
                        .trim()
                        .parse()
                        .map_err(|_| Error::UnknownLink(s.to_string()))?;
                    LinkFamily::pareto(g)
                }
                None => Err(Error::UnknownLink(s.to_string())),
            },
        }
    }
}

impl Serialize for LinkFamily {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LinkFamily {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `log(log(1 + e^x))` without underflow for very negative `x`.
fn log_softplus(x: f64) -> f64 {
    if x < -30.0 {
        x - 0.5 * x.exp()
    } else {
        softplus(x).ln()
    }
}

/// `f'/f - f/F` for the extreme-value law: `1 - x - x / expm1(x)`, `x = e^s`.
/// `f/F - score` for the Pareto family. With `u = g e^s` this is
/// `(sigma/g) / expm1(L) - 1 + (1 + 1/g) sigma`, `L = log1p(u)/g`, which
/// cancels for small `u`; there a third-order series in `u` is used.
fn pareto_lower_margin(s: f64, g: f64) -> f64 {
    let u = g * s.exp();
    if u < 1e-4 {
        u * (g + 1.0) * (12.0 * g + (2.0 - 14.0 * g) * u + (15.0 * g - 3.0) * u * u) / (24.0 * g * g)
    } else {
        let sigma = sigmoid(s + g.ln());
        let cum = u.ln_1p() / g;
        sigma / g / cum.exp_m1() - 1.0 + (1.0 + 1.0 / g) * sigma
    }
}

fn ev_score_gap(s: f64) -> f64 {
    let x = s.exp();
    if x < 1e-4 {
        -0.5 * x - x * x / 12.0
    } else if x > 700.0 {
        1.0 - x
    } else {
        1.0 - x - x / x.exp_m1()
    }
}

/// Mills ratio `Phi(-x) / phi(x)` for `x >= 5` by the Laplace continued
/// fraction `1 / (x + 1 / (x + 2 / (x + ...)))`, evaluated backwards.
fn mills_ratio_tail(x: f64) -> f64 {
    let mut t = x;
    for k in (1..=300).rev() {
        t = x + k as f64 / t;
    }
    1.0 / t
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `log Phi(s)`.
fn log_ndtr(s: f64) -> f64 {
    if s > 5.0 {
        let upper = (-0.5 * s * s - LN_SQRT_2PI).exp() * mills_ratio_tail(s);
        (-upper).ln_1p()
    } else if s >= -5.0 {
        (erfc(-s * FRAC_1_SQRT_2)).ln() - LN_2
    } else {
        -0.5 * s * s - LN_SQRT_2PI + mills_ratio_tail(-s).ln()
    }
}

/// `phi(x) / Phi(-x)`.
fn normal_hazard(x: f64) -> f64 {
    if x >= 5.0 {
        1.0 / mills_ratio_tail(x)
    } else {
        let pdf = (-0.5 * x * x - LN_SQRT_2PI).exp();
        pdf / (0.5 * erfc(x * FRAC_1_SQRT_2))
    }
}
