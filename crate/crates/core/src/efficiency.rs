//! Efficiency functions (SINR to block success rate) and the two SINR targets
//! derived from them: the individually optimal SINR `β*` and the
//! equal-received-power operating SINR `γ̃_K`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower end of the root bracket.
const BRACKET_LO: f64 = 1e-12;
const MAX_ITERATIONS: usize = 400;

/// A sigmoidal efficiency function `f`.
///
/// Only the exponential form `f(x) = exp(-a/x)` is provided; other sigmoidal
/// forms slot in as extra variants as long as they supply `f`, `f'` and `f''`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EfficiencyFunction {
    Exponential { a: f64 },
}

impl EfficiencyFunction {
    pub fn exponential(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Domain(format!("efficiency parameter a must be positive, got {a}")));
        }
        Ok(EfficiencyFunction::Exponential { a })
    }

    /// Exponential efficiency with `a = 2^R - 1` for a spectral efficiency of `R` bit/s/Hz.
    pub fn from_rate(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::Domain(format!("rate must be positive, got {rate}")));
        }
        Self::exponential(rate.exp2() - 1.0)
    }

    pub fn a(&self) -> f64 {
        match *self {
            EfficiencyFunction::Exponential { a } => a,
        }
    }

    /// `f(x)`, with `f(0) = 0`. Negative SINR is a domain error.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::Domain(format!("SINR must be non-negative, got {x}")));
        }
        Ok(self.value(x))
    }

    /// Unchecked `f(x)` for `x >= 0`.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        match *self {
            EfficiencyFunction::Exponential { a } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-a / x).exp()
                }
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            EfficiencyFunction::Exponential { a } => {
                if x <= 0.0 {
                    0.0
                } else {
                    a / (x * x) * (-a / x).exp()
                }
            }
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match *self {
            EfficiencyFunction::Exponential { a } => {
                if x <= 0.0 {
                    0.0
                } else {
                    a * (-a / x).exp() * (a - 2.0 * x) / x.powi(4)
                }
            }
        }
    }

    /// Location of the single inflection point on `x > 0`.
    pub fn inflection_point(&self) -> f64 {
        match *self {
            EfficiencyFunction::Exponential { a } => a / 2.0,
        }
    }

    /// `x f'(x) / f(x)`. Root conditions are solved in this scaled form so that
    /// the underflow of `f` near zero cannot hide the sign change.
    pub fn elasticity(&self, x: f64) -> f64 {
        match *self {
            EfficiencyFunction::Exponential { a } => a / x,
        }
    }

    fn elasticity_derivative(&self, x: f64) -> f64 {
        match *self {
            EfficiencyFunction::Exponential { a } => -a / (x * x),
        }
    }

    /// Unique positive root of `x f'(x) - f(x) = 0`.
    pub fn solve_beta_star(&self) -> Result<f64> {
        self.solve_gamma_tilde(1)
    }

    /// Unique positive root of `x [1 - (K-1) x] f'(x) - f(x) = 0`.
    pub fn solve_gamma_tilde(&self, players: usize) -> Result<f64> {
        if players == 0 {
            return Err(Error::Domain("player count must be at least 1".into()));
        }
        let m = (players - 1) as f64;
        let residual = |x: f64| (1.0 - m * x) * self.elasticity(x) - 1.0;
        let slope = |x: f64| -m * self.elasticity(x) + (1.0 - m * x) * self.elasticity_derivative(x);
        solve_decreasing(residual, slope)
    }

    /// Relative residual `|x f'(x) - f(x)| / f(x)` of the β* condition.
    pub fn beta_residual(&self, x: f64) -> f64 {
        (self.elasticity(x) - 1.0).abs()
    }
}

/// Safeguarded Newton on a function that is positive at the bracket's lower
/// end and eventually negative.
fn solve_decreasing(residual: impl Fn(f64) -> f64, slope: impl Fn(f64) -> f64) -> Result<f64> {
    let mut lo = BRACKET_LO;
    if residual(lo) <= 0.0 {
        return Err(Error::Solver { iterations: 0, lo, hi: lo });
    }
    let mut hi = 1.0;
    let mut grow = 0;
    while residual(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 1100 || !hi.is_finite() {
            return Err(Error::Solver { iterations: grow, lo, hi });
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITERATIONS {
        let r = residual(x);
        if r == 0.0 {
            return Ok(x);
        }
        if r > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(0.5 * (lo + hi));
        }
        let d = slope(x);
        let newton = x - r / d;
        let next = if d.is_finite() && d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Solver { iterations: MAX_ITERATIONS, lo, hi })
}
