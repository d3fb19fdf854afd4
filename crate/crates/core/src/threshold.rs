//! Competitive ratios and the utilization-indexed threshold functions.
//!
//! For minimization the threshold is decreasing,
//! `phi(w) = U - beta + (U/alpha - U + 2 beta) e^{w/alpha}`, running from
//! `U/alpha + beta` down to `L + beta`. For maximization it is increasing,
//! `Phi(w) = L + beta + (omega L - L - 2 beta) e^{omega w}`, running from
//! `omega L - beta` up to `U - beta`.

use serde::{Deserialize, Serialize};

use crate::error::{OcsError, Result};
use crate::lambert::lambert_w0;
use crate::model::Direction;

/// Tolerance on the boundary identities `phi(1) = L + beta`, `Phi(1) = U - beta`.
pub const BOUNDARY_TOL: f64 = 1e-9;

fn check_bounds(lower: f64, upper: f64, beta: f64) -> Result<()> {
    if !(lower.is_finite() && upper.is_finite() && lower > 0.0 && lower <= upper) {
        return Err(OcsError::Parameter(format!(
            "need 0 < L <= U, got L = {lower}, U = {upper}"
        )));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(OcsError::Parameter(format!(
            "beta = {beta} must be finite and >= 0"
        )));
    }
    Ok(())
}

/// Competitive ratio of the minimization algorithm.
///
/// `alpha = 1 / (W((2b/U + L/U - 1) e^{2b/U - 1}) - 2b/U + 1)`. Requires
/// `beta < (U - L)/2`; `beta = 0` is always allowed.
pub fn alpha(lower: f64, upper: f64, beta: f64) -> Result<f64> {
    check_bounds(lower, upper, beta)?;
    if beta > 0.0 && beta >= (upper - lower) / 2.0 {
        return Err(OcsError::Parameter(format!(
            "beta = {beta} must be below (U - L)/2 = {}",
            (upper - lower) / 2.0
        )));
    }
    let b = 2.0 * beta / upper;
    let arg = (b + lower / upper - 1.0) * (b - 1.0).exp();
    Ok(1.0 / (lambert_w0(arg)? - b + 1.0))
}

/// Competitive ratio of the maximization algorithm.
///
/// `omega = W((U/L - 1 - 2b/L) / e^{1 + 2b/L}) + 1 + 2b/L`. Requires
/// `beta < L/2`.
pub fn omega(lower: f64, upper: f64, beta: f64) -> Result<f64> {
    check_bounds(lower, upper, beta)?;
    if beta >= lower / 2.0 {
        return Err(OcsError::Parameter(format!(
            "beta = {beta} must be below L/2 = {}",
            lower / 2.0
        )));
    }
    let b = 2.0 * beta / lower;
    let arg = (upper / lower - 1.0 - b) / (1.0 + b).exp();
    Ok(lambert_w0(arg)? + 1.0 + b)
}

/// `(L, U, beta)` together with the derived ratio and threshold coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThresholdSpec", into = "ThresholdDoc")]
pub struct ThresholdParams {
    direction: Direction,
    lower: f64,
    upper: f64,
    beta: f64,
    ratio: f64,
    coefficient: f64,
}

#[derive(Deserialize)]
struct ThresholdSpec {
    direction: Direction,
    #[serde(rename = "L")]
    lower: f64,
    #[serde(rename = "U")]
    upper: f64,
    beta: f64,
}

#[derive(Serialize)]
struct ThresholdDoc {
    direction: Direction,
    #[serde(rename = "L")]
    lower: f64,
    #[serde(rename = "U")]
    upper: f64,
    beta: f64,
    ratio: f64,
    coefficient: f64,
}

impl TryFrom<ThresholdSpec> for ThresholdParams {
    type Error = OcsError;

    fn try_from(s: ThresholdSpec) -> Result<Self> {
        ThresholdParams::new(s.direction, s.lower, s.upper, s.beta)
    }
}

impl From<ThresholdParams> for ThresholdDoc {
    fn from(p: ThresholdParams) -> Self {
        ThresholdDoc {
            direction: p.direction,
            lower: p.lower,
            upper: p.upper,
            beta: p.beta,
            ratio: p.ratio,
            coefficient: p.coefficient,
        }
    }
}

impl ThresholdParams {
    /// Computes the ratio and coefficient, then checks the monotonicity sign
    /// and the boundary identity at `w = 1`.
    pub fn new(direction: Direction, lower: f64, upper: f64, beta: f64) -> Result<Self> {
        let (ratio, coefficient) = match direction {
            Direction::Minimize => {
                let a = alpha(lower, upper, beta)?;
                (a, upper / a - upper + 2.0 * beta)
            }
            Direction::Maximize => {
                let o = omega(lower, upper, beta)?;
                (o, o * lower - lower - 2.0 * beta)
            }
        };
        let monotone = match direction {
            Direction::Minimize => coefficient < 0.0,
            Direction::Maximize => coefficient > 0.0,
        };
        if !(ratio > 1.0 && monotone) {
            return Err(OcsError::Parameter(format!(
                "degenerate thresholds for L = {lower}, U = {upper}, beta = {beta} \
                 (ratio {ratio}, coefficient {coefficient})"
            )));
        }
        let p = Self {
            direction,
            lower,
            upper,
            beta,
            ratio,
            coefficient,
        };
        let (end, target) = match direction {
            Direction::Minimize => (p.phi_raw(1.0), lower + beta),
            Direction::Maximize => (p.phi_raw(1.0), upper - beta),
        };
        if (end - target).abs() > BOUNDARY_TOL {
            return Err(OcsError::Solver(format!(
                "threshold endpoint {end} misses {target} by {}",
                (end - target).abs()
            )));
        }
        Ok(p)
    }

    pub fn minimize(lower: f64, upper: f64, beta: f64) -> Result<Self> {
        Self::new(Direction::Minimize, lower, upper, beta)
    }

    pub fn maximize(lower: f64, upper: f64, beta: f64) -> Result<Self> {
        Self::new(Direction::Maximize, lower, upper, beta)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `alpha` (minimize) or `omega` (maximize).
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// Threshold value at utilization `w`.
    pub fn phi(&self, w: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&w) {
            return Err(OcsError::Domain(format!("utilization {w} outside [0, 1]")));
        }
        Ok(self.phi_raw(w))
    }

    /// Unchecked threshold; extends the closed form beyond `[0, 1]`.
    pub fn phi_raw(&self, w: f64) -> f64 {
        match self.direction {
            Direction::Minimize => {
                self.upper - self.beta + self.coefficient * (w / self.ratio).exp()
            }
            Direction::Maximize => {
                self.lower + self.beta + self.coefficient * (self.ratio * w).exp()
            }
        }
    }

    /// `int_a^b phi(u) du` in closed form.
    pub fn phi_integral(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Err(OcsError::Domain(format!(
                "integral bounds reversed: {a} > {b}"
            )));
        }
        if a < 0.0 || b > 1.0 {
            return Err(OcsError::Domain(format!(
                "integral bounds [{a}, {b}] outside [0, 1]"
            )));
        }
        Ok(self.integral_raw(a, b))
    }

    /// Unchecked integral, valid for any `a <= b`.
    pub fn integral_raw(&self, a: f64, b: f64) -> f64 {
        let len = b - a;
        match self.direction {
            Direction::Minimize => {
                let k = self.ratio;
                (self.upper - self.beta) * len
                    + k * self.coefficient * (a / k).exp() * (len / k).exp_m1()
            }
            Direction::Maximize => {
                let k = self.ratio;
                (self.lower + self.beta) * len
                    + self.coefficient / k * (k * a).exp() * (k * len).exp_m1()
            }
        }
    }

    /// Threshold values at `w = 0` and `w = 1`, in that order.
    pub fn endpoints(&self) -> (f64, f64) {
        (self.phi_raw(0.0), self.phi_raw(1.0))
    }

    /// Utilization at which the threshold equals `y`.
    pub fn phi_inverse(&self, y: f64) -> Result<f64> {
        let (at0, at1) = self.endpoints();
        let (lo, hi) = if at0 < at1 { (at0, at1) } else { (at1, at0) };
        let slack = 1e-12 * (1.0 + y.abs());
        if !(y >= lo - slack && y <= hi + slack) {
            return Err(OcsError::Range(format!(
                "threshold value {y} outside [{lo}, {hi}]"
            )));
        }
        if y == at0 {
            return Ok(0.0);
        }
        if y == at1 {
            return Ok(1.0);
        }
        let w = self.inverse_raw(y);
        Ok(if w.is_nan() { 0.0 } else { w.clamp(0.0, 1.0) })
    }

    /// Unclamped inverse of the closed form. Values the threshold never
    /// reaches on the `w = 0` side map to `-inf`; values beyond the
    /// asymptote on the other side cannot occur for monotone thresholds.
    pub fn inverse_raw(&self, y: f64) -> f64 {
        match self.direction {
            Direction::Minimize => {
                let r = (y - self.upper + self.beta) / self.coefficient;
                if r <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    self.ratio * r.ln()
                }
            }
            Direction::Maximize => {
                let r = (y - self.lower - self.beta) / self.coefficient;
                if r <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    r.ln() / self.ratio
                }
            }
        }
    }
}
