//! Learning-augmented trading: blend untrusted advice with the robust RORO
//! stream using a trust weight `lambda`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{OcsError, Result};
use crate::model::{
    suffix_capacity, Direction, Instance, Schedule, CAPACITY_TOL, RATE_TOL, SUM_TOL,
};
use crate::offline::{solve_offline, solve_worst};
use crate::roro::RoroEngine;
use crate::threshold::ThresholdParams;

/// Advice decisions, one per step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AdviceVector(Vec<f64>);

impl AdviceVector {
    pub fn new(x_hat: Vec<f64>) -> Self {
        Self(x_hat)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_schedule(self) -> Schedule {
        Schedule::new(self.0)
    }

    /// Advice must be a feasible schedule for `instance`.
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.0.len() != instance.horizon() {
            return Err(OcsError::Validation(format!(
                "advice has {} entries, instance has {} steps",
                self.0.len(),
                instance.horizon()
            )));
        }
        for (t, (&x, &d)) in self.0.iter().zip(instance.rates()).enumerate() {
            if !(x.is_finite() && x >= -RATE_TOL && x <= d + RATE_TOL) {
                return Err(OcsError::Validation(format!(
                    "advice x[{t}] = {x} outside [0, {d}]"
                )));
            }
        }
        let total: f64 = self.0.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(OcsError::Validation(format!(
                "advice sums to {total}, not 1"
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl From<Schedule> for AdviceVector {
    fn from(s: Schedule) -> Self {
        Self(s.into_inner())
    }
}

/// Session-keyed advice file: `{"session-id": [x0, x1, ...], ...}`.
pub fn load_advice_map(path: impl AsRef<Path>) -> Result<BTreeMap<String, AdviceVector>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Trust setting: `epsilon` is the consistency slack, `lambda` the weight on
/// advice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrustParams {
    pub direction: Direction,
    /// `alpha` (minimize) or `omega` (maximize).
    pub ratio: f64,
    pub epsilon: f64,
    pub lambda: f64,
}

impl TrustParams {
    pub fn new(direction: Direction, ratio: f64, epsilon: f64) -> Result<Self> {
        let lambda = lambda_from_epsilon(direction, ratio, epsilon)?;
        Ok(Self {
            direction,
            ratio,
            epsilon,
            lambda,
        })
    }

    /// Trust from a target weight, reporting the induced `epsilon`.
    pub fn from_lambda(direction: Direction, ratio: f64, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(OcsError::Parameter(format!(
                "lambda = {lambda} outside [0, 1]"
            )));
        }
        check_ratio(ratio)?;
        let epsilon = match direction {
            Direction::Minimize => (ratio - 1.0) * (1.0 - lambda),
            Direction::Maximize => ratio / (1.0 + lambda * (ratio - 1.0)) - 1.0,
        };
        Ok(Self {
            direction,
            ratio,
            epsilon,
            lambda,
        })
    }

    pub fn for_instance(instance: &Instance, epsilon: f64) -> Result<Self> {
        let p = params_of(instance)?;
        Self::new(instance.direction(), p.ratio(), epsilon)
    }
}

fn params_of(instance: &Instance) -> Result<ThresholdParams> {
    ThresholdParams::new(
        instance.direction(),
        instance.lower(),
        instance.upper(),
        instance.beta(),
    )
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(ratio.is_finite() && ratio > 1.0) {
        return Err(OcsError::Parameter(format!(
            "competitive ratio {ratio} must exceed 1"
        )));
    }
    Ok(())
}

/// `(a - 1 - eps)/(a - 1)` when minimizing, `(w/(1 + eps) - 1)/(w - 1)` when
/// maximizing; `eps` must lie in `[0, ratio - 1]`.
pub fn lambda_from_epsilon(direction: Direction, ratio: f64, epsilon: f64) -> Result<f64> {
    check_ratio(ratio)?;
    if !(epsilon >= 0.0 && epsilon <= ratio - 1.0) {
        return Err(OcsError::Parameter(format!(
            "epsilon = {epsilon} outside [0, {}]",
            ratio - 1.0
        )));
    }
    let lambda = match direction {
        Direction::Minimize => (ratio - 1.0 - epsilon) / (ratio - 1.0),
        Direction::Maximize => (ratio / (1.0 + epsilon) - 1.0) / (ratio - 1.0),
    };
    Ok(lambda.clamp(0.0, 1.0))
}

/// Consistency and robustness guarantees for a trust level.
pub fn bounds_check(
    direction: Direction,
    lower: f64,
    upper: f64,
    beta: f64,
    epsilon: f64,
) -> Result<(f64, f64)> {
    let p = ThresholdParams::new(direction, lower, upper, beta)?;
    let r = p.ratio();
    lambda_from_epsilon(direction, r, epsilon)?;
    let robustness = match direction {
        Direction::Minimize => {
            ((upper + 2.0 * beta) / lower * (r - 1.0 - epsilon) + r * epsilon) / (r - 1.0)
        }
        Direction::Maximize => {
            (r - 1.0) * (1.0 + epsilon)
                / (epsilon + (lower - 2.0 * beta) / upper * (r - 1.0 - epsilon))
        }
    };
    Ok((1.0 + epsilon, robustness))
}

/// Runs the blended algorithm. The robust stream is a standalone RORO engine
/// that sees the same pricing functions and evolves on its own decisions.
pub fn ro_advice_run(
    instance: &Instance,
    advice: &AdviceVector,
    trust: &TrustParams,
) -> Result<Schedule> {
    advice.validate(instance)?;
    if !(0.0..=1.0).contains(&trust.lambda) {
        return Err(OcsError::Validation(format!(
            "lambda = {} outside [0, 1]",
            trust.lambda
        )));
    }
    let lambda = trust.lambda;
    let rates = instance.rates();
    let suffix = suffix_capacity(rates);
    let mut robust = RoroEngine::new(instance)?;
    let mut x = Vec::with_capacity(rates.len());
    let mut w = 0.0;
    for (t, g) in instance.pricing().iter().enumerate() {
        let x_tilde = robust.step(g)?;
        let mut x_t = lambda * advice.0[t] + (1.0 - lambda) * x_tilde;
        // Safety net: never leave more demand than the remaining rates can cover.
        if suffix[t + 1] < 1.0 - w - x_t - CAPACITY_TOL {
            x_t = rates[t].min(1.0 - w).max(x_t);
        }
        w += x_t;
        x.push(x_t);
    }
    Ok(Schedule::new(x))
}

/// `(1 - zeta) x* + zeta x_worst` from precomputed optimal and worst schedules.
pub fn blend_advice(optimal: &Schedule, worst: &Schedule, zeta: f64) -> Result<AdviceVector> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(OcsError::Parameter(format!("zeta = {zeta} outside [0, 1]")));
    }
    if zeta == 0.0 {
        return Ok(optimal.clone().into());
    }
    if zeta == 1.0 {
        return Ok(worst.clone().into());
    }
    Ok(worst.blend(optimal, zeta).into())
}

/// Simulated advice of quality `zeta`: exact at 0, adversarial at 1.
pub fn simulate_advice(instance: &Instance, zeta: f64) -> Result<AdviceVector> {
    let optimal = solve_offline(instance)?.schedule;
    let worst = solve_worst(instance)?.schedule;
    blend_advice(&optimal, &worst, zeta)
}
