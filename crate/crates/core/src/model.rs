//! Problem data model: pricing functions, instances, schedules and the
//! objective evaluator shared by every algorithm in the crate.
//!
//! Demand is normalized to one unit. A schedule `x` trades `x[t]` of that unit
//! at step `t` (0-based), paying (or earning) `g_t(x[t])` plus a switching
//! charge `beta * |x[t] - x[t-1]|`, where the decision before the first step
//! and after the last step is zero.

use serde::{Deserialize, Serialize};

use crate::error::{OcsError, Result};

/// Absolute tolerance for the deadline equality `sum(x) == 1`.
pub const SUM_TOL: f64 = 1e-9;
/// Slack allowed on per-step rate limits.
pub const RATE_TOL: f64 = 1e-12;
/// Slack used when deciding whether remaining capacity covers remaining demand.
pub const CAPACITY_TOL: f64 = 1e-12;

/// Whether the player buys (cost minimization) or sells (profit maximization).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[serde(alias = "min")]
    Minimize,
    #[serde(alias = "max")]
    Maximize,
}

impl Direction {
    /// `+1` for minimization, `-1` for maximization.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        }
    }

    /// Empirical competitive ratio of `alg` against `opt` (`alg/opt` when
    /// minimizing, `opt/alg` when maximizing).
    pub fn ratio(self, alg: f64, opt: f64) -> f64 {
        match self {
            Direction::Minimize => alg / opt,
            Direction::Maximize => opt / alg,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::Minimize => f.write_str("minimize"),
            Direction::Maximize => f.write_str("maximize"),
        }
    }
}

/// A continuous piecewise-linear function on `[0, 1]` with `g(0) = 0`.
///
/// Stored as segments `(start, slope)`: the slope applies from `start` up to
/// the next segment's start (the last segment runs to 1). Serialized as a list
/// of `[start, slope]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct PricingFunction {
    starts: Vec<f64>,
    slopes: Vec<f64>,
}

impl PricingFunction {
    pub fn new(segments: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let (starts, slopes): (Vec<f64>, Vec<f64>) = segments.into_iter().unzip();
        if starts.is_empty() {
            return Err(OcsError::Data(
                "pricing function needs at least one segment".into(),
            ));
        }
        if starts[0] != 0.0 {
            return Err(OcsError::Data(format!(
                "first segment must start at 0, got {}",
                starts[0]
            )));
        }
        for w in starts.windows(2) {
            if !(w[1] > w[0]) {
                return Err(OcsError::Data(format!(
                    "segment starts must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if let Some(last) = starts.last() {
            if !(*last < 1.0) {
                return Err(OcsError::Data(format!(
                    "segment start {last} outside [0, 1)"
                )));
            }
        }
        for &s in &slopes {
            if s.is_nan() {
                return Err(OcsError::Data("NaN slope in pricing function".into()));
            }
            if !s.is_finite() || s < 0.0 {
                return Err(OcsError::Data(format!(
                    "slope {s} must be finite and nonnegative"
                )));
            }
        }
        Ok(Self { starts, slopes })
    }

    /// `g(x) = slope * x`.
    pub fn linear(slope: f64) -> Result<Self> {
        Self::new([(0.0, slope)])
    }

    pub fn is_linear(&self) -> bool {
        self.slopes.len() == 1
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Segments as `(start, end, slope)` triples covering `[0, 1]`.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.starts.len()).map(move |k| {
            let end = self.starts.get(k + 1).copied().unwrap_or(1.0);
            (self.starts[k], end, self.slopes[k])
        })
    }

    /// Evaluates `g(x)`. The last slope extends past 1; negative `x` maps to 0.
    pub fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        for k in 0..self.starts.len() {
            let a = self.starts[k];
            if x <= a {
                break;
            }
            let b = self.starts.get(k + 1).copied().unwrap_or(f64::INFINITY);
            total += self.slopes[k] * (x.min(b) - a);
        }
        total
    }

    /// Slopes nondecreasing.
    pub fn is_convex(&self) -> bool {
        self.slopes.windows(2).all(|w| w[1] >= w[0])
    }

    /// Slopes nonincreasing.
    pub fn is_concave(&self) -> bool {
        self.slopes.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn fits(&self, direction: Direction) -> bool {
        match direction {
            Direction::Minimize => self.is_convex(),
            Direction::Maximize => self.is_concave(),
        }
    }

    pub fn min_slope(&self) -> f64 {
        self.slopes.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_slope(&self) -> f64 {
        self.slopes
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl TryFrom<Vec<[f64; 2]>> for PricingFunction {
    type Error = OcsError;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(v.into_iter().map(|[a, s]| (a, s)))
    }
}

impl From<PricingFunction> for Vec<[f64; 2]> {
    fn from(g: PricingFunction) -> Self {
        g.starts
            .into_iter()
            .zip(g.slopes)
            .map(|(a, s)| [a, s])
            .collect()
    }
}

/// One OCS problem instance with unit demand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct Instance {
    direction: Direction,
    beta: f64,
    lower: f64,
    upper: f64,
    rates: Vec<f64>,
    pricing: Vec<PricingFunction>,
}

/// Wire form of [`Instance`].
#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    direction: Direction,
    #[serde(rename = "T")]
    horizon: usize,
    beta: f64,
    #[serde(rename = "L")]
    lower: f64,
    #[serde(rename = "U")]
    upper: f64,
    rates: Vec<f64>,
    pricing: Vec<PricingFunction>,
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = OcsError;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        if doc.horizon != doc.rates.len() || doc.horizon != doc.pricing.len() {
            return Err(OcsError::Structural(format!(
                "T = {} but {} rates and {} pricing functions",
                doc.horizon,
                doc.rates.len(),
                doc.pricing.len()
            )));
        }
        Instance::new(
            doc.direction,
            doc.beta,
            doc.lower,
            doc.upper,
            doc.rates,
            doc.pricing,
        )
    }
}

impl From<Instance> for InstanceDoc {
    fn from(i: Instance) -> Self {
        InstanceDoc {
            direction: i.direction,
            horizon: i.rates.len(),
            beta: i.beta,
            lower: i.lower,
            upper: i.upper,
            rates: i.rates,
            pricing: i.pricing,
        }
    }
}

impl Instance {
    pub fn new(
        direction: Direction,
        beta: f64,
        lower: f64,
        upper: f64,
        rates: Vec<f64>,
        pricing: Vec<PricingFunction>,
    ) -> Result<Self> {
        if rates.is_empty() {
            return Err(OcsError::Structural("horizon must be positive".into()));
        }
        if rates.len() != pricing.len() {
            return Err(OcsError::Structural(format!(
                "{} rates but {} pricing functions",
                rates.len(),
                pricing.len()
            )));
        }
        if !(lower.is_finite() && upper.is_finite() && lower > 0.0 && lower <= upper) {
            return Err(OcsError::Parameter(format!(
                "need 0 < L <= U, got L = {lower}, U = {upper}"
            )));
        }
        check_beta(direction, lower, upper, beta)?;
        for (t, &d) in rates.iter().enumerate() {
            if !(d.is_finite() && d > 0.0 && d <= 1.0 + RATE_TOL) {
                return Err(OcsError::Data(format!("rate d[{t}] = {d} outside (0, 1]")));
            }
        }
        let capacity: f64 = rates.iter().sum();
        if capacity < 1.0 - SUM_TOL {
            return Err(OcsError::Infeasible(format!(
                "total rate capacity {capacity} cannot cover unit demand"
            )));
        }
        for (t, g) in pricing.iter().enumerate() {
            if !g.fits(direction) {
                let shape = match direction {
                    Direction::Minimize => "convex",
                    Direction::Maximize => "concave",
                };
                return Err(OcsError::Data(format!(
                    "pricing function {t} is not {shape}"
                )));
            }
        }
        Ok(Self {
            direction,
            beta,
            lower,
            upper,
            rates,
            pricing,
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn horizon(&self) -> usize {
        self.rates.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn pricing(&self) -> &[PricingFunction] {
        &self.pricing
    }

    /// Same instance with a different switching coefficient.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        check_beta(self.direction, self.lower, self.upper, beta)?;
        Ok(Self {
            beta,
            ..self.clone()
        })
    }

    /// First step `t' >= t` at which the capacity after `t'` no longer covers
    /// `1 - w`.
    pub fn compulsory_start(&self, w: f64, t: usize) -> Option<usize> {
        compulsory_start(&self.rates, w, t)
    }

    /// Greedy completion of `partial` from step `j` onward.
    pub fn compulsory_fill(&self, partial: &Schedule, j: usize) -> Result<Schedule> {
        compulsory_fill(&self.rates, partial, j)
    }

    /// Schedule-independent bound checks on a candidate schedule.
    pub fn is_feasible(&self, schedule: &Schedule) -> bool {
        schedule.len() == self.horizon()
            && schedule
                .iter()
                .zip(&self.rates)
                .all(|(&x, &d)| x >= -RATE_TOL && x <= d + RATE_TOL)
            && (schedule.total() - 1.0).abs() <= SUM_TOL
    }
}

fn check_beta(direction: Direction, lower: f64, upper: f64, beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(OcsError::Parameter(format!(
            "beta = {beta} must be finite and >= 0"
        )));
    }
    let (bound, name) = match direction {
        Direction::Minimize => ((upper - lower) / 2.0, "(U - L)/2"),
        Direction::Maximize => (lower / 2.0, "L/2"),
    };
    // beta = 0 is always admissible (one-way trading reduction).
    if beta > 0.0 && beta >= bound {
        return Err(OcsError::Parameter(format!(
            "beta = {beta} must be below {name} = {bound}"
        )));
    }
    Ok(())
}

/// A decision sequence `x[0..T]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule(Vec<f64>);

impl Schedule {
    pub fn new(x: Vec<f64>) -> Self {
        Self(x)
    }

    pub fn zeros(horizon: usize) -> Self {
        Self(vec![0.0; horizon])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Cumulative utilization `w[t] = x[0] + ... + x[t]`.
    pub fn utilization(&self) -> Vec<f64> {
        self.0
            .iter()
            .scan(0.0, |w, &x| {
                *w += x;
                Some(*w)
            })
            .collect()
    }

    /// `sum_{t=0}^{T} |x[t] - x[t-1]|` with zero boundary decisions.
    pub fn total_variation(&self) -> f64 {
        let mut prev = 0.0;
        let mut tv = 0.0;
        for &x in &self.0 {
            tv += (x - prev).abs();
            prev = x;
        }
        tv + prev.abs()
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn blend(&self, other: &Schedule, lambda: f64) -> Schedule {
        Schedule(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
        )
    }
}

impl std::ops::Index<usize> for Schedule {
    type Output = f64;

    fn index(&self, t: usize) -> &f64 {
        &self.0[t]
    }
}

impl From<Vec<f64>> for Schedule {
    fn from(x: Vec<f64>) -> Self {
        Self(x)
    }
}

/// Objective breakdown of a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    /// Purchasing cost (minimize) or selling revenue (maximize).
    pub trade_cost: f64,
    pub switch_cost: f64,
    /// `trade + switch` when minimizing, `trade - switch` when maximizing.
    pub objective: f64,
    pub feasible: bool,
    /// 0-based step at which the schedule entered compulsory trading, if ever.
    pub compulsory_start: Option<usize>,
}

/// Evaluates `schedule` on `instance`, including the switching charges at
/// both boundaries.
pub fn evaluate(instance: &Instance, schedule: &Schedule) -> Result<SolutionReport> {
    if schedule.len() != instance.horizon() {
        return Err(OcsError::Structural(format!(
            "schedule has {} steps, instance has {}",
            schedule.len(),
            instance.horizon()
        )));
    }
    if schedule.iter().any(|x| !x.is_finite()) {
        return Err(OcsError::Data("non-finite decision in schedule".into()));
    }
    let trade_cost: f64 = instance
        .pricing
        .iter()
        .zip(schedule.iter())
        .map(|(g, &x)| g.value(x))
        .sum();
    let switch_cost = instance.beta * schedule.total_variation();
    let objective = match instance.direction {
        Direction::Minimize => trade_cost + switch_cost,
        Direction::Maximize => trade_cost - switch_cost,
    };
    let suffix = suffix_capacity(&instance.rates);
    let mut w = 0.0;
    let mut compulsory = None;
    for (t, &x) in schedule.iter().enumerate() {
        if suffix[t + 1] < 1.0 - w - CAPACITY_TOL {
            compulsory = Some(t);
            break;
        }
        w += x;
    }
    Ok(SolutionReport {
        trade_cost,
        switch_cost,
        objective,
        feasible: instance.is_feasible(schedule),
        compulsory_start: compulsory,
    })
}

/// `suffix[t] = d[t] + ... + d[T-1]`, with `suffix[T] = 0`.
pub fn suffix_capacity(rates: &[f64]) -> Vec<f64> {
    let mut suffix = vec![0.0; rates.len() + 1];
    for t in (0..rates.len()).rev() {
        suffix[t] = suffix[t + 1] + rates[t];
    }
    suffix
}

/// First step `t' >= t` with `sum_{tau > t'} d[tau] < 1 - w`.
pub fn compulsory_start(rates: &[f64], w: f64, t: usize) -> Option<usize> {
    let remaining = 1.0 - w;
    let mut after = rates.iter().skip(t + 1).sum::<f64>();
    for t_prime in t..rates.len() {
        if after < remaining - CAPACITY_TOL {
            return Some(t_prime);
        }
        if let Some(d) = rates.get(t_prime + 1) {
            after -= d;
        }
    }
    None
}

/// Keeps `partial[..j]` and trades `min(d[t], remaining)` from `j` onward.
pub fn compulsory_fill(rates: &[f64], partial: &Schedule, j: usize) -> Result<Schedule> {
    if partial.len() != rates.len() {
        return Err(OcsError::Structural(format!(
            "schedule has {} steps, rates have {}",
            partial.len(),
            rates.len()
        )));
    }
    if j > rates.len() {
        return Err(OcsError::Structural(format!(
            "start index {j} beyond horizon"
        )));
    }
    let mut x = partial.as_slice().to_vec();
    let mut remaining = 1.0 - x[..j].iter().sum::<f64>();
    for t in j..rates.len() {
        let take = rates[t].min(remaining).max(0.0);
        x[t] = take;
        remaining -= take;
    }
    if remaining > SUM_TOL {
        return Err(OcsError::Infeasible(format!(
            "remaining capacity leaves {remaining} of demand unmet"
        )));
    }
    Ok(Schedule(x))
}
