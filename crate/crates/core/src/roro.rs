//! Online ramping-on / ramping-off (RORO) algorithm.
//!
//! At each step the engine minimizes a pseudo-cost over two intervals: ramping
//! on (`x >= x_prev`) and ramping off (`x <= x_prev`), and keeps whichever
//! branch is cheaper, preferring ramping on when they tie. With sign `s = +1`
//! for minimization and `-1` for maximization, the pseudo-cost is
//!
//! `s * (g(x) - int_w^{w+x} phi(u) du) + beta * |x - x_prev|`.
//!
//! It is convex in `x`, so the per-branch problems are one-dimensional convex
//! minimizations.

use serde::{Deserialize, Serialize};

use crate::error::{OcsError, Result};
use crate::model::{suffix_capacity, Instance, PricingFunction, Schedule, CAPACITY_TOL};
use crate::optimize::golden_section_min;
use crate::threshold::ThresholdParams;

/// Tolerance for the golden-section branch solver.
pub const GOLDEN_TOL: f64 = 1e-10;

/// Per-step optimizer used for the ramping subproblems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    /// Walks the linear pieces of the pseudo-cost derivative and solves each
    /// stationarity condition through the threshold inverse.
    #[default]
    Analytic,
    /// Golden-section search on the convex pseudo-cost, with a closed-form
    /// shortcut for linear pricing.
    GoldenSection,
}

/// Engine state between steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoroState {
    /// Index of the next step.
    pub t: usize,
    /// Utilization so far.
    pub w: f64,
    pub x_prev: f64,
    pub params: ThresholdParams,
    pub in_compulsory: bool,
}

impl RoroState {
    pub fn initial(params: ThresholdParams) -> Self {
        Self {
            t: 0,
            w: 0.0,
            x_prev: 0.0,
            params,
            in_compulsory: false,
        }
    }

    fn sign(&self) -> f64 {
        self.params.direction().sign()
    }

    fn remaining(&self) -> f64 {
        (1.0 - self.w).max(0.0)
    }
}

/// Pseudo-cost of choosing `x` in the current state.
pub fn pcost(g: &PricingFunction, state: &RoroState, x: f64) -> Result<f64> {
    if !(x >= 0.0 && x <= state.remaining() + CAPACITY_TOL) {
        return Err(OcsError::Domain(format!(
            "decision {x} exceeds remaining capacity {}",
            state.remaining()
        )));
    }
    Ok(pcost_raw(g, state, x))
}

fn pcost_raw(g: &PricingFunction, state: &RoroState, x: f64) -> f64 {
    let s = state.sign();
    let integral = state.params.integral_raw(state.w, state.w + x);
    s * (g.value(x) - integral) + state.params.beta() * (x - state.x_prev).abs()
}

/// Upper end of the feasible decision range at this step.
fn step_cap(state: &RoroState, d_t: f64) -> f64 {
    state.remaining().min(d_t)
}

/// Best decision on `[x_prev, min(1 - w, d_t)]`. An empty interval collapses
/// to its upper end.
pub fn ramp_on(g: &PricingFunction, d_t: f64, state: &RoroState) -> Result<(f64, f64)> {
    ramp_on_with(g, d_t, state, SolverMode::default())
}

pub fn ramp_on_with(
    g: &PricingFunction,
    d_t: f64,
    state: &RoroState,
    mode: SolverMode,
) -> Result<(f64, f64)> {
    check_state(state, d_t)?;
    let cap = step_cap(state, d_t);
    let lo = state.x_prev.min(cap);
    let x = minimize_on(g, state, lo, cap, mode);
    Ok((x, pcost_raw(g, state, x)))
}

/// Best decision on `[0, min(x_prev, 1 - w, d_t)]`.
pub fn ramp_off(g: &PricingFunction, d_t: f64, state: &RoroState) -> Result<(f64, f64)> {
    ramp_off_with(g, d_t, state, SolverMode::default())
}

pub fn ramp_off_with(
    g: &PricingFunction,
    d_t: f64,
    state: &RoroState,
    mode: SolverMode,
) -> Result<(f64, f64)> {
    check_state(state, d_t)?;
    let hi = state.x_prev.min(step_cap(state, d_t));
    let x = minimize_on(g, state, 0.0, hi, mode);
    Ok((x, pcost_raw(g, state, x)))
}

fn check_state(state: &RoroState, d_t: f64) -> Result<()> {
    if !(state.w >= 0.0 && state.w <= 1.0 + CAPACITY_TOL) {
        return Err(OcsError::Domain(format!(
            "utilization {} outside [0, 1]",
            state.w
        )));
    }
    if !(state.x_prev >= 0.0 && state.x_prev <= 1.0 + CAPACITY_TOL) {
        return Err(OcsError::Domain(format!(
            "previous decision {} outside [0, 1]",
            state.x_prev
        )));
    }
    if !(d_t > 0.0 && d_t.is_finite()) {
        return Err(OcsError::Domain(format!(
            "rate limit {d_t} must be positive"
        )));
    }
    Ok(())
}

fn minimize_on(g: &PricingFunction, state: &RoroState, lo: f64, hi: f64, mode: SolverMode) -> f64 {
    if !(hi > lo) {
        return lo;
    }
    match mode {
        SolverMode::Analytic => analytic_argmin(g, state, lo, hi),
        SolverMode::GoldenSection if g.is_linear() => analytic_argmin(g, state, lo, hi),
        SolverMode::GoldenSection => {
            golden_section_min(|x| pcost_raw(g, state, x), lo, hi, GOLDEN_TOL).0
        }
    }
}

/// Leftmost minimizer of the convex pseudo-cost on `[lo, hi]`.
///
/// Between consecutive kinks (pricing breakpoints and `x_prev`) the derivative
/// is `s * slope + sigma * beta - s * phi(w + x)` with `sigma = sign(x - x_prev)`,
/// which is continuous and nondecreasing. The first piece whose derivative
/// turns nonnegative holds the minimizer.
fn analytic_argmin(g: &PricingFunction, state: &RoroState, lo: f64, hi: f64) -> f64 {
    let s = state.sign();
    let beta = state.params.beta();
    let p = &state.params;

    let mut cuts: Vec<f64> = g
        .pieces()
        .map(|(a, _, _)| a)
        .filter(|&a| a > lo && a < hi)
        .collect();
    if state.x_prev > lo && state.x_prev < hi {
        cuts.push(state.x_prev);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut a = lo;
    for b in cuts.into_iter().chain(std::iter::once(hi)) {
        let mid = 0.5 * (a + b);
        let slope = slope_at(g, mid);
        let sigma = if mid >= state.x_prev { 1.0 } else { -1.0 };
        let level = slope + s * sigma * beta;
        let deriv = |x: f64| s * (level - p.phi_raw(state.w + x));
        if deriv(a) >= 0.0 {
            return a;
        }
        if deriv(b) > 0.0 {
            let u = p.inverse_raw(level);
            let x = u - state.w;
            return if x.is_nan() { a } else { x.clamp(a, b) };
        }
        a = b;
    }
    hi
}

fn slope_at(g: &PricingFunction, x: f64) -> f64 {
    g.pieces()
        .find(|&(a, b, _)| x >= a && x < b)
        .map(|(_, _, c)| c)
        .unwrap_or_else(|| *g.slopes().last().expect("nonempty pricing"))
}

/// One non-compulsory step: returns the decision and the updated state.
pub fn roro_step(g: &PricingFunction, d_t: f64, state: &RoroState) -> Result<(f64, RoroState)> {
    roro_step_with(g, d_t, state, SolverMode::default())
}

pub fn roro_step_with(
    g: &PricingFunction,
    d_t: f64,
    state: &RoroState,
    mode: SolverMode,
) -> Result<(f64, RoroState)> {
    if state.in_compulsory {
        return Err(OcsError::Domain(
            "step requested during compulsory trading".into(),
        ));
    }
    let (x_plus, r_plus) = ramp_on_with(g, d_t, state, mode)?;
    let (x_minus, r_minus) = ramp_off_with(g, d_t, state, mode)?;
    let x = if r_plus <= r_minus { x_plus } else { x_minus };
    Ok((x, advance(state, x)))
}

fn advance(state: &RoroState, x: f64) -> RoroState {
    RoroState {
        t: state.t + 1,
        w: state.w + x,
        x_prev: x,
        ..*state
    }
}

/// Streaming RORO: reveal one pricing function per call; the decision for a
/// step is returned before the next function is seen.
#[derive(Clone, Debug)]
pub struct RoroEngine {
    rates: Vec<f64>,
    suffix: Vec<f64>,
    state: RoroState,
    mode: SolverMode,
    decisions: Vec<f64>,
}

impl RoroEngine {
    pub fn new(instance: &Instance) -> Result<Self> {
        Self::with_mode(instance, SolverMode::default())
    }

    pub fn with_mode(instance: &Instance, mode: SolverMode) -> Result<Self> {
        let params = ThresholdParams::new(
            instance.direction(),
            instance.lower(),
            instance.upper(),
            instance.beta(),
        )?;
        Ok(Self::from_parts(params, instance.rates().to_vec(), mode))
    }

    /// Engine over explicit thresholds and rate limits.
    pub fn from_parts(params: ThresholdParams, rates: Vec<f64>, mode: SolverMode) -> Self {
        let suffix = suffix_capacity(&rates);
        Self {
            decisions: Vec::with_capacity(rates.len()),
            rates,
            suffix,
            state: RoroState::initial(params),
            mode,
        }
    }

    pub fn state(&self) -> &RoroState {
        &self.state
    }

    pub fn decisions(&self) -> &[f64] {
        &self.decisions
    }

    pub fn is_done(&self) -> bool {
        self.state.t >= self.rates.len()
    }

    /// Whether the step about to run must trade at full rate.
    pub fn compulsory_now(&self) -> bool {
        self.state.in_compulsory
            || self.suffix[self.state.t + 1] < self.state.remaining() - CAPACITY_TOL
    }

    /// Decides the current step given its pricing function.
    pub fn step(&mut self, g: &PricingFunction) -> Result<f64> {
        if self.is_done() {
            return Err(OcsError::Structural("horizon exhausted".into()));
        }
        let t = self.state.t;
        let d_t = self.rates[t];
        if self.compulsory_now() {
            self.state.in_compulsory = true;
        }
        let x = if self.state.in_compulsory {
            let x = d_t.min(self.state.remaining());
            self.state = advance(&self.state, x);
            x
        } else {
            let (x, next) = roro_step_with(g, d_t, &self.state, self.mode)?;
            self.state = next;
            x
        };
        self.decisions.push(x);
        Ok(x)
    }

    pub fn finish(self) -> Result<Schedule> {
        if !self.is_done() {
            return Err(OcsError::Structural(format!(
                "only {} of {} steps decided",
                self.state.t,
                self.rates.len()
            )));
        }
        Ok(Schedule::new(self.decisions))
    }
}

/// Runs RORO over a whole instance.
pub fn roro_run(instance: &Instance) -> Result<Schedule> {
    roro_run_with(instance, SolverMode::default())
}

pub fn roro_run_with(instance: &Instance, mode: SolverMode) -> Result<Schedule> {
    let mut engine = RoroEngine::with_mode(instance, mode)?;
    for g in instance.pricing() {
        engine.step(g)?;
    }
    engine.finish()
}

/// Closed-form double-threshold rule for binary decisions: from off, accept
/// when `c <= phi_i - beta`; from on, keep accepting while `c <= phi_i + beta`.
pub fn opr_step(c: f64, x_prev: bool, phi_i: f64, beta: f64) -> bool {
    if x_prev {
        c <= phi_i + beta
    } else {
        c <= phi_i - beta
    }
}

/// The ramping framework restricted to `x in {0, 1}` with linear price `c`
/// and constant threshold `phi_i`. Argmin ties inside a branch prefer 1.
pub fn binary_roro_step(c: f64, x_prev: bool, phi_i: f64, beta: f64) -> bool {
    let prev = if x_prev { 1.0 } else { 0.0 };
    let cost = |x: f64| c * x + beta * (x - prev).abs() - phi_i * x;
    let argmin = |options: &[f64]| -> (f64, f64) {
        let mut best = (options[0], cost(options[0]));
        for &x in &options[1..] {
            let r = cost(x);
            if r < best.1 || (r == best.1 && x > best.0) {
                best = (x, r);
            }
        }
        best
    };
    let on: &[f64] = if x_prev { &[1.0] } else { &[0.0, 1.0] };
    let off: &[f64] = if x_prev { &[0.0, 1.0] } else { &[0.0] };
    let (x_plus, r_plus) = argmin(on);
    let (x_minus, r_minus) = argmin(off);
    let x = if r_plus <= r_minus { x_plus } else { x_minus };
    x == 1.0
}

/// Buys `k = thresholds.len()` indivisible units over the price sequence.
/// The `i`-th unit (0-based) is judged against `thresholds[i]`; once the
/// remaining steps only just cover the remaining units every step buys.
pub fn opr_run(
    prices: &[f64],
    thresholds: &[f64],
    beta: f64,
    rule: impl Fn(f64, bool, f64, f64) -> bool,
) -> Vec<bool> {
    let k = thresholds.len();
    let horizon = prices.len();
    let mut bought = 0;
    let mut prev = false;
    let mut out = Vec::with_capacity(horizon);
    for (t, &c) in prices.iter().enumerate() {
        let x = if bought == k {
            false
        } else if k - bought >= horizon - t {
            true
        } else {
            rule(c, prev, thresholds[bought], beta)
        };
        bought += usize::from(x);
        prev = x;
        out.push(x);
    }
    out
}
