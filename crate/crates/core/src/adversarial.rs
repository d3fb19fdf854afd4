//! Worst-case instance families and empirical competitive-ratio sweeps.
//!
//! For minimization with target `x`, prices are drawn from a grid of step
//! `delta = (U - L)/n`. The stream alternates blocks of `m` steps at `U` with
//! single steps at `U - delta, U - 2 delta, ...` until the price would reach
//! `x`, then holds `x + delta/2` for `m` steps, then finishes with `m` steps
//! at `U`. Maximization mirrors this around `L`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OcsError, Result};
use crate::model::{evaluate, Direction, Instance, PricingFunction, Schedule};
use crate::offline::solve_offline;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarialSpec {
    pub direction: Direction,
    /// Target price in `[L, U]`.
    pub x: f64,
    /// Grid resolution; `delta = (U - L)/n`.
    pub n: usize,
    /// Block length.
    pub m: usize,
    #[serde(rename = "L")]
    pub lower: f64,
    #[serde(rename = "U")]
    pub upper: f64,
    pub beta: f64,
}

impl AdversarialSpec {
    pub fn delta(&self) -> f64 {
        (self.upper - self.lower) / self.n as f64
    }

    /// Number of grid steps between the starting price and `x`.
    pub fn steps(&self) -> usize {
        let gap = match self.direction {
            Direction::Minimize => self.upper - self.x,
            Direction::Maximize => self.x - self.lower,
        };
        (gap / self.delta() - 1e-9).ceil().max(0.0) as usize
    }

    /// Price of the target block (`x + delta/2` or `x - delta/2`), if present.
    pub fn target_price(&self) -> Option<f64> {
        (self.steps() > 0).then(|| match self.direction {
            Direction::Minimize => self.x + self.delta() / 2.0,
            Direction::Maximize => self.x - self.delta() / 2.0,
        })
    }

    /// Offline optimum: the target block bought (or sold) in one run.
    pub fn expected_opt(&self) -> f64 {
        let switching = 2.0 * self.beta / self.m as f64;
        match (self.target_price(), self.direction) {
            (None, Direction::Minimize) => self.upper + switching,
            (None, Direction::Maximize) => self.lower - switching,
            (Some(p), Direction::Minimize) => p + switching,
            (Some(p), Direction::Maximize) => p - switching,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(OcsError::Parameter("n and m must be at least 1".into()));
        }
        if !(self.lower > 0.0 && self.lower < self.upper) {
            return Err(OcsError::Parameter(format!(
                "need 0 < L < U, got L = {}, U = {}",
                self.lower, self.upper
            )));
        }
        if !(self.x >= self.lower && self.x <= self.upper) {
            return Err(OcsError::Parameter(format!(
                "target {} outside [{}, {}]",
                self.x, self.lower, self.upper
            )));
        }
        Ok(())
    }
}

/// Slopes of the family member described by `spec`.
pub fn slopes(spec: &AdversarialSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let (base, step) = match spec.direction {
        Direction::Minimize => (spec.upper, -spec.delta()),
        Direction::Maximize => (spec.lower, spec.delta()),
    };
    let k = spec.steps();
    let mut out = Vec::with_capacity((k + 2) * (spec.m + 1));
    if let Some(target) = spec.target_price() {
        for j in 0..k {
            out.extend(std::iter::repeat_n(base, spec.m));
            if j + 1 < k {
                out.push(base + (j + 1) as f64 * step);
            }
        }
        out.extend(std::iter::repeat_n(target, spec.m));
    }
    out.extend(std::iter::repeat_n(base, spec.m));
    Ok(out)
}

/// Builds the instance with linear pricing and unit rate limits.
pub fn generate(spec: &AdversarialSpec) -> Result<Instance> {
    let pricing = slopes(spec)?
        .into_iter()
        .map(PricingFunction::linear)
        .collect::<Result<Vec<_>>>()?;
    let horizon = pricing.len();
    Instance::new(
        spec.direction,
        spec.beta,
        spec.lower,
        spec.upper,
        vec![1.0; horizon],
        pricing,
    )
}

/// `points` targets evenly spread over `[L, U]`, snapped to the price grid.
pub fn target_grid(lower: f64, upper: f64, n: usize, points: usize) -> Vec<f64> {
    let delta = (upper - lower) / n as f64;
    let mut ks: Vec<usize> = (0..points)
        .map(|i| {
            if points == 1 {
                0
            } else {
                ((i * n) as f64 / (points - 1) as f64).round() as usize
            }
        })
        .collect();
    ks.dedup();
    ks.into_iter()
        .map(|k| {
            if k == n {
                upper
            } else {
                lower + k as f64 * delta
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub alg_objective: f64,
    pub opt_objective: f64,
    pub ratio: f64,
}

/// Sweep parameters shared by every grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub direction: Direction,
    #[serde(rename = "L")]
    pub lower: f64,
    #[serde(rename = "U")]
    pub upper: f64,
    pub beta: f64,
    pub n: usize,
    pub m: usize,
    pub points: usize,
}

/// Empirical ratio of `algorithm` on each family member. Rows are sorted by `x`.
pub fn cr_sweep<F>(config: &SweepConfig, algorithm: F) -> Result<Vec<SweepRow>>
where
    F: Fn(&Instance) -> Result<Schedule> + Sync,
{
    let targets = target_grid(config.lower, config.upper, config.n, config.points);
    let mut rows = targets
        .par_iter()
        .map(|&x| {
            let spec = AdversarialSpec {
                direction: config.direction,
                x,
                n: config.n,
                m: config.m,
                lower: config.lower,
                upper: config.upper,
                beta: config.beta,
            };
            let inst = generate(&spec)?;
            let alg = evaluate(&inst, &algorithm(&inst)?)?;
            if !alg.feasible {
                return Err(OcsError::Solver(format!("algorithm infeasible at x = {x}")));
            }
            let opt = solve_offline(&inst)?.objective();
            Ok(SweepRow {
                x,
                alg_objective: alg.objective,
                opt_objective: opt,
                ratio: config.direction.ratio(alg.objective, opt),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(rows)
}

/// Writes sweep rows as CSV with a header.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Shape of random test instances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomInstanceConfig {
    pub direction: Direction,
    pub horizon: usize,
    #[serde(rename = "L")]
    pub lower: f64,
    #[serde(rename = "U")]
    pub upper: f64,
    pub beta: f64,
    /// Most pieces per pricing function.
    pub max_pieces: usize,
    /// Draw rate limits in `[0.1, 1]` instead of using `d = 1`.
    pub random_rates: bool,
}

impl RandomInstanceConfig {
    pub fn new(direction: Direction, horizon: usize, lower: f64, upper: f64, beta: f64) -> Self {
        Self {
            direction,
            horizon,
            lower,
            upper,
            beta,
            max_pieces: 3,
            random_rates: true,
        }
    }
}

/// Random piecewise-linear instance with slopes in `[L, U]`, convex when
/// minimizing and concave when maximizing. Rates are rescaled if needed so
/// that they cover the demand.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    config: &RandomInstanceConfig,
) -> Result<Instance> {
    if config.horizon == 0 || config.max_pieces == 0 {
        return Err(OcsError::Parameter(
            "horizon and max_pieces must be at least 1".into(),
        ));
    }
    let mut pricing = Vec::with_capacity(config.horizon);
    for _ in 0..config.horizon {
        let k = rng.gen_range(1..=config.max_pieces);
        let mut slopes: Vec<f64> = (0..k)
            .map(|_| rng.gen_range(config.lower..=config.upper))
            .collect();
        slopes.sort_by(f64::total_cmp);
        if config.direction == Direction::Maximize {
            slopes.reverse();
        }
        let mut starts: Vec<f64> = (1..k).map(|_| rng.gen_range(0.05..0.95)).collect();
        starts.sort_by(f64::total_cmp);
        starts.dedup_by(|a, b| *a - *b < 1e-3);
        starts.insert(0, 0.0);
        let segments = starts.into_iter().zip(slopes);
        pricing.push(PricingFunction::new(segments)?);
    }
    let mut rates: Vec<f64> = if config.random_rates {
        (0..config.horizon)
            .map(|_| rng.gen_range(0.1..=1.0))
            .collect()
    } else {
        vec![1.0; config.horizon]
    };
    let total: f64 = rates.iter().sum();
    if total < 1.25 {
        let scale = 1.25 / total;
        rates.iter_mut().for_each(|d| *d = (*d * scale).min(1.0));
    }
    if rates.iter().sum::<f64>() < 1.0 {
        rates = vec![1.0; config.horizon];
    }
    Instance::new(
        config.direction,
        config.beta,
        config.lower,
        config.upper,
        rates,
        pricing,
    )
}
