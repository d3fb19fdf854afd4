//! Offline oracles: the hindsight optimum, a grid brute force for small
//! instances, and the objective-worst feasible schedule.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OcsError, Result};
use crate::model::{
    evaluate, suffix_capacity, Direction, Instance, Schedule, SolutionReport, RATE_TOL, SUM_TOL,
};

/// Largest horizon accepted by [`brute_force`].
pub const BRUTE_MAX_T: usize = 8;
/// Largest grid resolution accepted by [`brute_force`].
pub const BRUTE_MAX_K: usize = 20;
/// Vertex budget for exhaustive worst-case search.
pub const VERTEX_LIMIT: usize = 200_000;
/// Seed for the multi-start worst-case search.
pub const WORST_SEED: u64 = 0x05ee_d0c5;

const TIE_BREAK: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Linear program over segment allocations and switching epigraphs.
    ExactLp,
    /// Exhaustive search over a `1/K` grid.
    Discretized,
    /// Exhaustive search over polytope vertices.
    VertexEnumeration,
    /// Dynamic program over vertices when every rate limit is equal.
    VertexDp,
    /// Multi-start local search over vertices; not certified.
    LocalSearch,
}

impl Method {
    /// Whether the result is a proven optimum of its search space.
    pub fn certified(self) -> bool {
        !matches!(self, Method::LocalSearch)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfflineResult {
    pub schedule: Schedule,
    pub report: SolutionReport,
    pub method: Method,
}

impl OfflineResult {
    pub fn objective(&self) -> f64 {
        self.report.objective
    }

    pub fn certified(&self) -> bool {
        self.method.certified()
    }

    fn new(instance: &Instance, schedule: Schedule, method: Method) -> Result<Self> {
        let report = evaluate(instance, &schedule)?;
        if !report.feasible {
            return Err(OcsError::Solver(format!(
                "{method:?} returned an infeasible schedule"
            )));
        }
        Ok(Self {
            schedule,
            report,
            method,
        })
    }
}

/// Hindsight-optimal schedule via linear programming.
///
/// Costs are scaled by `1/U` for conditioning. Among optimal schedules the
/// one trading earliest is preferred through a tiny time-increasing penalty.
pub fn solve_offline(instance: &Instance) -> Result<OfflineResult> {
    let horizon = instance.horizon();
    let scale = 1.0 / instance.upper();
    let sign = instance.direction().sign();
    let beta = instance.beta() * scale;
    let mut lp = Problem::new(OptimizationDirection::Minimize);

    // x_t is the sum of its segment allocations; x_t - x_{t-1} = up_t - down_t.
    let mut segs: Vec<Vec<microlp::Variable>> = Vec::with_capacity(horizon);
    for (t, (g, &d)) in instance.pricing().iter().zip(instance.rates()).enumerate() {
        let tilt = TIE_BREAK * t as f64 / horizon as f64;
        let cap = d.min(1.0);
        let vars: Vec<_> = g
            .pieces()
            .map(|(a, b, c)| lp.add_var(sign * c * scale + tilt, (0.0, (b - a).min(cap))))
            .collect();
        if vars.len() > 1 && cap < 1.0 {
            let row: Vec<_> = vars.iter().map(|&y| (y, 1.0)).collect();
            lp.add_constraint(row.as_slice(), ComparisonOp::Le, cap);
        }
        segs.push(vars);
    }
    for t in 0..=horizon {
        let up = lp.add_var(beta, (0.0, f64::INFINITY));
        let down = lp.add_var(beta, (0.0, f64::INFINITY));
        let mut row = vec![(up, -1.0), (down, 1.0)];
        if t < horizon {
            row.extend(segs[t].iter().map(|&y| (y, 1.0)));
        }
        if t > 0 {
            row.extend(segs[t - 1].iter().map(|&y| (y, -1.0)));
        }
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, 0.0);
    }
    let total: Vec<_> = segs.iter().flatten().map(|&y| (y, 1.0)).collect();
    lp.add_constraint(total.as_slice(), ComparisonOp::Eq, 1.0);

    let solution = match lp.solve() {
        Ok(outcome) => outcome
            .into_solution()
            .map_err(|e| OcsError::Solver(format!("LP interrupted: {e:?}")))?,
        Err(microlp::Error::Infeasible) => {
            return Err(OcsError::Infeasible(
                "offline program has no feasible point".into(),
            ))
        }
        Err(e) => return Err(OcsError::Solver(format!("LP failed: {e}"))),
    };
    let raw: Vec<f64> = segs
        .iter()
        .map(|ys| ys.iter().map(|&y| solution.var_value(y)).sum())
        .collect();
    let schedule = repair(instance.rates(), raw)?;
    OfflineResult::new(instance, schedule, Method::ExactLp)
}

/// Clamps solver round-off into the box and restores `sum(x) = 1`.
fn repair(rates: &[f64], mut x: Vec<f64>) -> Result<Schedule> {
    for (v, &d) in x.iter_mut().zip(rates) {
        *v = v.clamp(0.0, d);
    }
    let mut gap = 1.0 - x.iter().sum::<f64>();
    if gap.abs() > 1e-6 {
        return Err(OcsError::Solver(format!(
            "LP solution misses the demand by {gap}"
        )));
    }
    for (v, &d) in x.iter_mut().zip(rates) {
        if gap == 0.0 {
            break;
        }
        let next = (*v + gap).clamp(0.0, d);
        gap -= next - *v;
        *v = next;
    }
    Ok(Schedule::new(x))
}

/// Exhaustive search over schedules with entries in `{0, 1/K, ..., 1}`.
///
/// Ties go to the schedule that trades earliest.
pub fn brute_force(instance: &Instance, grid: usize) -> Result<OfflineResult> {
    let horizon = instance.horizon();
    if horizon > BRUTE_MAX_T || grid > BRUTE_MAX_K || grid == 0 {
        return Err(OcsError::Refused(format!(
            "brute force limited to T <= {BRUTE_MAX_T}, 1 <= K <= {BRUTE_MAX_K} (got T = {horizon}, K = {grid})"
        )));
    }
    let caps: Vec<usize> = instance
        .rates()
        .iter()
        .map(|&d| ((d + RATE_TOL) * grid as f64).floor() as usize)
        .collect();
    let better = better_fn(instance.direction(), false);
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut ks = vec![0usize; horizon];

    fn recurse(
        t: usize,
        left: usize,
        caps: &[usize],
        ks: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if t + 1 == ks.len() {
            if left <= caps[t] {
                ks[t] = left;
                visit(ks);
            }
            return;
        }
        let room: usize = caps[t + 1..].iter().sum();
        for k in (0..=left.min(caps[t])).rev() {
            if left - k > room {
                break;
            }
            ks[t] = k;
            recurse(t + 1, left - k, caps, ks, visit);
        }
    }

    let mut visit = |ks: &[usize]| {
        let x = Schedule::new(ks.iter().map(|&k| k as f64 / grid as f64).collect());
        let obj = evaluate(instance, &x)
            .map(|r| r.objective)
            .unwrap_or(f64::NAN);
        if best.as_ref().is_none_or(|(_, b)| better(obj, *b)) {
            best = Some((ks.to_vec(), obj));
        }
    };
    recurse(0, grid, &caps, &mut ks, &mut visit);
    let (ks, _) = best.ok_or_else(|| {
        OcsError::Infeasible(format!(
            "no schedule on the 1/{grid} grid meets the rate limits"
        ))
    })?;
    let x = Schedule::new(ks.iter().map(|&k| k as f64 / grid as f64).collect());
    OfflineResult::new(instance, x, Method::Discretized)
}

/// Strict improvement test: lower objective when minimizing, higher when
/// maximizing; `worst` flips the sense.
fn better_fn(direction: Direction, worst: bool) -> impl Fn(f64, f64) -> bool {
    let lower_is_better = matches!(direction, Direction::Minimize) != worst;
    move |cand, incumbent| {
        if lower_is_better {
            cand < incumbent
        } else {
            cand > incumbent
        }
    }
}

/// Feasible schedule with the worst objective (highest cost or lowest profit).
///
/// The objective is convex (min) or concave (max), so its worst value over
/// `{sum x = 1, 0 <= x <= d}` sits at a vertex: every coordinate at 0 or
/// `d_t` except at most one. Vertices are enumerated when their number is
/// below [`VERTEX_LIMIT`] or solved exactly by dynamic programming when all
/// rate limits are equal; otherwise a seeded multi-start local search is used
/// and the result is flagged as uncertified.
pub fn solve_worst(instance: &Instance) -> Result<OfflineResult> {
    if let Some(x) = uniform_rate_dp(instance)? {
        return OfflineResult::new(instance, x, Method::VertexDp);
    }
    match enumerate_vertices(instance)? {
        Some(x) => OfflineResult::new(instance, x, Method::VertexEnumeration),
        None => {
            let x = local_search_worst(instance, WORST_SEED, 4)?;
            OfflineResult::new(instance, x, Method::LocalSearch)
        }
    }
}

/// With a common rate `d`, every vertex has `K = floor(1/d)` coordinates at
/// `d` and possibly one at `r = 1 - K d`. A backward value-to-go over
/// `(t, full left, fractional left, previous level)` finds the worst one.
/// Returns `None` when rates differ.
fn uniform_rate_dp(instance: &Instance) -> Result<Option<Schedule>> {
    let rates = instance.rates();
    let d = rates[0];
    if rates.iter().any(|&r| r != d) {
        return Ok(None);
    }
    let horizon = rates.len();
    let full = (((1.0 + SUM_TOL) / d).floor() as usize).min(horizon);
    let mut rest = 1.0 - full as f64 * d;
    if rest.abs() <= SUM_TOL {
        rest = 0.0;
    }
    let fracs = usize::from(rest > 0.0);
    if full + fracs > horizon || rest < 0.0 {
        return Err(OcsError::Infeasible("rates cannot cover demand".into()));
    }
    let levels = [d, rest, 0.0];
    let sign = instance.direction().sign();
    let beta = instance.beta();
    let g = instance.pricing();
    let gain: Vec<[f64; 3]> = g
        .iter()
        .map(|g| [sign * g.value(levels[0]), sign * g.value(levels[1]), 0.0])
        .collect();

    // value[t][k][f][p]: best signed worst-objective of steps t.. given k full
    // and f fractional slots left and previous level p.
    let idx = |k: usize, f: usize, p: usize| (k * 2 + f) * 3 + p;
    let width = (full + 1) * 2 * 3;
    let mut value = vec![f64::NEG_INFINITY; (horizon + 1) * width];
    for p in 0..3 {
        value[horizon * width + idx(0, 0, p)] = beta * levels[p];
    }
    for t in (0..horizon).rev() {
        for k in 0..=full {
            for f in 0..=fracs {
                for p in 0..3 {
                    let mut best = f64::NEG_INFINITY;
                    for (v, need) in [(0, (1, 0)), (1, (0, 1)), (2, (0, 0))] {
                        if k < need.0 || f < need.1 {
                            continue;
                        }
                        let next = value[(t + 1) * width + idx(k - need.0, f - need.1, v)];
                        let cand = gain[t][v] + beta * (levels[v] - levels[p]).abs() + next;
                        best = best.max(cand);
                    }
                    value[t * width + idx(k, f, p)] = best;
                }
            }
        }
    }
    if value[idx(full, fracs, 2)] == f64::NEG_INFINITY {
        return Err(OcsError::Infeasible("rates cannot cover demand".into()));
    }
    // Forward reconstruction; near-ties prefer trading now.
    let mut x = vec![0.0; horizon];
    let (mut k, mut f, mut p) = (full, fracs, 2);
    for t in 0..horizon {
        let target = value[t * width + idx(k, f, p)];
        let slack = 1e-12 * (1.0 + target.abs());
        for (v, need) in [(0, (1, 0)), (1, (0, 1)), (2, (0, 0))] {
            if k < need.0 || f < need.1 {
                continue;
            }
            let next = value[(t + 1) * width + idx(k - need.0, f - need.1, v)];
            let cand = gain[t][v] + beta * (levels[v] - levels[p]).abs() + next;
            if cand >= target - slack {
                x[t] = levels[v];
                k -= need.0;
                f -= need.1;
                p = v;
                break;
            }
        }
    }
    Ok(Some(Schedule::new(x)))
}

/// Exhaustive vertex search, or `None` if the budget is exceeded.
fn enumerate_vertices(instance: &Instance) -> Result<Option<Schedule>> {
    let rates = instance.rates();
    let horizon = rates.len();
    let worse = better_fn(instance.direction(), true);
    let mut x = vec![0.0; horizon];
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut visited = 0usize;

    struct Search<'a> {
        rates: &'a [f64],
        suffix: &'a [f64],
        max_rate: f64,
        visited: &'a mut usize,
        exhausted: bool,
    }

    // Walks subsets of full coordinates in index order (including before
    // excluding), calling `leaf` with the full set marked in `x`.
    fn walk(
        s: &mut Search<'_>,
        t: usize,
        used: f64,
        x: &mut Vec<f64>,
        leaf: &mut dyn FnMut(&mut Vec<f64>, f64),
    ) {
        if s.exhausted {
            return;
        }
        *s.visited += 1;
        if *s.visited > VERTEX_LIMIT {
            s.exhausted = true;
            return;
        }
        if t == s.rates.len() || 1.0 - used <= SUM_TOL {
            leaf(x, used);
            return;
        }
        // One excluded coordinate may still carry a fractional remainder.
        if used + s.suffix[t] + s.max_rate < 1.0 - SUM_TOL {
            return;
        }
        let d = s.rates[t];
        if used + d <= 1.0 + SUM_TOL {
            x[t] = d;
            walk(s, t + 1, used + d, x, leaf);
            x[t] = 0.0;
        }
        walk(s, t + 1, used, x, leaf);
    }

    let mut leaf = |x: &mut Vec<f64>, used: f64| {
        let rest = 1.0 - used;
        let mut consider = |x: &Vec<f64>| {
            let obj = evaluate(instance, &Schedule::new(x.clone()))
                .map(|r| r.objective)
                .unwrap_or(f64::NAN);
            if best.as_ref().is_none_or(|(_, b)| worse(obj, *b)) {
                best = Some((x.clone(), obj));
            }
        };
        if rest.abs() <= SUM_TOL {
            consider(x);
            return;
        }
        for f in 0..x.len() {
            if x[f] == 0.0 && rates[f] >= rest - RATE_TOL {
                x[f] = rest.min(rates[f]);
                consider(x);
                x[f] = 0.0;
            }
        }
    };

    let suffix = suffix_capacity(rates);
    let mut search = Search {
        rates,
        suffix: &suffix,
        max_rate: rates.iter().copied().fold(0.0, f64::max),
        visited: &mut visited,
        exhausted: false,
    };
    walk(&mut search, 0, 0.0, &mut x, &mut leaf);
    if search.exhausted {
        return Ok(None);
    }
    match best {
        Some((x, _)) => Ok(Some(Schedule::new(x))),
        None => Err(OcsError::Infeasible(
            "no vertex of the feasible set found".into(),
        )),
    }
}

/// Objective terms touched by changing coordinates `i` and `j`.
fn local_terms(instance: &Instance, x: &[f64], i: usize, j: usize) -> f64 {
    let g = instance.pricing();
    let horizon = x.len();
    let at = |t: usize| if t < horizon { x[t] } else { 0.0 };
    let before = |t: usize| if t == 0 { 0.0 } else { x[t - 1] };
    let mut edges = [i, i + 1, j, j + 1];
    edges.sort_unstable();
    let mut switch = 0.0;
    let mut last = usize::MAX;
    for e in edges {
        if e != last {
            switch += (at(e) - before(e)).abs();
            last = e;
        }
    }
    let trade = g[i].value(x[i]) + if i != j { g[j].value(x[j]) } else { 0.0 };
    trade + instance.direction().sign() * instance.beta() * switch
}

/// Greedy fill in permutation order, then first-improvement mass transfers
/// between pairs of coordinates.
fn local_search_worst(instance: &Instance, seed: u64, starts: usize) -> Result<Schedule> {
    let rates = instance.rates();
    let horizon = rates.len();
    let sign = instance.direction().sign();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;

    for start in 0..starts {
        let mut order: Vec<usize> = (0..horizon).collect();
        match start {
            // Most expensive (min) or least profitable (max) average price first.
            0 => {
                let avg: Vec<f64> = (0..horizon)
                    .map(|t| sign * instance.pricing()[t].value(rates[t]) / rates[t])
                    .collect();
                order.sort_by(|&a, &b| avg[b].total_cmp(&avg[a]));
            }
            1 => {}
            2 => order.reverse(),
            _ => order.shuffle(&mut rng),
        }
        let mut x = vec![0.0; horizon];
        let mut left = 1.0;
        for &t in &order {
            let take = rates[t].min(left);
            x[t] = take;
            left -= take;
            if left <= 0.0 {
                break;
            }
        }
        if left > SUM_TOL {
            return Err(OcsError::Infeasible("rates cannot cover demand".into()));
        }

        for _pass in 0..64 {
            let mut improved = false;
            for i in 0..horizon {
                if x[i] == 0.0 {
                    continue;
                }
                for j in 0..horizon {
                    if j == i || x[j] >= rates[j] {
                        continue;
                    }
                    let amount = x[i].min(rates[j] - x[j]);
                    let old = local_terms(instance, &x, i, j);
                    let (xi, xj) = (x[i], x[j]);
                    x[i] = xi - amount;
                    x[j] = xj + amount;
                    let new = local_terms(instance, &x, i, j);
                    // Worse means larger signed objective.
                    if sign * (new - old) > 1e-12 {
                        improved = true;
                        if x[i] == 0.0 {
                            break;
                        }
                    } else {
                        x[i] = xi;
                        x[j] = xj;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        let obj = evaluate(instance, &Schedule::new(x.clone()))?.objective;
        if best.as_ref().is_none_or(|(_, b)| sign * obj > sign * *b) {
            best = Some((x, obj));
        }
    }
    let (x, _) = best.expect("at least one start");
    Ok(Schedule::new(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PricingFunction;

    fn linear(
        dir: Direction,
        slopes: &[f64],
        beta: f64,
        l: f64,
        u: f64,
        rates: Vec<f64>,
    ) -> Instance {
        let g = slopes
            .iter()
            .map(|&c| PricingFunction::linear(c).unwrap())
            .collect();
        Instance::new(dir, beta, l, u, rates, g).unwrap()
    }

    #[test]
    fn identical_slopes_spread_evenly() {
        let inst = linear(Direction::Minimize, &[3.0; 5], 0.5, 1.0, 5.0, vec![1.0; 5]);
        let r = solve_offline(&inst).unwrap();
        assert!((r.objective() - (3.0 + 2.0 * 0.5 / 5.0)).abs() < 1e-7);
        assert!(r.schedule.iter().all(|&x| (x - 0.2).abs() < 1e-7));
    }

    #[test]
    fn single_step_is_forced() {
        let inst = linear(Direction::Minimize, &[2.5], 0.3, 1.0, 3.0, vec![1.0]);
        let lp = solve_offline(&inst).unwrap();
        assert!((lp.objective() - 3.1).abs() < 1e-12);
        let bf = brute_force(&inst, 4).unwrap();
        assert_eq!(bf.schedule, lp.schedule);
        assert_eq!(solve_worst(&inst).unwrap().schedule, lp.schedule);
    }

    #[test]
    fn brute_force_small_case() {
        let inst = linear(
            Direction::Minimize,
            &[1.0, 3.0],
            0.1,
            1.0,
            3.0,
            vec![1.0; 2],
        );
        let r = brute_force(&inst, 2).unwrap();
        assert_eq!(r.schedule.as_slice(), &[1.0, 0.0]);
        assert!((r.objective() - 1.2).abs() < 1e-12);
        assert!(matches!(brute_force(&inst, 21), Err(OcsError::Refused(_))));
    }

    #[test]
    fn worst_concentrates() {
        let inst = linear(Direction::Minimize, &[2.0; 4], 0.4, 1.0, 3.0, vec![1.0; 4]);
        let r = solve_worst(&inst).unwrap();
        assert_eq!(r.schedule.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        assert!((r.objective() - 2.8).abs() < 1e-12);
        let inst = linear(
            Direction::Minimize,
            &[1.0, 5.0, 1.0],
            0.0,
            1.0,
            5.0,
            vec![1.0; 3],
        );
        assert_eq!(
            solve_worst(&inst).unwrap().schedule.as_slice(),
            &[0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn maximize_lp_and_worst() {
        let inst = linear(
            Direction::Maximize,
            &[2.0, 4.0, 3.0],
            0.25,
            2.0,
            4.0,
            vec![0.5; 3],
        );
        let best = solve_offline(&inst).unwrap();
        let bf = brute_force(&inst, 20).unwrap();
        assert!(best.objective() >= bf.objective() - 1e-9);
        let worst = solve_worst(&inst).unwrap();
        assert!(worst.objective() <= bf.objective());
    }

    #[test]
    fn dp_matches_enumeration() {
        for (dir, l, u, beta) in [
            (Direction::Minimize, 1.0, 3.0, 0.3),
            (Direction::Maximize, 2.0, 4.0, 0.4),
        ] {
            for d in [1.0, 0.5, 0.3, 0.25] {
                let slopes = [1.5, 2.5, 2.2, 2.9, 2.0, 2.1, 2.4];
                let inst = linear(dir, &slopes, beta, l, u, vec![d; slopes.len()]);
                let a = uniform_rate_dp(&inst).unwrap().unwrap();
                let b = enumerate_vertices(&inst).unwrap().unwrap();
                let (ea, eb) = (evaluate(&inst, &a).unwrap(), evaluate(&inst, &b).unwrap());
                assert!(ea.feasible);
                assert!(
                    (ea.objective - eb.objective).abs() < 1e-12,
                    "{dir:?} {d} {a:?} {b:?} {} {}",
                    ea.objective,
                    eb.objective
                );
            }
        }
    }

    #[test]
    fn local_search_matches_enumeration_on_small_cases() {
        let inst = linear(
            Direction::Minimize,
            &[1.5, 2.5, 1.2, 2.9, 2.0, 1.1],
            0.3,
            1.0,
            3.0,
            vec![0.3, 0.6, 0.5, 0.2, 0.4, 0.7],
        );
        let exact = enumerate_vertices(&inst).unwrap().unwrap();
        assert!(uniform_rate_dp(&inst).unwrap().is_none());
        let approx = local_search_worst(&inst, WORST_SEED, 8).unwrap();
        let e = evaluate(&inst, &exact).unwrap().objective;
        let a = evaluate(&inst, &approx).unwrap().objective;
        assert!(a <= e + 1e-12);
        assert!(a >= e - 0.5);
    }
}
