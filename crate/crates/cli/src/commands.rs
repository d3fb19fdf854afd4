//! Subcommand implementations.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ocs::adversarial::{self, RandomInstanceConfig, SweepConfig};
use ocs::advice::{self, blend_advice, bounds_check, ro_advice_run, AdviceVector, TrustParams};
use ocs::evcharge::{self, CarbonSeries, SessionInstance, SolarSeries};
use ocs::offline::{brute_force, solve_offline, solve_worst, OfflineResult};
use ocs::roro::{roro_run, roro_run_with, SolverMode};
use ocs::{evaluate, Direction, Instance, Schedule, SolutionReport, ThresholdParams};

use crate::stats::{max, mean, percentile};
use crate::{CliError, Kind, Manifest};

/// Names accepted by `solve --algorithm`.
pub const ALGORITHMS: &[&str] = &[
    "roro",
    "roro-golden",
    "owt",
    "ro-advice",
    "carbon-agnostic",
    "simple-threshold",
    "offline",
];

/// Objectives at or below this are treated as zero when forming ratios.
const ZERO_OPT: f64 = 1e-9;

pub fn run(m: &Manifest) -> Result<(), CliError> {
    let kind = m.kind.ok_or_else(|| {
        CliError::usage(
            "missing-kind",
            "give a subcommand or a manifest with `kind`",
        )
    })?;
    check_inputs(m)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(m.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::usage("bad-workers", e.to_string()))?;
    info!("running {kind} on {} worker(s)", pool.current_num_threads());
    pool.install(|| match kind {
        Kind::Solve => cmd_solve(m),
        Kind::Offline => cmd_offline(m),
        Kind::CrSweep => {
            let rows = cr_sweep_rows(m)?;
            write_output(m.out.as_deref(), &csv_bytes(&rows)?)
        }
        Kind::AdviceSweep => {
            let cells = advice_sweep(m)?;
            write_output(m.out.as_deref(), &csv_bytes(&cells)?)
        }
        Kind::Evcharge => cmd_evcharge(m),
    })
}

/// Every referenced input file must exist before anything runs.
fn check_inputs(m: &Manifest) -> Result<(), CliError> {
    let inputs = [
        &m.instance,
        &m.advice,
        &m.instances,
        &m.carbon,
        &m.solar,
        &m.sessions,
    ];
    for path in inputs.into_iter().flatten() {
        if !path.is_file() {
            return Err(CliError::usage(
                "missing-input",
                format!("{} does not exist", path.display()),
            ));
        }
    }
    Ok(())
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, bytes)?;
            info!("wrote {}", path.display());
        }
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner()
        .map_err(|e| CliError::from(std::io::Error::other(e.to_string())))
}

fn read_instance(path: &Path) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn first<T: Copy>(v: &Option<Vec<T>>) -> Option<T> {
    v.as_ref().and_then(|v| v.first().copied())
}

fn ratio_of(instance: &Instance) -> Result<f64, CliError> {
    Ok(ThresholdParams::new(
        instance.direction(),
        instance.lower(),
        instance.upper(),
        instance.beta(),
    )?
    .ratio())
}

/// One entry of a trust grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Trust {
    Lambda(f64),
    Epsilon(f64),
    /// Fraction of `ratio - 1`.
    EpsilonFrac(f64),
}

impl Trust {
    pub fn label(&self) -> &'static str {
        match self {
            Trust::Lambda(_) => "lambda",
            Trust::Epsilon(_) => "epsilon",
            Trust::EpsilonFrac(_) => "epsilon-frac",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Trust::Lambda(v) | Trust::Epsilon(v) | Trust::EpsilonFrac(v) => v,
        }
    }

    pub fn resolve(&self, direction: Direction, ratio: f64) -> Result<TrustParams, CliError> {
        Ok(match *self {
            Trust::Lambda(l) => TrustParams::from_lambda(direction, ratio, l)?,
            Trust::Epsilon(e) => TrustParams::new(direction, ratio, e)?,
            Trust::EpsilonFrac(f) => TrustParams::new(direction, ratio, f * (ratio - 1.0))?,
        })
    }
}

/// Trust grid from the manifest: lambdas, then absolute epsilons, then
/// fractional epsilons; `default` when none is given.
fn trust_grid(m: &Manifest, default: Vec<Trust>) -> Vec<Trust> {
    let mut out = Vec::new();
    out.extend(m.lambda.iter().flatten().map(|&v| Trust::Lambda(v)));
    out.extend(m.epsilon.iter().flatten().map(|&v| Trust::Epsilon(v)));
    out.extend(
        m.epsilon_frac
            .iter()
            .flatten()
            .map(|&v| Trust::EpsilonFrac(v)),
    );
    if out.is_empty() {
        default
    } else {
        out
    }
}

fn check_algorithm(algorithm: &str) -> Result<(), CliError> {
    if ALGORITHMS.contains(&algorithm) {
        return Ok(());
    }
    Err(CliError::usage(
        "unknown-algorithm",
        format!("`{algorithm}`; expected one of {}", ALGORITHMS.join(", ")),
    ))
}

/// Result of `solve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub algorithm: String,
    pub schedule: Schedule,
    pub report: SolutionReport,
    pub opt_objective: f64,
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

pub fn solve_instance(
    instance: &Instance,
    algorithm: &str,
    advice: Option<&AdviceVector>,
    trust: Trust,
) -> Result<SolveOutput, CliError> {
    check_algorithm(algorithm)?;
    let mut trust_used = None;
    let schedule = match algorithm {
        "roro" => roro_run(instance)?,
        "roro-golden" => roro_run_with(instance, SolverMode::GoldenSection)?,
        "owt" => evcharge::owt_algorithm(instance)?,
        "carbon-agnostic" => evcharge::carbon_agnostic(instance)?,
        "simple-threshold" => {
            if instance.direction() != Direction::Minimize {
                return Err(CliError::usage(
                    "unsupported-direction",
                    "simple-threshold is defined for minimization",
                ));
            }
            evcharge::simple_threshold(instance)?
        }
        "offline" => solve_offline(instance)?.schedule,
        _ => {
            let advice = advice.ok_or_else(|| {
                CliError::usage("missing-advice", "ro-advice needs --advice <file>")
            })?;
            let t = trust.resolve(instance.direction(), ratio_of(instance)?)?;
            trust_used = Some(t);
            ro_advice_run(instance, advice, &t)?
        }
    };
    let report = evaluate(instance, &schedule)?;
    let opt = solve_offline(instance)?.objective();
    Ok(SolveOutput {
        algorithm: algorithm.to_string(),
        ratio: instance.direction().ratio(report.objective, opt),
        schedule,
        report,
        opt_objective: opt,
        lambda: trust_used.map(|t| t.lambda),
        epsilon: trust_used.map(|t| t.epsilon),
    })
}

fn cmd_solve(m: &Manifest) -> Result<(), CliError> {
    let algorithm = m.algorithm.as_deref().unwrap_or("roro");
    check_algorithm(algorithm)?;
    if algorithm == "ro-advice" && m.advice.is_none() {
        return Err(CliError::usage(
            "missing-advice",
            "ro-advice needs --advice <file>",
        ));
    }
    let path = m
        .instance
        .as_deref()
        .ok_or_else(|| CliError::usage("missing-input", "solve needs --instance <file>"))?;
    let instance = read_instance(path)?;
    let advice = match &m.advice {
        Some(p) => Some(AdviceVector::from_json(&std::fs::read_to_string(p)?)?),
        None => None,
    };
    let trust = trust_grid(m, vec![Trust::Lambda(0.5)])[0];
    let out = solve_instance(&instance, algorithm, advice.as_ref(), trust)?;
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    write_output(m.out.as_deref(), text.as_bytes())
}

fn cmd_offline(m: &Manifest) -> Result<(), CliError> {
    let path = m
        .instance
        .as_deref()
        .ok_or_else(|| CliError::usage("missing-input", "offline needs --instance <file>"))?;
    let instance = read_instance(path)?;
    let result: OfflineResult = match m.method.as_deref().unwrap_or("lp") {
        "lp" => solve_offline(&instance)?,
        "worst" => solve_worst(&instance)?,
        "brute" => brute_force(&instance, m.grid.unwrap_or(10))?,
        other => {
            return Err(CliError::usage(
                "unknown-method",
                format!("`{other}`; expected lp, worst or brute"),
            ))
        }
    };
    let mut text = serde_json::to_string_pretty(&result)?;
    text.push('\n');
    write_output(m.out.as_deref(), text.as_bytes())
}

/// One row of `cr-sweep` output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrRow {
    pub direction: Direction,
    #[serde(rename = "L")]
    pub lower: f64,
    #[serde(rename = "U")]
    pub upper: f64,
    pub beta: f64,
    pub x: f64,
    pub alg_objective: f64,
    pub opt_objective: f64,
    pub ratio: f64,
    pub bound: f64,
}

pub fn cr_sweep_rows(m: &Manifest) -> Result<Vec<CrRow>, CliError> {
    let direction = m.direction.unwrap_or(Direction::Minimize);
    let lower = m.lower.unwrap_or(1.0);
    let upper = m.upper.unwrap_or(2.0);
    let betas = m.beta.clone().unwrap_or_else(|| vec![0.0]);
    let algorithm = m.algorithm.as_deref().unwrap_or("roro");
    let run_alg: fn(&Instance) -> ocs::Result<Schedule> = match algorithm {
        "roro" => roro_run,
        "roro-golden" => |i| roro_run_with(i, SolverMode::GoldenSection),
        "owt" => evcharge::owt_algorithm,
        other => {
            return Err(CliError::usage(
                "unknown-algorithm",
                format!("`{other}`; cr-sweep supports roro, roro-golden, owt"),
            ))
        }
    };
    let mut rows = Vec::new();
    for &beta in &betas {
        let bound = ThresholdParams::new(direction, lower, upper, beta)?.ratio();
        let config = SweepConfig {
            direction,
            lower,
            upper,
            beta,
            n: m.n.unwrap_or(200),
            m: m.m.unwrap_or(20),
            points: m.points.unwrap_or(50),
        };
        info!("cr-sweep {direction} L={lower} U={upper} beta={beta}");
        for r in adversarial::cr_sweep(&config, run_alg)? {
            rows.push(CrRow {
                direction,
                lower,
                upper,
                beta,
                x: r.x,
                alg_objective: r.alg_objective,
                opt_objective: r.opt_objective,
                ratio: r.ratio,
                bound,
            });
        }
    }
    rows.sort_by(|a, b| a.beta.total_cmp(&b.beta).then(a.x.total_cmp(&b.x)));
    Ok(rows)
}

/// Aggregate of one `(zeta, trust)` cell of an advice sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdviceCell {
    pub zeta: f64,
    pub trust: String,
    pub trust_value: f64,
    pub lambda_mean: f64,
    pub epsilon_mean: f64,
    pub instances: usize,
    pub mean_ratio: f64,
    pub p95_ratio: f64,
    pub max_ratio: f64,
    /// Largest `ratio - (1 + epsilon)` over instances.
    pub consistency_slack: f64,
    /// Largest `ratio - robustness bound` over instances.
    pub robustness_slack: f64,
}

struct AdviceSample {
    ratio: f64,
    lambda: f64,
    epsilon: f64,
    robustness: f64,
}

fn advice_instances(m: &Manifest) -> Result<Vec<Instance>, CliError> {
    if let Some(path) = &m.instances {
        let text = std::fs::read_to_string(path)?;
        return Ok(serde_json::from_str(&text)?);
    }
    let seed = m
        .seed
        .ok_or_else(|| CliError::usage("missing-seed", "random instances need --seed"))?;
    let config = RandomInstanceConfig::new(
        m.direction.unwrap_or(Direction::Minimize),
        m.horizon.unwrap_or(24),
        m.lower.unwrap_or(1.0),
        m.upper.unwrap_or(3.0),
        first(&m.beta).unwrap_or(0.1),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m.count.unwrap_or(100))
        .map(|_| Ok(adversarial::random_instance(&mut rng, &config)?))
        .collect()
}

/// Cross product of the zeta grid and the trust grid.
pub fn advice_sweep(m: &Manifest) -> Result<Vec<AdviceCell>, CliError> {
    let instances = advice_instances(m)?;
    let zetas = m
        .zeta_grid
        .clone()
        .unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    let trusts = trust_grid(
        m,
        [0.0, 0.25, 0.5, 0.75, 1.0]
            .into_iter()
            .map(Trust::EpsilonFrac)
            .collect(),
    );
    info!(
        "advice-sweep over {} instances, {} zeta x {} trust cells",
        instances.len(),
        zetas.len(),
        trusts.len()
    );
    let per_instance: Vec<Vec<AdviceSample>> = instances
        .par_iter()
        .map(|inst| -> Result<Vec<AdviceSample>, CliError> {
            let direction = inst.direction();
            let ratio = ratio_of(inst)?;
            let opt = solve_offline(inst)?;
            let worst = solve_worst(inst)?.schedule;
            let mut samples = Vec::with_capacity(zetas.len() * trusts.len());
            for &zeta in &zetas {
                let advice = blend_advice(&opt.schedule, &worst, zeta)?;
                for trust in &trusts {
                    let t = trust.resolve(direction, ratio)?;
                    let x = ro_advice_run(inst, &advice, &t)?;
                    let alg = evaluate(inst, &x)?.objective;
                    let (_, robustness) = bounds_check(
                        direction,
                        inst.lower(),
                        inst.upper(),
                        inst.beta(),
                        t.epsilon.min(ratio - 1.0),
                    )?;
                    samples.push(AdviceSample {
                        ratio: direction.ratio(alg, opt.objective()),
                        lambda: t.lambda,
                        epsilon: t.epsilon,
                        robustness,
                    });
                }
            }
            Ok(samples)
        })
        .collect::<Result<_, _>>()?;
    let mut cells = Vec::new();
    for (zi, &zeta) in zetas.iter().enumerate() {
        for (ti, trust) in trusts.iter().enumerate() {
            let k = zi * trusts.len() + ti;
            let s: Vec<&AdviceSample> = per_instance.iter().map(|v| &v[k]).collect();
            let ratios: Vec<f64> = s.iter().map(|x| x.ratio).collect();
            cells.push(AdviceCell {
                zeta,
                trust: trust.label().to_string(),
                trust_value: trust.value(),
                lambda_mean: mean(&s.iter().map(|x| x.lambda).collect::<Vec<_>>()),
                epsilon_mean: mean(&s.iter().map(|x| x.epsilon).collect::<Vec<_>>()),
                instances: s.len(),
                mean_ratio: mean(&ratios),
                p95_ratio: percentile(&ratios, 95.0),
                max_ratio: max(&ratios),
                consistency_slack: max(&s
                    .iter()
                    .map(|x| x.ratio - (1.0 + x.epsilon))
                    .collect::<Vec<_>>()),
                robustness_slack: max(&s
                    .iter()
                    .map(|x| x.ratio - x.robustness)
                    .collect::<Vec<_>>()),
            });
        }
    }
    Ok(cells)
}

/// One algorithm on one session at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvchargeRow {
    pub session: String,
    pub dc_rating: f64,
    pub beta: f64,
    pub algorithm: String,
    pub zeta: Option<f64>,
    pub lambda: Option<f64>,
    pub objective: f64,
    pub opt: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub dc_rating: f64,
    pub beta: f64,
    pub algorithm: String,
    pub zeta: Option<f64>,
    pub lambda: Option<f64>,
    pub sessions: usize,
    pub mean_ratio: f64,
    pub p95_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvchargeSummary {
    pub sessions: usize,
    /// `(session, dc, beta)` cells dropped because the optimum is zero.
    pub skipped_zero_opt: usize,
    pub cells: Vec<SummaryCell>,
}

struct EvData {
    carbon: CarbonSeries,
    solar: SolarSeries,
    sessions: Vec<evcharge::ChargingSession>,
}

fn evcharge_data(m: &Manifest) -> Result<EvData, CliError> {
    if let Some(cfg) = &m.synthetic {
        let seed = m
            .seed
            .ok_or_else(|| CliError::usage("missing-seed", "synthetic traces need --seed"))?;
        let data = evcharge::synthetic_traces(&evcharge::SyntheticConfig { seed, ..*cfg })?;
        return Ok(EvData {
            carbon: data.carbon,
            solar: data.solar,
            sessions: evcharge::long_sessions(data.sessions),
        });
    }
    let need = |p: &Option<PathBuf>, what: &str| {
        p.clone().ok_or_else(|| {
            CliError::usage(
                "missing-input",
                format!("evcharge needs --{what} or --synthetic"),
            )
        })
    };
    let carbon = CarbonSeries::from_path(need(&m.carbon, "carbon")?)?;
    let sessions = evcharge::read_sessions_path(need(&m.sessions, "sessions")?)?;
    let uses_solar = m.dc_rating.iter().flatten().any(|&d| d > 0.0);
    let solar = match (&m.solar, uses_solar) {
        (Some(p), _) => SolarSeries::from_path(p)?,
        (None, false) => SolarSeries::new(Vec::new(), Vec::new())?,
        (None, true) => {
            return Err(CliError::usage(
                "missing-input",
                "solar trace needed for dc-rating > 0",
            ))
        }
    };
    Ok(EvData {
        carbon,
        solar,
        sessions: evcharge::long_sessions(sessions),
    })
}

fn with_session(id: &str, e: ocs::OcsError) -> CliError {
    use ocs::OcsError::*;
    let e = match e {
        Parameter(m) if !m.contains(id) => Parameter(format!("session {id}: {m}")),
        Validation(m) if !m.contains(id) => Validation(format!("session {id}: {m}")),
        other => other,
    };
    e.into()
}

fn session_rows(
    si: &SessionInstance,
    dc: f64,
    beta: f64,
    zetas: &[f64],
    lambdas: &[f64],
    file_advice: Option<&AdviceVector>,
) -> Result<Option<Vec<EvchargeRow>>, CliError> {
    let id = si.session_id.as_str();
    let inst = si
        .instance
        .with_beta(beta)
        .map_err(|e| with_session(id, e))?;
    let opt = solve_offline(&inst)?;
    let opt_obj = opt.objective();
    if opt_obj <= ZERO_OPT {
        return Ok(None);
    }
    let row = |algorithm: &str, zeta, lambda, x: &Schedule| -> Result<EvchargeRow, CliError> {
        let report = evaluate(&inst, x)?;
        if !report.feasible {
            return Err(CliError::from(ocs::OcsError::Solver(format!(
                "session {id}: {algorithm} produced an infeasible schedule"
            ))));
        }
        Ok(EvchargeRow {
            session: id.to_string(),
            dc_rating: dc,
            beta,
            algorithm: algorithm.to_string(),
            zeta,
            lambda,
            objective: report.objective,
            opt: opt_obj,
            ratio: report.objective / opt_obj,
        })
    };
    let mut rows = vec![
        row(
            "carbon-agnostic",
            None,
            None,
            &evcharge::carbon_agnostic(&inst)?,
        )?,
        row(
            "simple-threshold",
            None,
            None,
            &evcharge::simple_threshold(&inst)?,
        )?,
        row("owt", None, None, &evcharge::owt_algorithm(&inst)?)?,
        row("roro", None, None, &roro_run(&inst)?)?,
    ];
    let ratio = ratio_of(&inst)?;
    let worst = if zetas.iter().any(|&z| z > 0.0) {
        Some(solve_worst(&inst)?.schedule)
    } else {
        None
    };
    for &zeta in zetas {
        let advice = match &worst {
            Some(w) => blend_advice(&opt.schedule, w, zeta)?,
            None => blend_advice(&opt.schedule, &opt.schedule, zeta)?,
        };
        for &lambda in lambdas {
            let t = TrustParams::from_lambda(Direction::Minimize, ratio, lambda)?;
            let x = ro_advice_run(&inst, &advice, &t)?;
            rows.push(row("ro-advice", Some(zeta), Some(lambda), &x)?);
        }
    }
    if let Some(advice) = file_advice {
        for &lambda in lambdas {
            let t = TrustParams::from_lambda(Direction::Minimize, ratio, lambda)?;
            let x = ro_advice_run(&inst, advice, &t).map_err(|e| with_session(id, e))?;
            rows.push(row("ro-advice-file", None, Some(lambda), &x)?);
        }
    }
    Ok(Some(rows))
}

fn cmp_opt(a: Option<f64>, b: Option<f64>) -> std::cmp::Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        _ => a.is_some().cmp(&b.is_some()),
    }
}

/// Per-session rows for every algorithm over the dc-rating and beta grids,
/// sorted by `(dc_rating, beta, session, algorithm, zeta, lambda)`.
pub fn evcharge_rows(m: &Manifest) -> Result<(Vec<EvchargeRow>, EvchargeSummary), CliError> {
    let data = evcharge_data(m)?;
    let dcs = m.dc_rating.clone().unwrap_or_else(|| vec![0.0]);
    let betas = m
        .beta
        .clone()
        .unwrap_or_else(|| vec![0.0, 10.0, 20.0, 30.0, 40.0]);
    let zetas = m.zeta_grid.clone().unwrap_or_else(|| vec![0.0]);
    let lambdas = m.lambda.clone().unwrap_or_else(|| vec![0.5]);
    let advice_map: Option<BTreeMap<String, AdviceVector>> =
        m.advice.as_ref().map(advice::load_advice_map).transpose()?;
    info!(
        "evcharge: {} sessions, {} dc ratings, {} betas",
        data.sessions.len(),
        dcs.len(),
        betas.len()
    );
    let jobs: Vec<(usize, f64)> = (0..data.sessions.len())
        .flat_map(|i| dcs.iter().map(move |&dc| (i, dc)))
        .collect();
    let results: Vec<(Vec<EvchargeRow>, usize)> = jobs
        .par_iter()
        .map(|&(i, dc)| -> Result<_, CliError> {
            let session = &data.sessions[i];
            let file_advice = match &advice_map {
                Some(map) => Some(map.get(&session.id).ok_or_else(|| {
                    CliError::usage(
                        "missing-advice",
                        format!("no advice for session {}", session.id),
                    )
                })?),
                None => None,
            };
            let si = evcharge::build_instance(session, &data.carbon, &data.solar, dc, 0.0)?;
            let mut rows = Vec::new();
            let mut skipped = 0;
            for &beta in &betas {
                match session_rows(&si, dc, beta, &zetas, &lambdas, file_advice)? {
                    Some(r) => rows.extend(r),
                    None => skipped += 1,
                }
            }
            Ok((rows, skipped))
        })
        .collect::<Result<_, _>>()?;
    let skipped: usize = results.iter().map(|r| r.1).sum();
    if skipped > 0 {
        warn!("skipped {skipped} session cells with zero optimal emissions");
    }
    let mut rows: Vec<EvchargeRow> = results.into_iter().flat_map(|r| r.0).collect();
    rows.sort_by(|a, b| {
        a.dc_rating
            .total_cmp(&b.dc_rating)
            .then(a.beta.total_cmp(&b.beta))
            .then_with(|| a.session.cmp(&b.session))
            .then_with(|| a.algorithm.cmp(&b.algorithm))
            .then_with(|| cmp_opt(a.zeta, b.zeta))
            .then_with(|| cmp_opt(a.lambda, b.lambda))
    });
    let summary = summarize(&rows, data.sessions.len(), skipped);
    Ok((rows, summary))
}

fn summarize(rows: &[EvchargeRow], sessions: usize, skipped: usize) -> EvchargeSummary {
    let mut groups: Vec<(SummaryCell, Vec<f64>)> = Vec::new();
    for r in rows {
        let same = |c: &SummaryCell| {
            c.dc_rating == r.dc_rating
                && c.beta == r.beta
                && c.algorithm == r.algorithm
                && c.zeta == r.zeta
                && c.lambda == r.lambda
        };
        match groups.iter_mut().find(|(c, _)| same(c)) {
            Some((_, v)) => v.push(r.ratio),
            None => groups.push((
                SummaryCell {
                    dc_rating: r.dc_rating,
                    beta: r.beta,
                    algorithm: r.algorithm.clone(),
                    zeta: r.zeta,
                    lambda: r.lambda,
                    sessions: 0,
                    mean_ratio: 0.0,
                    p95_ratio: 0.0,
                },
                vec![r.ratio],
            )),
        }
    }
    let cells = groups
        .into_iter()
        .map(|(mut c, v)| {
            c.sessions = v.len();
            c.mean_ratio = mean(&v);
            c.p95_ratio = percentile(&v, 95.0);
            c
        })
        .collect();
    EvchargeSummary {
        sessions,
        skipped_zero_opt: skipped,
        cells,
    }
}

fn cmd_evcharge(m: &Manifest) -> Result<(), CliError> {
    let (rows, summary) = evcharge_rows(m)?;
    write_output(m.out.as_deref(), &csv_bytes(&rows)?)?;
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    match &m.out {
        Some(out) => {
            let path = out.with_extension("summary.json");
            std::fs::write(&path, text)?;
            info!("wrote {}", path.display());
        }
        None => info!("summary: {}", serde_json::to_string(&summary)?),
    }
    Ok(())
}
