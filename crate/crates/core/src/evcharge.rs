//! EV-charging case study: hourly carbon and solar traces, charging sessions,
//! per-session instances and the baseline charging policies.
//!
//! A session's demand is normalized to one unit. Step `t` covers one hour and
//! its pricing function is `c_t * max(0, x - s_t / demand)`, where `s_t` is
//! the on-site solar energy for that hour: solar is used first and only the
//! deficit is drawn from the grid at intensity `c_t`.

use std::io::Read;
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDateTime, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OcsError, Result};
use crate::model::{compulsory_fill, Direction, Instance, PricingFunction, Schedule};
use crate::roro::roro_run;

pub const INVERTER_EFFICIENCY: f64 = 0.95;
pub const SYSTEM_LOSSES: f64 = 0.14;
/// `1 - SYSTEM_LOSSES`, kept as a literal to avoid round-off.
const LOSS_FACTOR: f64 = 0.86;
pub const DEFAULT_CHARGER_KW: f64 = 19.0;
pub const MIN_SESSION_HOURS: i64 = 5;
pub const HISTORY_DAYS: i64 = 30;

/// Parses `2024-05-01T13:00:00Z`, `2024-05-01T13:00:00+02:00` (converted to
/// UTC), `2024-05-01T13:00:00` or `2024-05-01 13:00:00`.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_utc());
    }
    [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ]
    .iter()
    .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn hour_floor(t: NaiveDateTime) -> NaiveDateTime {
    t.with_minute(0)
        .and_then(|t| t.with_second(0))
        .and_then(|t| t.with_nanosecond(0))
        .unwrap_or(t)
}

/// Reads CSV rows as string records, reporting failures with 1-based line numbers.
fn read_rows<R: Read>(
    source: &str,
    reader: R,
    columns: &[&str],
) -> Result<Vec<(u64, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| OcsError::Data(format!("{source}: missing column `{c}`")))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            OcsError::Data(format!("{source}:{line}: {e}"))
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let fields = idx
            .iter()
            .map(|&i| rec.get(i).unwrap_or("").to_string())
            .collect();
        rows.push((line, fields));
    }
    Ok(rows)
}

fn field_f64(source: &str, line: u64, name: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| OcsError::Data(format!("{source}:{line}: bad {name} `{s}`")))
}

fn field_time(source: &str, line: u64, name: &str, s: &str) -> Result<NaiveDateTime> {
    parse_timestamp(s).ok_or_else(|| OcsError::Data(format!("{source}:{line}: bad {name} `{s}`")))
}

fn check_increasing(source: &str, times: &[NaiveDateTime]) -> Result<()> {
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(OcsError::Data(format!(
            "{source}: timestamps not strictly increasing at {}",
            times[i + 1]
        )));
    }
    Ok(())
}

/// Hourly grid carbon intensity in gCO2eq/kWh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarbonSeries {
    times: Vec<NaiveDateTime>,
    intensity: Vec<f64>,
}

impl CarbonSeries {
    pub fn new(times: Vec<NaiveDateTime>, intensity: Vec<f64>) -> Result<Self> {
        if times.len() != intensity.len() {
            return Err(OcsError::Structural("carbon series length mismatch".into()));
        }
        check_increasing("carbon", &times)?;
        if let Some(i) = intensity.iter().position(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(OcsError::Data(format!(
                "carbon intensity {} at {} must be positive",
                intensity[i], times[i]
            )));
        }
        Ok(Self { times, intensity })
    }

    /// Columns `timestamp, intensity_gco2_per_kwh`.
    pub fn from_reader<R: Read>(source: &str, reader: R) -> Result<Self> {
        let rows = read_rows(source, reader, &["timestamp", "intensity_gco2_per_kwh"])?;
        let mut times = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len());
        for (line, f) in rows {
            times.push(field_time(source, line, "timestamp", &f[0])?);
            let c = field_f64(source, line, "intensity", &f[1])?;
            if c <= 0.0 {
                return Err(OcsError::Data(format!(
                    "{source}:{line}: intensity {c} must be positive"
                )));
            }
            values.push(c);
        }
        Self::new(times, values)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_reader(&path.display().to_string(), std::fs::File::open(path)?)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn at(&self, t: NaiveDateTime) -> Option<f64> {
        self.times.binary_search(&t).ok().map(|i| self.intensity[i])
    }

    /// Values for every hour in `[start, end)`; any missing hour is a gap.
    pub fn window(&self, start: NaiveDateTime, end: NaiveDateTime) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let mut t = start;
        while t < end {
            out.push(
                self.at(t)
                    .ok_or_else(|| OcsError::Data(format!("carbon trace has no value for {t}")))?,
            );
            t += Duration::hours(1);
        }
        Ok(out)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["timestamp", "intensity_gco2_per_kwh"])?;
        for (t, c) in self.times.iter().zip(&self.intensity) {
            w.write_record([t.format("%Y-%m-%dT%H:%M:%S").to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One hourly irradiance record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolarRecord {
    pub dhi: f64,
    pub dni: f64,
    /// Solar elevation angle in degrees.
    pub elevation: f64,
}

impl SolarRecord {
    /// Irradiance on the panel plane, `DNI sin(elevation) + DHI`, in W/m^2.
    pub fn gti(&self) -> f64 {
        (self.dni * sin_degrees(self.elevation) + self.dhi).max(0.0)
    }
}

/// Sine of an angle in degrees, exact at multiples of 30 degrees.
pub fn sin_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r % 30.0 == 0.0 {
        const TABLE: [f64; 12] = [
            0.0, 0.5, 0.0, 1.0, 0.0, 0.5, 0.0, -0.5, 0.0, -1.0, 0.0, -0.5,
        ];
        let k = (r / 30.0) as usize;
        return match k {
            2 | 4 => 0.75f64.sqrt(),
            8 | 10 => -(0.75f64.sqrt()),
            _ => TABLE[k],
        };
    }
    deg.to_radians().sin()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolarSeries {
    times: Vec<NaiveDateTime>,
    records: Vec<SolarRecord>,
}

impl SolarSeries {
    pub fn new(times: Vec<NaiveDateTime>, records: Vec<SolarRecord>) -> Result<Self> {
        if times.len() != records.len() {
            return Err(OcsError::Structural("solar series length mismatch".into()));
        }
        check_increasing("solar", &times)?;
        for (t, r) in times.iter().zip(&records) {
            if !(r.dhi >= 0.0 && r.dni >= 0.0) {
                return Err(OcsError::Data(format!("negative irradiance at {t}")));
            }
            if !(-90.0..=90.0).contains(&r.elevation) {
                return Err(OcsError::Data(format!(
                    "elevation {} at {t} outside [-90, 90]",
                    r.elevation
                )));
            }
        }
        Ok(Self { times, records })
    }

    /// Columns `timestamp, dhi_wm2, dni_wm2, elevation_deg`.
    pub fn from_reader<R: Read>(source: &str, reader: R) -> Result<Self> {
        let rows = read_rows(
            source,
            reader,
            &["timestamp", "dhi_wm2", "dni_wm2", "elevation_deg"],
        )?;
        let mut times = Vec::with_capacity(rows.len());
        let mut records = Vec::with_capacity(rows.len());
        for (line, f) in rows {
            times.push(field_time(source, line, "timestamp", &f[0])?);
            let rec = SolarRecord {
                dhi: field_f64(source, line, "dhi", &f[1])?,
                dni: field_f64(source, line, "dni", &f[2])?,
                elevation: field_f64(source, line, "elevation", &f[3])?,
            };
            if rec.dhi < 0.0 || rec.dni < 0.0 || !(-90.0..=90.0).contains(&rec.elevation) {
                return Err(OcsError::Data(format!(
                    "{source}:{line}: irradiance out of range"
                )));
            }
            records.push(rec);
        }
        Self::new(times, records)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_reader(&path.display().to_string(), std::fs::File::open(path)?)
    }

    pub fn record(&self, t: NaiveDateTime) -> Result<SolarRecord> {
        match (self.times.first(), self.times.last()) {
            (Some(&a), Some(&b)) if t >= a && t <= b => {}
            _ => return Err(OcsError::Range(format!("{t} outside the solar trace"))),
        }
        self.times
            .binary_search(&t)
            .map(|i| self.records[i])
            .map_err(|_| OcsError::Data(format!("solar trace has no value for {t}")))
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["timestamp", "dhi_wm2", "dni_wm2", "elevation_deg"])?;
        for (t, r) in self.times.iter().zip(&self.records) {
            w.write_record([
                t.format("%Y-%m-%dT%H:%M:%S").to_string(),
                r.dhi.to_string(),
                r.dni.to_string(),
                r.elevation.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// AC output in kW of a `dc_rating` kW array for an irradiance record.
pub fn generation_kw(record: &SolarRecord, dc_rating: f64) -> f64 {
    dc_rating * record.gti() * INVERTER_EFFICIENCY * LOSS_FACTOR / 1000.0
}

/// AC output in kW at hour `t`.
pub fn solar_generation(series: &SolarSeries, dc_rating: f64, t: NaiveDateTime) -> Result<f64> {
    Ok(generation_kw(&series.record(t)?, dc_rating))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargingSession {
    pub id: String,
    pub arrival: NaiveDateTime,
    pub departure: NaiveDateTime,
    pub demand_kwh: f64,
    pub charger_kw: f64,
}

impl ChargingSession {
    pub fn hours(&self) -> i64 {
        (self.departure - self.arrival).num_hours()
    }
}

/// Columns `arrival, departure, demand_kwh`, with optional `session_id` and
/// `charger_kw`. Rows without an id are named by line number.
pub fn read_sessions<R: Read>(source: &str, reader: R) -> Result<Vec<ChargingSession>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| {
        col(name).ok_or_else(|| OcsError::Data(format!("{source}: missing column `{name}`")))
    };
    let (ia, id, idem) = (need("arrival")?, need("departure")?, need("demand_kwh")?);
    let (iid, irate) = (col("session_id"), col("charger_kw"));
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            OcsError::Data(format!("{source}:{line}: {e}"))
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let get = |i: usize| rec.get(i).unwrap_or("");
        let arrival = field_time(source, line, "arrival", get(ia))?;
        let departure = field_time(source, line, "departure", get(id))?;
        let demand_kwh = field_f64(source, line, "demand_kwh", get(idem))?;
        let charger_kw = match irate.map(get) {
            Some(s) if !s.is_empty() => field_f64(source, line, "charger_kw", s)?,
            _ => DEFAULT_CHARGER_KW,
        };
        if departure <= arrival {
            return Err(OcsError::Data(format!(
                "{source}:{line}: departure before arrival"
            )));
        }
        if !(demand_kwh > 0.0) || !(charger_kw > 0.0) {
            return Err(OcsError::Data(format!(
                "{source}:{line}: demand and charger rate must be positive"
            )));
        }
        let id = match iid.map(get) {
            Some(s) if !s.is_empty() => s.to_string(),
            _ => format!("line-{line}"),
        };
        out.push(ChargingSession {
            id,
            arrival,
            departure,
            demand_kwh,
            charger_kw,
        });
    }
    Ok(out)
}

pub fn read_sessions_path(path: impl AsRef<Path>) -> Result<Vec<ChargingSession>> {
    let path = path.as_ref();
    read_sessions(&path.display().to_string(), std::fs::File::open(path)?)
}

/// Keeps sessions lasting at least [`MIN_SESSION_HOURS`].
pub fn long_sessions(sessions: Vec<ChargingSession>) -> Vec<ChargingSession> {
    sessions
        .into_iter()
        .filter(|s| s.hours() >= MIN_SESSION_HOURS)
        .collect()
}

pub fn write_sessions<W: std::io::Write>(sessions: &[ChargingSession], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "session_id",
        "arrival",
        "departure",
        "demand_kwh",
        "charger_kw",
    ])?;
    for s in sessions {
        w.write_record([
            s.id.clone(),
            s.arrival.format("%Y-%m-%dT%H:%M:%S").to_string(),
            s.departure.format("%Y-%m-%dT%H:%M:%S").to_string(),
            s.demand_kwh.to_string(),
            s.charger_kw.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A session's normalized instance plus the physical quantities behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionInstance {
    pub session_id: String,
    pub start: NaiveDateTime,
    pub demand_kwh: f64,
    /// Grid intensity per step.
    pub intensity: Vec<f64>,
    /// Solar energy per step in kWh.
    pub solar_kwh: Vec<f64>,
    pub instance: Instance,
}

/// Builds the minimization instance for one session.
///
/// Steps are the whole hours from the arrival hour; `L` and `U` are the
/// extremes of the 30 days of intensities before that hour.
pub fn build_instance(
    session: &ChargingSession,
    carbon: &CarbonSeries,
    solar: &SolarSeries,
    dc_rating: f64,
    beta: f64,
) -> Result<SessionInstance> {
    let start = hour_floor(session.arrival);
    let horizon = session.hours();
    if horizon < 1 {
        return Err(OcsError::Data(format!(
            "session {} shorter than one hour",
            session.id
        )));
    }
    let history = carbon
        .window(start - Duration::days(HISTORY_DAYS), start)
        .map_err(|e| OcsError::Data(format!("session {}: {e}", session.id)))?;
    let lower = history.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(upper > lower) {
        return Err(OcsError::Parameter(format!(
            "session {}: flat carbon history (L = {lower}, U = {upper})",
            session.id
        )));
    }
    let end = start + Duration::hours(horizon);
    let intensity = carbon
        .window(start, end)
        .map_err(|e| OcsError::Data(format!("session {}: {e}", session.id)))?;
    let rate = (session.charger_kw / session.demand_kwh).min(1.0);
    let mut solar_kwh = Vec::with_capacity(intensity.len());
    let mut pricing = Vec::with_capacity(intensity.len());
    for (t, &c) in intensity.iter().enumerate() {
        let hour = start + Duration::hours(t as i64);
        let kwh = if dc_rating > 0.0 {
            solar_generation(solar, dc_rating, hour)
                .map_err(|e| OcsError::Data(format!("session {}: {e}", session.id)))?
        } else {
            0.0
        };
        let free = kwh / session.demand_kwh;
        let g = if free <= 0.0 {
            PricingFunction::linear(c)?
        } else if free >= 1.0 {
            PricingFunction::linear(0.0)?
        } else {
            PricingFunction::new([(0.0, 0.0), (free, c)])?
        };
        solar_kwh.push(kwh);
        pricing.push(g);
    }
    let instance = Instance::new(
        Direction::Minimize,
        beta,
        lower,
        upper,
        vec![rate; intensity.len()],
        pricing,
    )
    .map_err(|e| match e {
        OcsError::Parameter(m) => OcsError::Parameter(format!("session {}: {m}", session.id)),
        other => other,
    })?;
    Ok(SessionInstance {
        session_id: session.id.clone(),
        start,
        demand_kwh: session.demand_kwh,
        intensity,
        solar_kwh,
        instance,
    })
}

/// Charges at full rate from arrival until the demand is met.
pub fn carbon_agnostic(instance: &Instance) -> Result<Schedule> {
    compulsory_fill(instance.rates(), &Schedule::zeros(instance.horizon()), 0)
}

/// Charges at full rate whenever grid intensity is at most `sqrt(U L)`, then
/// falls back to compulsory charging.
pub fn simple_threshold(instance: &Instance) -> Result<Schedule> {
    let threshold = (instance.upper() * instance.lower()).sqrt();
    let rates = instance.rates();
    let mut x = vec![0.0; rates.len()];
    let mut w = 0.0;
    for (t, g) in instance.pricing().iter().enumerate() {
        if instance.compulsory_start(w, t) == Some(t) {
            return compulsory_fill(rates, &Schedule::new(x), t);
        }
        if g.max_slope() <= threshold {
            x[t] = rates[t].min(1.0 - w).max(0.0);
            w += x[t];
        }
    }
    Ok(Schedule::new(x))
}

/// Threshold-based one-way trading: RORO run with the switching coefficient
/// set to zero. Its schedule is still evaluated at the true coefficient.
pub fn owt_algorithm(instance: &Instance) -> Result<Schedule> {
    roro_run(&instance.with_beta(0.0)?)
}

/// Options for [`synthetic_traces`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub sessions: usize,
    /// Days of trace after the 30-day history window.
    pub days: usize,
    /// Mean intensity.
    pub base: f64,
    /// Daily swing amplitude.
    pub amplitude: f64,
    /// Uniform noise half-width.
    pub noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            sessions: 120,
            days: 14,
            base: 400.0,
            amplitude: 150.0,
            noise: 40.0,
        }
    }
}

/// Synthetic traces and sessions.
#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub carbon: CarbonSeries,
    pub solar: SolarSeries,
    pub sessions: Vec<ChargingSession>,
}

/// Sinusoidal daily carbon cycle with noise, a clear-sky solar model, and
/// random sessions of 5 to 12 hours. Deterministic in `config.seed`.
pub fn synthetic_traces(config: &SyntheticConfig) -> Result<SyntheticData> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let origin = NaiveDateTime::parse_from_str("2024-03-01 00:00:00", "%Y-%m-%d %H:%M:%S")
        .expect("valid origin");
    let hours = (HISTORY_DAYS as usize + config.days + 1) * 24;
    let mut times = Vec::with_capacity(hours);
    let mut carbon = Vec::with_capacity(hours);
    let mut solar = Vec::with_capacity(hours);
    for h in 0..hours {
        let t = origin + Duration::hours(h as i64);
        let hod = (h % 24) as f64;
        // Dirtiest in the evening, cleanest around midday.
        let phase = 2.0 * std::f64::consts::PI * (hod - 13.0) / 24.0;
        let noise = rng.gen_range(-config.noise..=config.noise);
        let c = (config.base - config.amplitude * phase.cos() + noise).max(1.0);
        let elevation = 60.0 * (std::f64::consts::PI * (hod - 6.0) / 12.0).sin();
        let clear = elevation.to_radians().sin().max(0.0);
        let cloud = rng.gen_range(0.6..=1.0);
        times.push(t);
        carbon.push(c);
        solar.push(SolarRecord {
            dhi: 100.0 * clear * cloud,
            dni: 850.0 * clear * cloud,
            elevation: elevation.clamp(-90.0, 90.0),
        });
    }
    let first_day = HISTORY_DAYS as usize + 1;
    let mut sessions = Vec::with_capacity(config.sessions);
    for i in 0..config.sessions {
        let day = first_day + rng.gen_range(0..config.days.max(1));
        let arrival_hour = rng.gen_range(0..24);
        let minutes = rng.gen_range(0..60);
        let duration_h = rng.gen_range(MIN_SESSION_HOURS..=12);
        let arrival =
            origin + Duration::hours((day * 24 + arrival_hour) as i64) + Duration::minutes(minutes);
        let departure =
            arrival + Duration::hours(duration_h) + Duration::minutes(rng.gen_range(0..60));
        let demand_kwh = (rng.gen_range(5.0..60.0f64) * 10.0).round() / 10.0;
        sessions.push(ChargingSession {
            id: format!("s{i:04}"),
            arrival,
            departure,
            demand_kwh,
            charger_kw: DEFAULT_CHARGER_KW,
        });
    }
    let last = origin + Duration::hours(hours as i64 - 1);
    sessions.retain(|s| s.departure <= last);
    Ok(SyntheticData {
        carbon: CarbonSeries::new(times.clone(), carbon)?,
        solar: SolarSeries::new(times, solar)?,
        sessions,
    })
}
