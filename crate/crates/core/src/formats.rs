//! File formats.
//!
//! | artifact | format |
//! |---|---|
//! | energy model | JSON: `supply_voltage_v`, `states[{name, avg_current_a}]`, `transitions[{from, to, duration_s, avg_current_a}]`, `events[{kind, charge_c}]` |
//! | timeline | CSV `state,duration_s`, optional events CSV `kind,timestamp_s` |
//! | trace | CSV `time_s,current_a`, uniform spacing; voltage from a `{"supply_voltage_v": ..}` sidecar or a flag |
//! | observations | CSV with `t_<state>`, `n_<from>__<to>`, `n_ev_<kind>`, `energy_j` columns, one row per run |
//! | calibration | model JSON plus a `fit` block |
//! | error curve | CSV `rate_pps,err_naive_pct,err_naive_lo,err_naive_hi,err_improved_pct,err_improved_lo,err_improved_hi` |
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! write-then-read reproduces every value exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::{ErrorCurve, ErrorStat, RatePoint};
use crate::calibration::{CalibrationResult, Observation};
use crate::error::{Error, Result};
use crate::model::{EnergyModel, StateInterval, TimedEvent, Timeline, TransitionKey};
use crate::trace::CurrentTrace;

/// Relative deviation from uniform spacing tolerated when loading traces.
pub const TRACE_JITTER_TOLERANCE: f64 = 1e-6;

pub const TIMELINE_HEADER: [&str; 2] = ["state", "duration_s"];
pub const EVENTS_HEADER: [&str; 2] = ["kind", "timestamp_s"];
pub const TRACE_HEADER: [&str; 2] = ["time_s", "current_a"];
pub const ERROR_CURVE_HEADER: [&str; 7] = [
    "rate_pps",
    "err_naive_pct",
    "err_naive_lo",
    "err_naive_hi",
    "err_improved_pct",
    "err_improved_lo",
    "err_improved_hi",
];

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn from_json<T: DeserializeOwned>(text: &str, context: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::parse(context, e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn parse_model(text: &str) -> Result<EnergyModel> {
    from_json(text, "model JSON")
}

fn csv_rows(text: &str, context: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let got = rdr.headers().map_err(|e| Error::parse(context, e))?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(Error::parse(
            context,
            format!("expected header `{}`, found `{}`", header.join(","), got.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    rdr.records()
        .map(|r| r.map_err(|e| Error::parse(context, e)))
        .collect()
}

fn parse_f64(field: &str, context: &str, line: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|e| Error::parse(context, format!("row {line}: `{field}`: {e}")))
}

pub fn parse_timeline_csv(intervals: &str, events: Option<&str>) -> Result<Timeline> {
    let ivs = csv_rows(intervals, "timeline CSV", &TIMELINE_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| Ok(StateInterval::new(&r[0], parse_f64(&r[1], "timeline CSV", i + 1)?)))
        .collect::<Result<Vec<_>>>()?;
    let evs = match events {
        Some(text) => csv_rows(text, "events CSV", &EVENTS_HEADER)?
            .iter()
            .enumerate()
            .map(|(i, r)| Ok(TimedEvent::new(&r[0], parse_f64(&r[1], "events CSV", i + 1)?)))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    Timeline::new(ivs, evs)
}

pub fn timeline_csv(timeline: &Timeline) -> String {
    let mut s = TIMELINE_HEADER.join(",") + "\n";
    for iv in timeline.intervals() {
        let _ = writeln!(s, "{},{}", iv.state, iv.duration);
    }
    s
}

pub fn events_csv(timeline: &Timeline) -> String {
    let mut s = EVENTS_HEADER.join(",") + "\n";
    for ev in timeline.events() {
        let _ = writeln!(s, "{},{}", ev.kind, ev.timestamp);
    }
    s
}

/// Parses a trace CSV. The sample period is the first spacing if every
/// sample sits within the jitter tolerance of that grid, otherwise the
/// end-to-end average spacing, which must then satisfy the tolerance.
pub fn parse_trace_csv(text: &str, supply_voltage: f64) -> Result<CurrentTrace> {
    let ctx = "trace CSV";
    let rows = csv_rows(text, ctx, &TRACE_HEADER)?;
    let mut times = Vec::with_capacity(rows.len());
    let mut samples = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        times.push(parse_f64(&r[0], ctx, i + 1)?);
        samples.push(parse_f64(&r[1], ctx, i + 1)?);
    }
    if times.len() < 2 {
        return Err(Error::parse(ctx, "need at least two samples to infer the sample period"));
    }
    let on_grid = |dt: f64| {
        dt > 0.0
            && times
                .iter()
                .enumerate()
                .all(|(i, &t)| (t - (times[0] + i as f64 * dt)).abs() <= TRACE_JITTER_TOLERANCE * dt)
    };
    let first = times[1] - times[0];
    let average = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let dt = if on_grid(first) {
        first
    } else if on_grid(average) {
        average
    } else {
        return Err(Error::parse(ctx, "samples are not uniformly spaced"));
    };
    CurrentTrace::new(dt, samples, supply_voltage)
}

pub fn trace_csv(trace: &CurrentTrace) -> String {
    let mut s = String::with_capacity(trace.len() * 24);
    s.push_str(&TRACE_HEADER.join(","));
    s.push('\n');
    for (i, x) in trace.samples().iter().enumerate() {
        let _ = writeln!(s, "{},{}", trace.time_at(i), x);
    }
    s
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    supply_voltage_v: f64,
}

pub fn parse_sidecar(text: &str) -> Result<f64> {
    Ok(from_json::<Sidecar>(text, "trace sidecar JSON")?.supply_voltage_v)
}

pub fn sidecar_json(supply_voltage: f64) -> String {
    to_json(&Sidecar {
        supply_voltage_v: supply_voltage,
    })
}

pub fn parse_observations_csv(text: &str) -> Result<Vec<Observation>> {
    let ctx = "observations CSV";
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse(ctx, e))?
        .iter()
        .map(str::to_string)
        .collect();

    enum Col {
        Time(String),
        Transition(TransitionKey),
        Event(String),
        Energy,
    }
    let mut cols = Vec::with_capacity(header.len());
    for h in &header {
        let col = if h == "energy_j" {
            Col::Energy
        } else if let Some(s) = h.strip_prefix("t_") {
            Col::Time(s.to_string())
        } else if let Some((a, b)) = h.strip_prefix("n_").and_then(|r| r.split_once("__")) {
            Col::Transition(TransitionKey::new(a, b))
        } else if let Some(k) = h.strip_prefix("n_ev_") {
            Col::Event(k.to_string())
        } else {
            return Err(Error::parse(ctx, format!("unrecognized column `{h}`")));
        };
        cols.push(col);
    }
    if !cols.iter().any(|c| matches!(c, Col::Energy)) {
        return Err(Error::parse(ctx, "missing `energy_j` column"));
    }

    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(ctx, e))?;
        let mut obs = Observation::default();
        for (col, field) in cols.iter().zip(rec.iter()) {
            let v = parse_f64(field, ctx, line + 1)?;
            match col {
                Col::Time(s) => {
                    obs.state_times.insert(s.clone(), v);
                }
                Col::Transition(k) => {
                    obs.transition_counts.insert(k.clone(), v);
                }
                Col::Event(k) => {
                    obs.event_counts.insert(k.clone(), v);
                }
                Col::Energy => obs.measured_energy = v,
            }
        }
        out.push(obs);
    }
    Ok(out)
}

/// Columns are the union over all observations; absent entries are written as 0.
pub fn observations_csv(observations: &[Observation]) -> String {
    let states: BTreeSet<&String> = observations.iter().flat_map(|o| o.state_times.keys()).collect();
    let trans: BTreeSet<&TransitionKey> = observations.iter().flat_map(|o| o.transition_counts.keys()).collect();
    let events: BTreeSet<&String> = observations.iter().flat_map(|o| o.event_counts.keys()).collect();

    let mut header: Vec<String> = states.iter().map(|s| crate::calibration::state_column(s)).collect();
    header.extend(trans.iter().map(|k| crate::calibration::transition_column(k)));
    header.extend(events.iter().map(|k| crate::calibration::event_column(k)));
    header.push("energy_j".into());

    let mut s = header.join(",") + "\n";
    for o in observations {
        let mut row: Vec<String> = states
            .iter()
            .map(|k| o.state_times.get(*k).copied().unwrap_or(0.0).to_string())
            .collect();
        row.extend(trans.iter().map(|k| o.transition_counts.get(*k).copied().unwrap_or(0.0).to_string()));
        row.extend(events.iter().map(|k| o.event_counts.get(*k).copied().unwrap_or(0.0).to_string()));
        row.push(o.measured_energy.to_string());
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitBlock {
    pub residual_rms_j: f64,
    pub r_squared: f64,
    /// Fitted excess charge per transition, which a zero-duration
    /// transition cannot carry in its `avg_current_a`.
    #[serde(default)]
    pub transition_charges_c: BTreeMap<TransitionKey, f64>,
    #[serde(default)]
    pub std_errors: BTreeMap<String, f64>,
}

/// A fitted energy model: the model JSON with a `fit` block appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedModel {
    #[serde(flatten)]
    pub model: EnergyModel,
    pub fit: FitBlock,
}

impl CalibratedModel {
    pub fn new(result: &CalibrationResult, skeleton: &EnergyModel) -> Self {
        Self {
            model: result.to_model(skeleton),
            fit: FitBlock {
                residual_rms_j: result.residual_rms,
                r_squared: result.r_squared,
                transition_charges_c: result.transition_charges.clone(),
                std_errors: result.std_errors.clone(),
            },
        }
    }

    pub fn result(&self) -> CalibrationResult {
        CalibrationResult {
            state_currents: self
                .model
                .states
                .iter()
                .map(|s| (s.name.clone(), s.avg_current))
                .collect(),
            transition_charges: self.fit.transition_charges_c.clone(),
            event_charges: self.model.events.iter().map(|e| (e.kind.clone(), e.charge)).collect(),
            residual_rms: self.fit.residual_rms_j,
            r_squared: self.fit.r_squared,
            std_errors: self.fit.std_errors.clone(),
        }
    }
}

pub fn calibration_json(result: &CalibrationResult, skeleton: &EnergyModel) -> String {
    to_json(&CalibratedModel::new(result, skeleton))
}

pub fn parse_calibration_json(text: &str) -> Result<CalibratedModel> {
    from_json(text, "calibrated model JSON")
}

pub fn error_curve_csv(curve: &ErrorCurve) -> String {
    let mut s = ERROR_CURVE_HEADER.join(",") + "\n";
    for p in &curve.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            p.rate, p.naive.mean, p.naive.ci_low, p.naive.ci_high, p.improved.mean, p.improved.ci_low, p.improved.ci_high
        );
    }
    s
}

pub fn parse_error_curve_csv(text: &str) -> Result<ErrorCurve> {
    let ctx = "error curve CSV";
    let points = csv_rows(text, ctx, &ERROR_CURVE_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let v = (0..7)
                .map(|c| parse_f64(&r[c], ctx, i + 1))
                .collect::<Result<Vec<f64>>>()?;
            Ok(RatePoint {
                rate: v[0],
                naive: ErrorStat {
                    mean: v[1],
                    ci_low: v[2],
                    ci_high: v[3],
                },
                improved: ErrorStat {
                    mean: v[4],
                    ci_low: v[5],
                    ci_high: v[6],
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorCurve { points })
}
