//! Energy model types and the state-based estimators.
//!
//! An [`EnergyModel`] describes a transceiver as a set of power states, each
//! with an average current, plus optional transition and event costs. A
//! [`Timeline`] is the logged state residency of one run. The estimators in
//! [`estimate`] turn the two into an [`EnergyReport`].
//!
//! Units are SI throughout: amperes, volts, seconds, coulombs and joules.

mod estimate;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result, Violation};

pub use estimate::{estimate_basic, estimate_with_events, estimate_with_transitions};
pub use report::EnergyReport;

/// A discrete operating mode with a characteristic average current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerState {
    pub name: String,
    #[serde(rename = "avg_current_a")]
    pub avg_current: f64,
}

impl PowerState {
    pub fn new(name: impl Into<String>, avg_current: f64) -> Self {
        Self {
            name: name.into(),
            avg_current,
        }
    }
}

/// Cost of switching between two states.
///
/// The transition occupies `duration` seconds at the head of the destination
/// interval and draws `avg_current` during that window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub from: String,
    pub to: String,
    #[serde(rename = "duration_s")]
    pub duration: f64,
    #[serde(rename = "avg_current_a")]
    pub avg_current: f64,
}

impl TransitionSpec {
    pub fn new(from: impl Into<String>, to: impl Into<String>, duration: f64, avg_current: f64) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            duration,
            avg_current,
        }
    }

    pub fn key(&self) -> TransitionKey {
        TransitionKey::new(&self.from, &self.to)
    }
}

/// A discrete event (beacon reception, packet) that adds a fixed excess
/// charge on top of whatever state the radio is in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub kind: String,
    #[serde(rename = "charge_c")]
    pub charge: f64,
}

impl EventSpec {
    pub fn new(kind: impl Into<String>, charge: f64) -> Self {
        Self {
            kind: kind.into(),
            charge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    #[serde(rename = "supply_voltage_v")]
    pub supply_voltage: f64,
    pub states: Vec<PowerState>,
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
    #[serde(default)]
    pub events: Vec<EventSpec>,
}

impl EnergyModel {
    pub fn new(supply_voltage: f64, states: Vec<PowerState>) -> Self {
        Self {
            supply_voltage,
            states,
            transitions: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn with_transition(mut self, t: TransitionSpec) -> Self {
        self.transitions.push(t);
        self
    }

    pub fn with_event(mut self, e: EventSpec) -> Self {
        self.events.push(e);
        self
    }

    pub fn state(&self, name: &str) -> Option<&PowerState> {
        self.states.iter().find(|s| s.name == name)
    }

    pub fn state_current(&self, name: &str) -> Result<f64> {
        self.state(name)
            .map(|s| s.avg_current)
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn transition(&self, from: &str, to: &str) -> Option<&TransitionSpec> {
        self.transitions.iter().find(|t| t.from == from && t.to == to)
    }

    pub fn event(&self, kind: &str) -> Option<&EventSpec> {
        self.events.iter().find(|e| e.kind == kind)
    }

    /// Same model with every transition removed: the plain three-state view.
    pub fn without_transitions(&self) -> Self {
        Self {
            transitions: Vec::new(),
            ..self.clone()
        }
    }

    /// Largest current any state or transition draws.
    pub fn max_current(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.avg_current)
            .chain(self.transitions.iter().map(|t| t.avg_current))
            .fold(0.0, f64::max)
    }

    /// Returns every invariant violation; empty means the model is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        validate_model(self)
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(v))
        }
    }
}

/// Identifiers are `[A-Za-z0-9_-]+` without a leading or trailing underscore
/// and without `__`, which the observation CSV uses as a separator.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        && !s.starts_with('_')
        && !s.ends_with('_')
        && !s.contains("__")
}

pub fn validate_model(model: &EnergyModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |msg: String| out.push(Violation(msg));

    if !(model.supply_voltage.is_finite() && model.supply_voltage > 0.0) {
        push(format!(
            "supply voltage {} V must be finite and > 0",
            model.supply_voltage
        ));
    }
    if model.states.is_empty() {
        push("model has no states".to_string());
    }

    let mut seen = BTreeSet::new();
    for s in &model.states {
        if !is_identifier(&s.name) {
            push(format!("state name `{}` is not a valid identifier", s.name));
        }
        if !seen.insert(s.name.as_str()) {
            push(format!("duplicate state name `{}`", s.name));
        }
        if !(s.avg_current.is_finite() && s.avg_current >= 0.0) {
            push(format!(
                "state `{}` current {} A must be finite and >= 0",
                s.name, s.avg_current
            ));
        }
    }

    let mut pairs = BTreeSet::new();
    for t in &model.transitions {
        let label = format!("{}->{}", t.from, t.to);
        for end in [&t.from, &t.to] {
            if !seen.contains(end.as_str()) {
                push(format!("transition {label} references undefined state `{end}`"));
            }
        }
        if t.from == t.to {
            push(format!("transition {label} is a self-loop"));
        }
        if !pairs.insert((t.from.as_str(), t.to.as_str())) {
            push(format!("duplicate transition {label}"));
        }
        if !(t.duration.is_finite() && t.duration >= 0.0) {
            push(format!("transition {label} duration {} s must be finite and >= 0", t.duration));
        }
        if !(t.avg_current.is_finite() && t.avg_current >= 0.0) {
            push(format!("transition {label} current {} A must be finite and >= 0", t.avg_current));
        }
    }

    let mut kinds = BTreeSet::new();
    for e in &model.events {
        if !is_identifier(&e.kind) {
            push(format!("event kind `{}` is not a valid identifier", e.kind));
        }
        if !kinds.insert(e.kind.as_str()) {
            push(format!("duplicate event kind `{}`", e.kind));
        }
        if !(e.charge.is_finite() && e.charge >= 0.0) {
            push(format!("event `{}` charge {} C must be finite and >= 0", e.kind, e.charge));
        }
    }
    out
}

/// Ordered (from, to) pair naming a transition. Displays as `from->to`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionKey {
    pub from: String,
    pub to: String,
}

impl TransitionKey {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
        }
    }
}

impl fmt::Display for TransitionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

impl FromStr for TransitionKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once("->") {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok(Self::new(a, b)),
            _ => Err(Error::parse("transition key", format!("`{s}` is not of the form from->to"))),
        }
    }
}

impl Serialize for TransitionKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TransitionKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Time spent in one state, as recorded by a residency logger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateInterval {
    pub state: String,
    #[serde(rename = "duration_s")]
    pub duration: f64,
}

impl StateInterval {
    pub fn new(state: impl Into<String>, duration: f64) -> Self {
        Self {
            state: state.into(),
            duration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub kind: String,
    #[serde(rename = "timestamp_s")]
    pub timestamp: f64,
}

impl TimedEvent {
    pub fn new(kind: impl Into<String>, timestamp: f64) -> Self {
        Self {
            kind: kind.into(),
            timestamp,
        }
    }
}

/// Ordered state intervals plus timestamped discrete events.
///
/// Construct through [`Timeline::new`] to get the invariants checked:
/// durations finite and non-negative, events sorted and inside the span.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timeline {
    intervals: Vec<StateInterval>,
    events: Vec<TimedEvent>,
}

impl Timeline {
    pub fn new(intervals: Vec<StateInterval>, events: Vec<TimedEvent>) -> Result<Self> {
        for iv in &intervals {
            if !(iv.duration.is_finite() && iv.duration >= 0.0) {
                return Err(Error::InvalidTimeline(format!(
                    "interval `{}` has duration {} s",
                    iv.state, iv.duration
                )));
            }
        }
        let total: f64 = intervals.iter().map(|i| i.duration).sum();
        // timestamps computed by accumulation may overshoot the end by rounding
        let slack = 1e-12 * total.max(1.0);
        let mut prev = f64::NEG_INFINITY;
        for ev in &events {
            if !ev.timestamp.is_finite() || ev.timestamp < -slack || ev.timestamp > total + slack {
                return Err(Error::InvalidTimeline(format!(
                    "event `{}` at {} s lies outside [0, {}]",
                    ev.kind, ev.timestamp, total
                )));
            }
            if ev.timestamp < prev {
                return Err(Error::InvalidTimeline(format!(
                    "events not sorted: `{}` at {} s follows {} s",
                    ev.kind, ev.timestamp, prev
                )));
            }
            prev = ev.timestamp;
        }
        Ok(Self { intervals, events })
    }

    pub fn from_intervals(intervals: Vec<StateInterval>) -> Result<Self> {
        Self::new(intervals, Vec::new())
    }

    pub fn intervals(&self) -> &[StateInterval] {
        &self.intervals
    }

    pub fn events(&self) -> &[TimedEvent] {
        &self.events
    }

    pub fn total_duration(&self) -> f64 {
        self.intervals.iter().map(|i| i.duration).sum()
    }

    /// Total residency per state, in order of first appearance folded into a sorted map.
    pub fn state_times(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for iv in &self.intervals {
            *out.entry(iv.state.clone()).or_insert(0.0) += iv.duration;
        }
        out
    }

    /// Number of adjacent interval pairs switching between distinct states.
    pub fn transition_counts(&self) -> BTreeMap<TransitionKey, u64> {
        let mut out = BTreeMap::new();
        for w in self.intervals.windows(2) {
            if w[0].state != w[1].state {
                *out.entry(TransitionKey::new(&w[0].state, &w[1].state)).or_insert(0) += 1;
            }
        }
        out
    }

    pub fn event_counts(&self) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        for e in &self.events {
            *out.entry(e.kind.clone()).or_insert(0) += 1;
        }
        out
    }

    /// Concatenation: `other` starts where `self` ends.
    pub fn concat(&self, other: &Timeline) -> Result<Timeline> {
        let offset = self.total_duration();
        let mut intervals = self.intervals.clone();
        intervals.extend(other.intervals.iter().cloned());
        let mut events = self.events.clone();
        events.extend(
            other
                .events
                .iter()
                .map(|e| TimedEvent::new(&e.kind, e.timestamp + offset)),
        );
        Timeline::new(intervals, events)
    }

    pub(crate) fn check_states(&self, model: &EnergyModel) -> Result<()> {
        for iv in &self.intervals {
            if model.state(&iv.state).is_none() {
                return Err(Error::UnknownState(iv.state.clone()));
            }
        }
        Ok(())
    }

    pub(crate) fn check_events(&self, model: &EnergyModel) -> Result<()> {
        for ev in &self.events {
            if model.event(&ev.kind).is_none() {
                return Err(Error::UnknownEventKind(ev.kind.clone()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_state() -> EnergyModel {
        EnergyModel::new(
            3.0,
            vec![
                PowerState::new("sleep", 0.002),
                PowerState::new("rx", 0.015),
                PowerState::new("tx", 0.021),
            ],
        )
        .with_transition(TransitionSpec::new("sleep", "tx", 0.1, 0.005))
    }

    #[test]
    fn well_formed_model_is_ok() {
        assert!(validate_model(&three_state()).is_empty());
    }

    #[test]
    fn undefined_transition_endpoint() {
        let m = three_state().with_transition(TransitionSpec::new("sleep", "txx", 0.0, 0.0));
        let v = validate_model(&m);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].0.contains("txx"));
    }

    #[test]
    fn duplicate_state_name() {
        let mut m = three_state();
        m.states.push(PowerState::new("rx", 0.016));
        let v = validate_model(&m);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].0.contains("duplicate state"));
    }

    #[test]
    fn collects_every_violation() {
        let mut m = three_state();
        m.supply_voltage = 0.0;
        m.states[0].avg_current = -1.0;
        m.transitions.push(TransitionSpec::new("rx", "rx", f64::NAN, 0.0));
        m.transitions.push(TransitionSpec::new("sleep", "tx", 0.0, 0.0));
        m.events.push(EventSpec::new("beacon", 1e-3));
        m.events.push(EventSpec::new("beacon", -1.0));
        // voltage, negative current, self-loop, NaN duration, duplicate pair,
        // duplicate kind, negative charge
        assert_eq!(validate_model(&m).len(), 7);
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("sleep"));
        assert!(is_identifier("packet_rx"));
        assert!(is_identifier("tx-2"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("a__b"));
        assert!(!is_identifier("_a"));
        assert!(!is_identifier("a b"));
        assert!(!is_identifier("a->b"));
    }

    #[test]
    fn timeline_rejects_bad_events() {
        let iv = vec![StateInterval::new("a", 1.0)];
        assert!(Timeline::new(iv.clone(), vec![TimedEvent::new("b", 1.5)]).is_err());
        assert!(Timeline::new(iv.clone(), vec![TimedEvent::new("b", -0.1)]).is_err());
        assert!(Timeline::new(
            iv.clone(),
            vec![TimedEvent::new("b", 0.5), TimedEvent::new("b", 0.2)]
        )
        .is_err());
        assert!(Timeline::new(vec![StateInterval::new("a", -1.0)], vec![]).is_err());
        assert!(Timeline::new(iv, vec![TimedEvent::new("b", 1.0)]).is_ok());
    }

    #[test]
    fn transition_key_text_form() {
        let k: TransitionKey = "sleep->rx".parse().unwrap();
        assert_eq!(k, TransitionKey::new("sleep", "rx"));
        assert_eq!(k.to_string(), "sleep->rx");
        assert!("sleep".parse::<TransitionKey>().is_err());
    }

    #[test]
    fn model_json_field_names() {
        let json = serde_json::to_value(three_state()).unwrap();
        assert_eq!(json["supply_voltage_v"], 3.0);
        assert_eq!(json["states"][1]["avg_current_a"], 0.015);
        assert_eq!(json["transitions"][0]["duration_s"], 0.1);
        assert_eq!(json["transitions"][0]["from"], "sleep");
        assert!(json["events"].as_array().unwrap().is_empty());
    }
}
