use std::collections::BTreeMap;

use super::{EnergyModel, EnergyReport, Timeline, TransitionKey};
use crate::error::Result;

/// Plain state-based estimate: each state's residency times its average
/// current times the supply voltage, summed over states.
pub fn estimate_basic(model: &EnergyModel, timeline: &Timeline) -> Result<EnergyReport> {
    model.ensure_valid()?;
    timeline.check_states(model)?;

    let mut report = EnergyReport::default();
    for (state, time) in timeline.state_times() {
        let current = model.state_current(&state)?;
        report
            .per_state
            .insert(state, model.supply_voltage * (current * time));
    }
    Ok(report.finish())
}

/// Transition-aware estimate.
///
/// At every switch `s -> t` with a [`TransitionSpec`](super::TransitionSpec),
/// the first `duration` seconds of the `t` interval (clamped to its length)
/// are charged at the transition current instead of `t`'s current. Switches
/// without a spec are instantaneous.
pub fn estimate_with_transitions(model: &EnergyModel, timeline: &Timeline) -> Result<EnergyReport> {
    model.ensure_valid()?;
    timeline.check_states(model)?;

    let mut state_time: BTreeMap<String, f64> = BTreeMap::new();
    let mut carved: BTreeMap<TransitionKey, f64> = BTreeMap::new();
    let mut prev: Option<&str> = None;

    for iv in timeline.intervals() {
        let mut remaining = iv.duration;
        if let Some(from) = prev.filter(|p| *p != iv.state) {
            if let Some(spec) = model.transition(from, &iv.state) {
                let carve = spec.duration.min(iv.duration);
                *carved.entry(spec.key()).or_insert(0.0) += carve;
                remaining = iv.duration - carve;
            }
        }
        *state_time.entry(iv.state.clone()).or_insert(0.0) += remaining;
        prev = Some(&iv.state);
    }

    let u = model.supply_voltage;
    let mut report = EnergyReport::default();
    for (state, time) in state_time {
        let current = model.state_current(&state)?;
        report.per_state.insert(state, u * (current * time));
    }
    for (key, time) in carved {
        // present in the map only because the transition spec exists
        let current = model
            .transition(&key.from, &key.to)
            .map(|t| t.avg_current)
            .unwrap_or_default();
        report.per_transition.insert(key, u * (current * time));
    }
    Ok(report.finish())
}

/// Transition-aware estimate plus a fixed excess charge per logged event.
pub fn estimate_with_events(model: &EnergyModel, timeline: &Timeline) -> Result<EnergyReport> {
    timeline.check_events(model)?;
    let mut report = estimate_with_transitions(model, timeline)?;
    for (kind, count) in timeline.event_counts() {
        let charge = model.event(&kind).map(|e| e.charge).unwrap_or_default();
        report
            .per_event
            .insert(kind, model.supply_voltage * (charge * count as f64));
    }
    Ok(report.finish())
}
