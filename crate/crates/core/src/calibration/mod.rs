//! Least-squares calibration of model currents and charges from aggregate
//! per-run observations, plus the error and confidence-interval statistics
//! used to judge estimators.
//!
//! The regression has no intercept. Row `k` of the design matrix is
//! `U * [T_k(s_1) .. T_k(s_N), C_k(tr_1) .., C_k(ev_1) ..]` and the response
//! is the measured energy of run `k`. State columns fit average currents;
//! transition and event columns fit charges.
//!
//! A transition charge is the excess over the destination state during the
//! transition window, because logged state times already include that
//! window at the destination current.

mod qr;
mod stats;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EnergyModel, EventSpec, PowerState, Timeline, TransitionKey, TransitionSpec};

pub use stats::{confidence_interval, estimation_error, mean, sample_std_dev, DEFAULT_CONFIDENCE};

/// One run's aggregate activity and its measured energy.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation {
    pub state_times: BTreeMap<String, f64>,
    pub transition_counts: BTreeMap<TransitionKey, f64>,
    pub event_counts: BTreeMap<String, f64>,
    #[serde(rename = "energy_j")]
    pub measured_energy: f64,
}

impl Observation {
    /// Aggregates a logged timeline. Only transitions the model has a spec
    /// for are counted.
    pub fn from_timeline(model: &EnergyModel, timeline: &Timeline, measured_energy: f64) -> Self {
        let transition_counts = timeline
            .transition_counts()
            .into_iter()
            .filter(|(k, _)| model.transition(&k.from, &k.to).is_some())
            .map(|(k, n)| (k, n as f64))
            .collect();
        Self {
            state_times: timeline.state_times(),
            transition_counts,
            event_counts: timeline
                .event_counts()
                .into_iter()
                .map(|(k, n)| (k, n as f64))
                .collect(),
            measured_energy,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParams(format!("observation {what}")));
        for (s, t) in &self.state_times {
            if !(t.is_finite() && *t >= 0.0) {
                return bad(format!("time for `{s}` = {t}"));
            }
        }
        for (k, c) in &self.transition_counts {
            if !(c.is_finite() && *c >= 0.0) {
                return bad(format!("count for `{k}` = {c}"));
            }
        }
        for (k, c) in &self.event_counts {
            if !(c.is_finite() && *c >= 0.0) {
                return bad(format!("count for `{k}` = {c}"));
            }
        }
        if !self.measured_energy.is_finite() {
            return bad(format!("energy = {}", self.measured_energy));
        }
        Ok(())
    }
}

/// Column name of a state-time regressor, as used in observation CSVs.
pub fn state_column(state: &str) -> String {
    format!("t_{state}")
}

pub fn transition_column(key: &TransitionKey) -> String {
    format!("n_{}__{}", key.from, key.to)
}

pub fn event_column(kind: &str) -> String {
    format!("n_ev_{kind}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    #[serde(rename = "state_currents_a")]
    pub state_currents: BTreeMap<String, f64>,
    #[serde(rename = "transition_charges_c")]
    pub transition_charges: BTreeMap<TransitionKey, f64>,
    #[serde(rename = "event_charges_c")]
    pub event_charges: BTreeMap<String, f64>,
    #[serde(rename = "residual_rms_j")]
    pub residual_rms: f64,
    pub r_squared: f64,
    /// Standard error of each fitted coefficient, keyed by column name.
    #[serde(default)]
    pub std_errors: BTreeMap<String, f64>,
}

impl CalibrationResult {
    /// Writes the fitted values back into a copy of the skeleton.
    ///
    /// A transition with a positive duration gets `avg_current = I_to + q / d`
    /// so that the transition-aware estimator reproduces the fitted charge.
    /// Zero-duration transitions keep their skeleton current; their charge
    /// is only available from [`CalibrationResult::transition_charges`].
    pub fn to_model(&self, skeleton: &EnergyModel) -> EnergyModel {
        let states: Vec<PowerState> = skeleton
            .states
            .iter()
            .map(|s| PowerState::new(&s.name, self.state_currents.get(&s.name).copied().unwrap_or(s.avg_current)))
            .collect();
        let transitions = skeleton
            .transitions
            .iter()
            .map(|t| {
                let q = self.transition_charges.get(&t.key()).copied();
                let current = match q {
                    Some(q) if t.duration > 0.0 => {
                        let to = states.iter().find(|s| s.name == t.to).map_or(0.0, |s| s.avg_current);
                        to + q / t.duration
                    }
                    _ => t.avg_current,
                };
                TransitionSpec::new(&t.from, &t.to, t.duration, current)
            })
            .collect();
        let events = skeleton
            .events
            .iter()
            .map(|e| EventSpec::new(&e.kind, self.event_charges.get(&e.kind).copied().unwrap_or(e.charge)))
            .collect();
        EnergyModel {
            supply_voltage: skeleton.supply_voltage,
            states,
            transitions,
            events,
        }
    }
}

enum Column {
    State(String),
    Transition(TransitionKey),
    Event(String),
}

impl Column {
    fn name(&self) -> String {
        match self {
            Column::State(s) => state_column(s),
            Column::Transition(k) => transition_column(k),
            Column::Event(e) => event_column(e),
        }
    }

    fn value(&self, obs: &Observation) -> f64 {
        match self {
            Column::State(s) => obs.state_times.get(s).copied(),
            Column::Transition(k) => obs.transition_counts.get(k).copied(),
            Column::Event(e) => obs.event_counts.get(e).copied(),
        }
        .unwrap_or(0.0)
    }
}

fn columns_of(skeleton: &EnergyModel) -> Vec<Column> {
    skeleton
        .states
        .iter()
        .map(|s| Column::State(s.name.clone()))
        .chain(skeleton.transitions.iter().map(|t| Column::Transition(t.key())))
        .chain(skeleton.events.iter().map(|e| Column::Event(e.kind.clone())))
        .collect()
}

fn check_names(obs: &Observation, skeleton: &EnergyModel) -> Result<()> {
    for s in obs.state_times.keys() {
        if skeleton.state(s).is_none() {
            return Err(Error::UnknownName(state_column(s)));
        }
    }
    for k in obs.transition_counts.keys() {
        if skeleton.transition(&k.from, &k.to).is_none() {
            return Err(Error::UnknownName(transition_column(k)));
        }
    }
    for e in obs.event_counts.keys() {
        if skeleton.event(e).is_none() {
            return Err(Error::UnknownName(event_column(e)));
        }
    }
    Ok(())
}

/// Ordinary least squares fit of state currents and transition/event
/// charges, solved by Householder QR.
///
/// The skeleton supplies the supply voltage and the set of unknowns; its
/// current and charge values are ignored.
pub fn fit_ols(observations: &[Observation], skeleton: &EnergyModel) -> Result<CalibrationResult> {
    skeleton.ensure_valid()?;
    let cols = columns_of(skeleton);
    if observations.len() < cols.len() {
        return Err(Error::TooFewObservations {
            got: observations.len(),
            unknowns: cols.len(),
        });
    }
    for obs in observations {
        obs.validate()?;
        check_names(obs, skeleton)?;
    }

    let u = skeleton.supply_voltage;
    let design: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| observations.iter().map(|o| u * c.value(o)).collect())
        .collect();
    let energies: Vec<f64> = observations.iter().map(|o| o.measured_energy).collect();

    let ls = qr::lstsq(&design, &energies).map_err(|dep| Error::RankDeficient {
        columns: dep.0.iter().map(|&j| cols[j].name()).collect(),
    })?;

    let m = observations.len();
    let p = cols.len();
    let rss: f64 = ls.residuals.iter().map(|r| r * r).sum();
    let sst: f64 = energies.iter().map(|e| e * e).sum();
    let residual_rms = (rss / m as f64).sqrt();
    // uncentered, as appropriate for a fit through the origin
    let r_squared = if sst > 0.0 { (1.0 - rss / sst).clamp(0.0, 1.0) } else { 1.0 };
    let sigma2 = if m > p { rss / (m - p) as f64 } else { 0.0 };

    let mut result = CalibrationResult {
        state_currents: BTreeMap::new(),
        transition_charges: BTreeMap::new(),
        event_charges: BTreeMap::new(),
        residual_rms,
        r_squared,
        std_errors: BTreeMap::new(),
    };
    for (j, c) in cols.iter().enumerate() {
        let x = ls.coef[j];
        result.std_errors.insert(c.name(), (sigma2 * ls.cov_diag[j]).sqrt());
        match c {
            Column::State(s) => result.state_currents.insert(s.clone(), x),
            Column::Transition(k) => result.transition_charges.insert(k.clone(), x),
            Column::Event(e) => result.event_charges.insert(e.clone(), x),
        };
    }
    Ok(result)
}

/// Energy the fitted model predicts for an observation.
pub fn predict(result: &CalibrationResult, obs: &Observation, supply_voltage: f64) -> Result<f64> {
    let mut sum = 0.0;
    for (s, t) in &obs.state_times {
        let i = result
            .state_currents
            .get(s)
            .ok_or_else(|| Error::UnknownName(state_column(s)))?;
        sum += t * i;
    }
    for (k, n) in &obs.transition_counts {
        let q = result
            .transition_charges
            .get(k)
            .ok_or_else(|| Error::UnknownName(transition_column(k)))?;
        sum += n * q;
    }
    for (e, n) in &obs.event_counts {
        let q = result
            .event_charges
            .get(e)
            .ok_or_else(|| Error::UnknownName(event_column(e)))?;
        sum += n * q;
    }
    Ok(supply_voltage * sum)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn obs(times: &[(&str, f64)], energy: f64) -> Observation {
        Observation {
            state_times: times.iter().map(|(s, t)| (s.to_string(), *t)).collect(),
            measured_energy: energy,
            ..Default::default()
        }
    }

    #[test]
    fn one_by_one() {
        let sk = EnergyModel::new(3.0, vec![PowerState::new("a", 0.0)]);
        let r = fit_ols(&[obs(&[("a", 1.0)], 3.0)], &sk).unwrap();
        assert_eq!(r.state_currents["a"], 1.0);
        assert_eq!(r.r_squared, 1.0);
        assert_eq!(r.residual_rms, 0.0);
    }

    #[test]
    fn too_few_observations() {
        let sk = EnergyModel::new(3.0, vec![PowerState::new("a", 0.0), PowerState::new("b", 0.0)]);
        let err = fit_ols(&[obs(&[("a", 1.0)], 3.0)], &sk).unwrap_err();
        assert!(matches!(err, Error::TooFewObservations { got: 1, unknowns: 2 }));
    }

    #[test]
    fn rank_deficient_names_columns() {
        // fixed run length: t_a + t_b constant, and transition count tied to t_b
        let sk = EnergyModel::new(1.0, vec![PowerState::new("a", 0.0), PowerState::new("b", 0.0)])
            .with_transition(TransitionSpec::new("a", "b", 0.0, 0.0));
        let rows: Vec<Observation> = (1..=5)
            .map(|k| {
                let mut o = obs(&[("a", 10.0 - k as f64), ("b", k as f64)], k as f64);
                o.transition_counts.insert(TransitionKey::new("a", "b"), 2.0 * k as f64);
                o
            })
            .collect();
        match fit_ols(&rows, &sk).unwrap_err() {
            Error::RankDeficient { columns } => {
                assert_eq!(columns, vec!["n_a__b".to_string(), "t_b".to_string()]);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_name_in_observation() {
        let sk = EnergyModel::new(1.0, vec![PowerState::new("a", 0.0)]);
        let err = fit_ols(&[obs(&[("z", 1.0)], 1.0)], &sk).unwrap_err();
        assert!(matches!(err, Error::UnknownName(n) if n == "t_z"));
    }

    #[test]
    fn predict_arithmetic() {
        let r = CalibrationResult {
            state_currents: [("a".to_string(), 1.0)].into(),
            transition_charges: BTreeMap::new(),
            event_charges: BTreeMap::new(),
            residual_rms: 0.0,
            r_squared: 1.0,
            std_errors: BTreeMap::new(),
        };
        assert_eq!(predict(&r, &obs(&[("a", 2.0)], 0.0), 3.0).unwrap(), 6.0);
        assert_eq!(predict(&r, &Observation::default(), 3.0).unwrap(), 0.0);
        assert!(matches!(predict(&r, &obs(&[("b", 1.0)], 0.0), 3.0), Err(Error::UnknownName(_))));
    }

    #[test]
    fn to_model_converts_excess_charge() {
        let sk = EnergyModel::new(2.0, vec![PowerState::new("a", 0.0), PowerState::new("b", 0.0)])
            .with_transition(TransitionSpec::new("a", "b", 0.01, 0.0));
        let r = CalibrationResult {
            state_currents: [("a".to_string(), 0.001), ("b".to_string(), 0.02)].into(),
            transition_charges: [(TransitionKey::new("a", "b"), -1e-4)].into(),
            event_charges: BTreeMap::new(),
            residual_rms: 0.0,
            r_squared: 1.0,
            std_errors: BTreeMap::new(),
        };
        let m = r.to_model(&sk);
        assert_relative_eq!(m.transitions[0].avg_current, 0.02 - 0.01, max_relative = 1e-12);
        assert_eq!(m.states[1].avg_current, 0.02);
    }
}
