use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::{EnergyReport, TransitionKey};

/// Difference between two values of the same report entry. Missing
/// entries count as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Delta {
    #[serde(rename = "a_j")]
    pub a: f64,
    #[serde(rename = "b_j")]
    pub b: f64,
    /// `|b - a|` in joules.
    #[serde(rename = "abs_j")]
    pub absolute: f64,
    /// `|b - a| / |a|`; zero when both are zero, infinite when only `a` is.
    pub relative: f64,
}

impl Delta {
    pub fn new(a: f64, b: f64) -> Self {
        let absolute = (b - a).abs();
        let relative = if absolute == 0.0 {
            0.0
        } else if a == 0.0 {
            f64::INFINITY
        } else {
            absolute / a.abs()
        };
        Self { a, b, absolute, relative }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportComparison {
    pub per_state: BTreeMap<String, Delta>,
    pub per_transition: BTreeMap<TransitionKey, Delta>,
    pub per_event: BTreeMap<String, Delta>,
    pub total: Delta,
}

fn zip_maps<K: Ord + Clone>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> BTreeMap<K, Delta> {
    let keys: BTreeSet<&K> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| {
            let x = a.get(k).copied().unwrap_or(0.0);
            let y = b.get(k).copied().unwrap_or(0.0);
            (k.clone(), Delta::new(x, y))
        })
        .collect()
}

pub fn compare_reports(a: &EnergyReport, b: &EnergyReport) -> ReportComparison {
    ReportComparison {
        per_state: zip_maps(&a.per_state, &b.per_state),
        per_transition: zip_maps(&a.per_transition, &b.per_transition),
        per_event: zip_maps(&a.per_event, &b.per_event),
        total: Delta::new(a.total, b.total),
    }
}
