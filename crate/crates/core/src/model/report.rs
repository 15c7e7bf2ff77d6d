use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TransitionKey;

/// Energy breakdown produced by the estimators, in joules.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    #[serde(rename = "per_state_j")]
    pub per_state: BTreeMap<String, f64>,
    #[serde(rename = "per_transition_j")]
    pub per_transition: BTreeMap<TransitionKey, f64>,
    #[serde(rename = "per_event_j")]
    pub per_event: BTreeMap<String, f64>,
    #[serde(rename = "total_j")]
    pub total: f64,
}

impl EnergyReport {
    /// Sum of every breakdown entry.
    pub fn component_sum(&self) -> f64 {
        self.per_state.values().sum::<f64>()
            + self.per_transition.values().sum::<f64>()
            + self.per_event.values().sum::<f64>()
    }

    pub(crate) fn finish(mut self) -> Self {
        self.total = self.component_sum();
        self
    }
}
