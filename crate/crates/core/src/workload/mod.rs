//! Deterministic synthetic timelines for two scenarios: a duty-cycled
//! sensor forwarder under a fixed packet rate, and an 802.11 station with
//! optional power-save mode and periodic beacons.

mod sensor;
mod wifi;

use crate::model::StateInterval;

pub use sensor::{gen_sensor_workload, SensorWorkloadParams};
pub use wifi::{gen_wifi_psm_workload, BurstDirection, TrafficBurst, WifiWorkloadParams, DEFAULT_WAKE_DURATION};

/// State and event names the generators emit.
pub mod names {
    pub const SLEEP: &str = "sleep";
    pub const RX: &str = "rx";
    pub const TX: &str = "tx";
    pub const IDLE: &str = "idle";
    pub const DISCONNECTED: &str = "disconnected";
    pub const BEACON: &str = "beacon";
}

/// `floor(x)` tolerant of products like `0.1 * 30` landing a hair below an integer.
pub(crate) fn floor_count(x: f64) -> u64 {
    (x + 1e-9 * x.abs().max(1.0)).floor().max(0.0) as u64
}

/// Converts labeled absolute breakpoints into intervals, merging
/// neighbours in the same state. `pieces` must tile the span in order.
pub(crate) fn intervals_from_pieces(pieces: &[(f64, f64, &str)]) -> Vec<StateInterval> {
    let mut out: Vec<(f64, f64, &str)> = Vec::with_capacity(pieces.len());
    for &(start, end, state) in pieces {
        match out.last_mut() {
            Some(last) if last.2 == state => last.1 = end,
            _ => out.push((start, end, state)),
        }
    }
    out.into_iter()
        .map(|(s, e, state)| StateInterval::new(state, e - s))
        .collect()
}
