use serde::{Deserialize, Serialize};

use super::names::{BEACON, DISCONNECTED, IDLE, RX, SLEEP, TX};
use super::{floor_count, intervals_from_pieces};
use crate::error::{Error, Result};
use crate::model::{TimedEvent, Timeline};

/// Awake time per beacon in power-save mode. Synthetic default.
pub const DEFAULT_WAKE_DURATION: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BurstDirection {
    Rx,
    Tx,
}

/// A traffic burst, timed relative to the start of the connected period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficBurst {
    #[serde(rename = "start_s")]
    pub start: f64,
    #[serde(rename = "duration_s")]
    pub duration: f64,
    pub direction: BurstDirection,
}

impl TrafficBurst {
    pub fn new(start: f64, duration: f64, direction: BurstDirection) -> Self {
        Self {
            start,
            duration,
            direction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WifiWorkloadParams {
    #[serde(rename = "disconnected_duration_s", default)]
    pub disconnected_duration: f64,
    #[serde(rename = "connecting_duration_s")]
    pub connecting_duration: f64,
    #[serde(rename = "connected_duration_s")]
    pub connected_duration: f64,
    #[serde(rename = "beacon_interval_s", default = "default_beacon_interval")]
    pub beacon_interval: f64,
    pub psm_enabled: bool,
    #[serde(rename = "wake_duration_s", default = "default_wake")]
    pub wake_duration: f64,
    #[serde(default)]
    pub traffic_bursts: Vec<TrafficBurst>,
}

fn default_beacon_interval() -> f64 {
    0.1
}

fn default_wake() -> f64 {
    DEFAULT_WAKE_DURATION
}

impl WifiWorkloadParams {
    pub fn new(connecting_duration: f64, connected_duration: f64, psm_enabled: bool) -> Self {
        Self {
            disconnected_duration: 0.0,
            connecting_duration,
            connected_duration,
            beacon_interval: default_beacon_interval(),
            psm_enabled,
            wake_duration: DEFAULT_WAKE_DURATION,
            traffic_bursts: Vec::new(),
        }
    }

    pub fn with_bursts(mut self, bursts: Vec<TrafficBurst>) -> Self {
        self.traffic_bursts = bursts;
        self
    }

    /// `floor(connected_duration / beacon_interval)`.
    pub fn beacon_count(&self) -> u64 {
        floor_count(self.connected_duration / self.beacon_interval)
    }

    fn validate(&self) -> Result<Vec<TrafficBurst>> {
        for (name, v) in [
            ("disconnected_duration_s", self.disconnected_duration),
            ("connecting_duration_s", self.connecting_duration),
            ("connected_duration_s", self.connected_duration),
            ("wake_duration_s", self.wake_duration),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        if !(self.beacon_interval.is_finite() && self.beacon_interval > 0.0) {
            return Err(Error::InvalidParams(format!(
                "beacon_interval_s = {} must be > 0",
                self.beacon_interval
            )));
        }
        let mut bursts = self.traffic_bursts.clone();
        for b in &bursts {
            if !(b.start.is_finite() && b.duration.is_finite() && b.start >= 0.0 && b.duration >= 0.0)
                || b.start + b.duration > self.connected_duration + 1e-12
            {
                return Err(Error::InvalidParams(format!(
                    "burst at {} s for {} s lies outside the {} s connected period",
                    b.start, b.duration, self.connected_duration
                )));
            }
        }
        bursts.sort_by(|a, b| a.start.total_cmp(&b.start));
        for w in bursts.windows(2) {
            if w[1].start < w[0].start + w[0].duration {
                return Err(Error::OverlappingBursts(format!(
                    "burst at {} s overlaps burst at {} s",
                    w[1].start, w[0].start
                )));
            }
        }
        Ok(bursts)
    }
}

/// Station timeline: disconnected, then the connecting phase, then the
/// connected period.
///
/// The connecting phase is emitted as `idle` time directly after
/// `disconnected`; a `disconnected -> idle` transition spec in the model is
/// what charges it at the connecting current. During the connected period,
/// bursts become `rx`/`tx` intervals. Without power save the rest is
/// `idle`; with power save the rest is `sleep` except a `wake_duration`
/// slice of `idle` at every beacon. Beacon events fall at
/// `connected_start + k * beacon_interval` for `k < beacon_count()`.
pub fn gen_wifi_psm_workload(params: &WifiWorkloadParams) -> Result<Timeline> {
    let bursts = params.validate()?;

    let c0 = params.disconnected_duration + params.connecting_duration;
    let c_end = c0 + params.connected_duration;
    let count = params.beacon_count();

    // connected-period pieces, absolute times
    let mut awake: Vec<(f64, f64, &str)> = bursts
        .iter()
        .filter(|b| b.duration > 0.0)
        .map(|b| {
            let s = if b.direction == BurstDirection::Rx { RX } else { TX };
            (c0 + b.start, c0 + b.start + b.duration, s)
        })
        .collect();
    if params.psm_enabled {
        let mut wakes = Vec::new();
        for k in 0..count {
            let s = c0 + k as f64 * params.beacon_interval;
            let e = (s + params.wake_duration).min(c_end);
            subtract_into(&mut wakes, s, e, &awake);
        }
        awake.extend(wakes.into_iter().map(|(s, e)| (s, e, IDLE)));
        awake.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let background = if params.psm_enabled { SLEEP } else { IDLE };

    let mut pieces: Vec<(f64, f64, &str)> = vec![
        (0.0, params.disconnected_duration, DISCONNECTED),
        (params.disconnected_duration, c0, IDLE),
    ];
    let mut cursor = c0;
    for &(s, e, state) in &awake {
        if s > cursor {
            pieces.push((cursor, s, background));
        }
        if e > s {
            pieces.push((s, e, state));
        }
        cursor = cursor.max(e);
    }
    if c_end > cursor {
        pieces.push((cursor, c_end, background));
    }
    let intervals = intervals_from_pieces(&pieces);

    let events = (0..count)
        .map(|k| TimedEvent::new(BEACON, c0 + k as f64 * params.beacon_interval))
        .collect();
    Timeline::new(intervals, events)
}

/// Appends the parts of `[s, e)` not covered by any of `covered`.
fn subtract_into(out: &mut Vec<(f64, f64)>, s: f64, e: f64, covered: &[(f64, f64, &str)]) {
    let mut start = s;
    for &(cs, ce, _) in covered {
        if ce <= start || cs >= e {
            continue;
        }
        if cs > start {
            out.push((start, cs));
        }
        start = start.max(ce);
        if start >= e {
            return;
        }
    }
    if e > start {
        out.push((start, e));
    }
}
