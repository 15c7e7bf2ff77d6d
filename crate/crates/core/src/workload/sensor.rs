use serde::{Deserialize, Serialize};

use super::names::{RX, SLEEP, TX};
use super::floor_count;
use crate::error::{Error, Result};
use crate::model::{StateInterval, Timeline};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorWorkloadParams {
    #[serde(rename = "traffic_rate_pps")]
    pub traffic_rate: f64,
    #[serde(rename = "duration_s")]
    pub duration: f64,
    #[serde(rename = "rx_time_per_packet_s")]
    pub rx_time_per_packet: f64,
    #[serde(rename = "tx_time_per_packet_s")]
    pub tx_time_per_packet: f64,
    /// Carried for parameter files. Transition costs live in the energy
    /// model, so the generated timeline is the same either way.
    #[serde(default)]
    pub include_transitions: bool,
}

impl SensorWorkloadParams {
    pub fn new(traffic_rate: f64, duration: f64, rx_time_per_packet: f64, tx_time_per_packet: f64) -> Self {
        Self {
            traffic_rate,
            duration,
            rx_time_per_packet,
            tx_time_per_packet,
            include_transitions: false,
        }
    }

    /// Number of forwarded packets: `floor(rate * duration)`.
    pub fn packet_count(&self) -> u64 {
        floor_count(self.traffic_rate * self.duration)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("traffic_rate_pps", self.traffic_rate),
            ("duration_s", self.duration),
            ("rx_time_per_packet_s", self.rx_time_per_packet),
            ("tx_time_per_packet_s", self.tx_time_per_packet),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        let active = self.rx_time_per_packet + self.tx_time_per_packet;
        if active * self.traffic_rate > 1.0 + 1e-12 {
            return Err(Error::InfeasibleSchedule(format!(
                "{active} s of activity per packet exceeds the {} s inter-arrival time",
                1.0 / self.traffic_rate
            )));
        }
        Ok(())
    }
}

/// Forwarder timeline: packet `k` occupies slot `[k/r, (k+1)/r)` with its
/// receive-then-transmit burst centred in the slot, sleep elsewhere.
///
/// Centring gives every packet a leading and trailing sleep, so a strictly
/// feasible schedule has exactly `3 * floor(r * D)` state switches.
pub fn gen_sensor_workload(params: &SensorWorkloadParams) -> Result<Timeline> {
    params.validate()?;
    let n = params.packet_count();
    let d = params.duration;
    if n == 0 {
        return Timeline::from_intervals(vec![StateInterval::new(SLEEP, d)]);
    }

    let slot = 1.0 / params.traffic_rate;
    let rx = params.rx_time_per_packet;
    let active = rx + params.tx_time_per_packet;
    let lead = 0.5 * (slot - active).max(0.0);

    let mut intervals = Vec::with_capacity(3 * n as usize + 1);
    let mut cursor = 0.0;
    for k in 0..n {
        let start = k as f64 * slot + lead;
        let rx_end = start + rx;
        let tx_end = start + active;
        if start > cursor {
            intervals.push(StateInterval::new(SLEEP, start - cursor));
        }
        intervals.push(StateInterval::new(RX, rx_end - start));
        intervals.push(StateInterval::new(TX, tx_end - rx_end));
        cursor = tx_end;
    }
    if d > cursor {
        intervals.push(StateInterval::new(SLEEP, d - cursor));
    }
    Timeline::from_intervals(intervals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn switches(t: &Timeline) -> u64 {
        t.transition_counts().values().sum()
    }

    #[test]
    fn zero_rate_is_all_sleep() {
        let t = gen_sensor_workload(&SensorWorkloadParams::new(0.0, 10.0, 0.01, 0.01)).unwrap();
        assert_eq!(t.intervals(), &[StateInterval::new("sleep", 10.0)]);
    }

    #[test]
    fn counts_on_the_grid() {
        let t = gen_sensor_workload(&SensorWorkloadParams::new(3.5, 2.0, 0.01, 0.02)).unwrap();
        let count = |s: &str| t.intervals().iter().filter(|i| i.state == s).count();
        assert_eq!(count("rx"), 7);
        assert_eq!(count("tx"), 7);
        assert_eq!(switches(&t), 21);
        assert!((t.total_duration() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn doubling_rate_doubles_switches() {
        for r in [1.0, 2.5, 5.0] {
            let a = gen_sensor_workload(&SensorWorkloadParams::new(r, 10.0, 0.01, 0.01)).unwrap();
            let b = gen_sensor_workload(&SensorWorkloadParams::new(2.0 * r, 10.0, 0.01, 0.01)).unwrap();
            assert_eq!(2 * switches(&a), switches(&b));
        }
    }

    #[test]
    fn infeasible_schedule() {
        let err = gen_sensor_workload(&SensorWorkloadParams::new(60.0, 1.0, 0.01, 0.01)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleSchedule(_)));
        assert!(gen_sensor_workload(&SensorWorkloadParams::new(50.0, 1.0, 0.01, 0.01)).is_ok());
    }

    #[test]
    fn rejects_negative_times() {
        assert!(gen_sensor_workload(&SensorWorkloadParams::new(1.0, 1.0, -0.01, 0.01)).is_err());
    }
}
