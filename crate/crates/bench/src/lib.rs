//! Fixture builders shared by the criterion benches.

use radio_energy::analysis::demo_sensor_sweep;
use radio_energy::calibration::Observation;
use radio_energy::workload::{gen_sensor_workload, SensorWorkloadParams};
use radio_energy::{estimate_with_events, CurrentTrace, EnergyModel, SynthesisSpec, Timeline};

/// Demo truth model and a sensor timeline at `rate` packets/s over `duration` s.
pub fn sensor_fixture(rate: f64, duration: f64) -> (EnergyModel, Timeline) {
    let mut cfg = demo_sensor_sweep();
    cfg.duration = duration;
    let timeline = gen_sensor_workload(&cfg.workload(rate)).expect("feasible demo workload");
    (cfg.model_truth, timeline)
}

/// Synthesized trace of [`sensor_fixture`] at the given sample period.
pub fn trace_fixture(rate: f64, duration: f64, sample_period: f64) -> (EnergyModel, CurrentTrace) {
    let (model, timeline) = sensor_fixture(rate, duration);
    let spec = SynthesisSpec::new(sample_period).with_noise(1e-4, 1);
    let trace = radio_energy::trace::synthesize_trace(&model, &timeline, &spec).expect("valid fixture");
    (model, trace)
}

/// Observations from sensor workloads with varying rates and packet
/// timings, against the three-state demo model.
pub fn observation_fixture(runs: usize) -> (EnergyModel, Vec<Observation>) {
    let cfg = demo_sensor_sweep();
    let model = cfg.model_naive;
    let obs = (0..runs)
        .map(|k| {
            let params = SensorWorkloadParams::new(
                1.0 + k as f64 * 0.7,
                2.0 + (k % 5) as f64,
                0.005 + 0.001 * (k % 7) as f64,
                0.004 + 0.002 * (k % 3) as f64,
            );
            let t = gen_sensor_workload(&params).expect("feasible fixture");
            let e = estimate_with_events(&model, &t).expect("valid fixture").total;
            Observation::from_timeline(&model, &t, e)
        })
        .collect();
    (model, obs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_fixture_is_identifiable() {
        let (model, obs) = observation_fixture(40);
        radio_energy::calibration::fit_ols(&obs, &model).unwrap();
    }
}
