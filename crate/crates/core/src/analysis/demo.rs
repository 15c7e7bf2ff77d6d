//! Synthetic forwarder scenario whose transition costs are solved so the
//! plain three-state estimator is off by a chosen percentage at the top
//! traffic rate. The numbers are illustrative, not measured hardware.

use super::SweepConfig;
use crate::model::{EnergyModel, PowerState, TransitionSpec};
use crate::trace::{SynthesisSpec, TransitionShape};
use crate::workload::names::{RX, SLEEP, TX};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoTargets {
    /// Naive-estimator error at the top rate, percent.
    pub naive_error_pct: f64,
    /// Upper bound on the transition-aware error, percent.
    pub improved_error_max_pct: f64,
}

pub const DEMO_TARGETS: DemoTargets = DemoTargets {
    naive_error_pct: 4.0,
    improved_error_max_pct: 1.5,
};

const VOLTAGE: f64 = 3.0;
const I_SLEEP: f64 = 0.0005;
const I_RX: f64 = 0.020;
const I_TX: f64 = 0.025;
const RX_TIME: f64 = 0.010;
const TX_TIME: f64 = 0.010;
const DURATION: f64 = 10.0;
const RATES: [f64; 6] = [2.0, 4.0, 8.0, 12.0, 16.0, 20.0];

// settling windows; the sleep->rx current is solved below
const D_SLEEP_RX: f64 = 0.0015;
const D_RX_TX: f64 = 0.0005;
const I_RX_TX: f64 = 0.012;
const D_TX_SLEEP: f64 = 0.0005;
const I_TX_SLEEP: f64 = 0.007;

/// Builds the demo sweep, solving the `sleep -> rx` transition current so
/// that at the top rate `(E_naive - E_true) / E_true = naive_error_pct / 100`.
///
/// With `n` packets per run, each packet's switches save
/// `X = U * sum((I_dest - I_tr) * d)` relative to the naive estimate, so
/// `E_true = E_naive - n X`. Solving `n X / (E_naive - n X) = e` gives
/// `X = e E_naive / ((1 + e) n)`.
pub fn demo_sensor_sweep() -> SweepConfig {
    let top = RATES[RATES.len() - 1];
    let n = (top * DURATION).floor();
    let active = RX_TIME + TX_TIME;
    let naive_charge = I_SLEEP * (DURATION - n * active) + n * (I_RX * RX_TIME + I_TX * TX_TIME);
    let e = DEMO_TARGETS.naive_error_pct / 100.0;
    let saving_per_packet = e * naive_charge / ((1.0 + e) * n);
    let fixed = (I_TX - I_RX_TX) * D_RX_TX + (I_SLEEP - I_TX_SLEEP) * D_TX_SLEEP;
    let i_sleep_rx = I_RX - (saving_per_packet - fixed) / D_SLEEP_RX;

    let naive = EnergyModel::new(
        VOLTAGE,
        vec![
            PowerState::new(SLEEP, I_SLEEP),
            PowerState::new(RX, I_RX),
            PowerState::new(TX, I_TX),
        ],
    );
    let truth = naive
        .clone()
        .with_transition(TransitionSpec::new(SLEEP, RX, D_SLEEP_RX, i_sleep_rx))
        .with_transition(TransitionSpec::new(RX, TX, D_RX_TX, I_RX_TX))
        .with_transition(TransitionSpec::new(TX, SLEEP, D_TX_SLEEP, I_TX_SLEEP));

    let synthesis = SynthesisSpec::new(1e-5)
        .with_shape(TransitionShape::LinearRamp)
        .with_noise(2e-4, 0x5eed);

    SweepConfig {
        rates: RATES.to_vec(),
        duration: DURATION,
        rx_time_per_packet: RX_TIME,
        tx_time_per_packet: TX_TIME,
        model_truth: truth,
        model_naive: naive,
        synthesis,
        runs_per_rate: 20,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{estimate_basic, estimate_with_transitions};
    use crate::workload::gen_sensor_workload;

    #[test]
    fn solved_current_is_physical() {
        let cfg = demo_sensor_sweep();
        assert!(cfg.model_truth.validate().is_empty());
        let t = cfg.model_truth.transition(SLEEP, RX).unwrap();
        assert!(t.avg_current > I_SLEEP && t.avg_current < I_RX, "{}", t.avg_current);
    }

    #[test]
    fn ramp_apexes_stay_non_negative() {
        let m = demo_sensor_sweep().model_truth;
        for t in &m.transitions {
            let from = m.state(&t.from).unwrap().avg_current;
            let to = m.state(&t.to).unwrap().avg_current;
            assert!(4.0 * t.avg_current - from - to >= 0.0, "{}", t.key());
        }
    }

    #[test]
    fn estimators_hit_the_target_gap() {
        let cfg = demo_sensor_sweep();
        let tl = gen_sensor_workload(&cfg.workload(20.0)).unwrap();
        let naive = estimate_basic(&cfg.model_naive, &tl).unwrap().total;
        let truth = estimate_with_transitions(&cfg.model_truth, &tl).unwrap().total;
        assert!((100.0 * (naive - truth) / truth - 4.0).abs() < 1e-9);
    }
}
