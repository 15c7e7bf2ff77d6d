//! Ground-truth current traces.
//!
//! A [`CurrentTrace`] is a uniformly sampled current series; sample `i` is
//! taken at `i * sample_period`. Its trapezoidal integral times the supply
//! voltage is the "measured" energy the estimators are judged against.

mod peaks;
mod segment;
mod synth;

use crate::error::{Error, Result};

pub use peaks::{detect_periodic_peaks, rolling_median, PeakReport};
pub use segment::{segment_trace, segment_trace_detailed, Segment, SegmentLabel, Segmentation};
pub use synth::{synthesize_trace, EventPulse, SynthesisSpec, TransitionShape};

#[derive(Debug, Clone, PartialEq)]
pub struct CurrentTrace {
    sample_period: f64,
    samples: Vec<f64>,
    supply_voltage: f64,
}

impl CurrentTrace {
    pub fn new(sample_period: f64, samples: Vec<f64>, supply_voltage: f64) -> Result<Self> {
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(Error::InvalidTrace(format!(
                "sample period {sample_period} s must be finite and > 0"
            )));
        }
        if !(supply_voltage.is_finite() && supply_voltage > 0.0) {
            return Err(Error::InvalidTrace(format!(
                "supply voltage {supply_voltage} V must be finite and > 0"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidTrace(format!("sample {i} is not finite")));
        }
        Ok(Self {
            sample_period,
            samples,
            supply_voltage,
        })
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn supply_voltage(&self) -> f64 {
        self.supply_voltage
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time spanned from the first to the last sample.
    pub fn duration(&self) -> f64 {
        self.samples.len().saturating_sub(1) as f64 * self.sample_period
    }

    pub fn time_at(&self, index: usize) -> f64 {
        index as f64 * self.sample_period
    }

    pub fn with_supply_voltage(mut self, v: f64) -> Result<Self> {
        self.supply_voltage = v;
        Self::new(self.sample_period, self.samples, self.supply_voltage)
    }
}

/// Supply voltage times the trapezoidal integral of current over time.
///
/// A single sample spans zero time and integrates to zero.
pub fn integrate_energy(trace: &CurrentTrace) -> Result<f64> {
    let s = trace.samples();
    if s.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let charge = trapezoid(s, trace.sample_period());
    Ok(trace.supply_voltage() * charge)
}

/// Trapezoidal integral of uniformly spaced samples.
pub(crate) fn trapezoid(samples: &[f64], dt: f64) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let interior: f64 = samples[1..samples.len() - 1].iter().sum();
    dt * (interior + 0.5 * (samples[0] + samples[samples.len() - 1]))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn constant_current() {
        for n in [2usize, 3, 11, 1001] {
            let dt = 1.0 / (n - 1) as f64;
            let t = CurrentTrace::new(dt, vec![1.0; n], 1.0).unwrap();
            assert_relative_eq!(integrate_energy(&t).unwrap(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn linear_ramp_is_exact() {
        // analytic: integral of t dt over [0, 1] = 0.5
        for n in [2usize, 5, 100, 1001] {
            let dt = 1.0 / (n - 1) as f64;
            let samples = (0..n).map(|i| i as f64 * dt).collect();
            let t = CurrentTrace::new(dt, samples, 1.0).unwrap();
            assert_relative_eq!(integrate_energy(&t).unwrap(), 0.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn zeros_and_empty() {
        let t = CurrentTrace::new(0.1, vec![0.0; 50], 3.0).unwrap();
        assert_eq!(integrate_energy(&t).unwrap(), 0.0);
        let e = CurrentTrace::new(0.1, vec![], 3.0).unwrap();
        assert!(matches!(integrate_energy(&e), Err(Error::EmptyTrace)));
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(CurrentTrace::new(0.0, vec![1.0], 1.0).is_err());
        assert!(CurrentTrace::new(0.1, vec![1.0], 0.0).is_err());
        assert!(CurrentTrace::new(0.1, vec![f64::NAN], 1.0).is_err());
    }

    proptest! {
        #[test]
        fn linear_in_samples_and_voltage(
            a in prop::collection::vec(-1.0f64..1.0, 2..64),
            k in 0.1f64..10.0,
            u in 0.5f64..5.0,
        ) {
            let b: Vec<f64> = a.iter().rev().copied().collect();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| k * x + y).collect();
            let e = |s: &[f64], v: f64| integrate_energy(&CurrentTrace::new(1e-3, s.to_vec(), v).unwrap()).unwrap();
            let lhs = e(&sum, u);
            let rhs = k * e(&a, u) + e(&b, u);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            prop_assert!((e(&a, 2.0 * u) - 2.0 * e(&a, u)).abs() <= 1e-15 * (1.0 + e(&a, u).abs()));
        }
    }
}
