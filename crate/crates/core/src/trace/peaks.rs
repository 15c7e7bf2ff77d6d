use serde::{Deserialize, Serialize};

use super::CurrentTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub peak_count: usize,
    /// Median spacing between consecutive peak onsets; 0 with fewer than two peaks.
    #[serde(rename = "period_s")]
    pub period: f64,
    /// Mean over peaks of the charge above the rolling baseline.
    #[serde(rename = "mean_excess_charge_c")]
    pub mean_excess_charge: f64,
}

/// Centered rolling median with an odd window of `window` samples
/// (rounded up to odd), shrinking at the edges.
pub fn rolling_median(samples: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let mut sorted: Vec<f64> = Vec::with_capacity(2 * half + 1);
    let mut lo = 0;
    let mut hi = 0; // exclusive
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let want_lo = i.saturating_sub(half);
        let want_hi = (i + half + 1).min(n);
        while hi < want_hi {
            let x = samples[hi];
            let pos = sorted.partition_point(|v| v.total_cmp(&x).is_lt());
            sorted.insert(pos, x);
            hi += 1;
        }
        while lo < want_lo {
            let x = samples[lo];
            let pos = sorted.partition_point(|v| v.total_cmp(&x).is_lt());
            sorted.remove(pos);
            lo += 1;
        }
        let m = sorted.len();
        out.push(if m % 2 == 1 {
            sorted[m / 2]
        } else {
            0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
        });
    }
    out
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Finds maximal runs of samples above `rolling median + threshold`.
///
/// `baseline_window` is the rolling-median span in seconds and must cover
/// at least ten samples.
pub fn detect_periodic_peaks(trace: &CurrentTrace, baseline_window: f64, threshold: f64) -> Result<PeakReport> {
    let samples = trace.samples();
    if samples.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let dt = trace.sample_period();
    if !(baseline_window.is_finite() && baseline_window >= 10.0 * dt * (1.0 - 1e-9)) {
        return Err(Error::InvalidParams(format!(
            "baseline window {baseline_window} s is shorter than 10 sample periods ({} s)",
            10.0 * dt
        )));
    }
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::InvalidParams(format!("threshold {threshold} A")));
    }

    let window = (baseline_window / dt).round() as usize;
    let baseline = rolling_median(samples, window);

    let mut onsets = Vec::new();
    let mut charges = Vec::new();
    let mut in_peak = false;
    for (i, (&x, &b)) in samples.iter().zip(&baseline).enumerate() {
        if x > b + threshold {
            if !in_peak {
                onsets.push(i);
                charges.push(0.0);
                in_peak = true;
            }
            *charges.last_mut().unwrap() += (x - b) * dt;
        } else {
            in_peak = false;
        }
    }

    let peak_count = onsets.len();
    let period = if peak_count >= 2 {
        let mut gaps: Vec<f64> = onsets.windows(2).map(|w| (w[1] - w[0]) as f64 * dt).collect();
        median(&mut gaps)
    } else {
        0.0
    };
    let mean_excess_charge = if peak_count > 0 {
        charges.iter().sum::<f64>() / peak_count as f64
    } else {
        0.0
    };
    Ok(PeakReport {
        peak_count,
        period,
        mean_excess_charge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulses(n: usize, dt: f64, base: f64, every: usize, width: usize, amp: f64, offset: usize) -> CurrentTrace {
        let mut s = vec![base; n];
        let mut i = offset;
        while i + width <= n {
            for x in &mut s[i..i + width] {
                *x += amp;
            }
            i += every;
        }
        CurrentTrace::new(dt, s, 3.0).unwrap()
    }

    #[test]
    fn rolling_median_matches_naive() {
        let s: Vec<f64> = (0..200).map(|i| ((i * 37) % 23) as f64).collect();
        let fast = rolling_median(&s, 11);
        for (i, &got) in fast.iter().enumerate() {
            let lo = i.saturating_sub(5);
            let hi = (i + 6).min(s.len());
            let mut w = s[lo..hi].to_vec();
            assert_eq!(got, median(&mut w), "index {i}");
        }
    }

    #[test]
    fn flat_trace_has_no_peaks() {
        let t = CurrentTrace::new(1e-3, vec![0.01; 1000], 3.0).unwrap();
        let r = detect_periodic_peaks(&t, 0.05, 1e-4).unwrap();
        assert_eq!(r.peak_count, 0);
        assert_eq!(r.period, 0.0);
    }

    #[test]
    fn injected_pulses_50ms() {
        let dt = 1e-3;
        let (width, amp) = (3, 0.02);
        let t = pulses(2000, dt, 0.001, 50, width, amp, 10);
        let q = width as f64 * dt * amp;
        let r = detect_periodic_peaks(&t, 0.03, 0.005).unwrap();
        assert_eq!(r.peak_count, 40);
        assert!((r.period - 0.050).abs() <= dt);
        assert!((r.mean_excess_charge - q).abs() <= 0.05 * q);
    }

    #[test]
    fn rejects_short_window_and_empty() {
        let t = CurrentTrace::new(1e-3, vec![0.0; 100], 3.0).unwrap();
        assert!(detect_periodic_peaks(&t, 0.005, 0.0).is_err());
        let e = CurrentTrace::new(1e-3, vec![], 3.0).unwrap();
        assert!(matches!(detect_periodic_peaks(&e, 0.05, 0.0), Err(Error::EmptyTrace)));
    }
}
