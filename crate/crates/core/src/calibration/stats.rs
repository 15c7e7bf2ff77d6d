use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Confidence level used for run-to-run intervals.
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Absolute estimation error in percent of the measured energy.
pub fn estimation_error(estimated: f64, measured: f64) -> Result<f64> {
    if measured.is_nan() || measured <= 0.0 {
        return Err(Error::NonPositiveMeasured(measured));
    }
    Ok(100.0 * (estimated - measured).abs() / measured)
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std_dev(samples: &[f64]) -> f64 {
    let m = mean(samples);
    let ss: f64 = samples.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (samples.len() - 1) as f64).sqrt()
}

/// Student-t interval for the mean: `mean +- t_{(1+level)/2, n-1} * s / sqrt(n)`.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParams(format!("confidence level {level} not in (0, 1)")));
    }
    let m = mean(samples);
    let s = sample_std_dev(samples);
    if s == 0.0 {
        return Ok((m, m));
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| Error::InvalidParams(e.to_string()))?
        .inverse_cdf(0.5 * (1.0 + level));
    let half = t * s / (n as f64).sqrt();
    Ok((m - half, m + half))
}
