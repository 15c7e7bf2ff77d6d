//! End-to-end experiments: synthesize ground truth, run the estimators
//! against it and aggregate the errors per traffic rate.

mod compare;
mod demo;
mod sweep;

pub use compare::{compare_reports, Delta, ReportComparison};
pub use demo::{demo_sensor_sweep, DemoTargets, DEMO_TARGETS};
pub use sweep::{run_seed, run_sweep, sweep_runs, ErrorCurve, ErrorStat, RatePoint, RunRecord, SweepConfig};
