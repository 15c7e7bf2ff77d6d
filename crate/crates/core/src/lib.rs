//! State-based energy estimation for radio transceivers.
//!
//! The crate covers the whole loop of a software energy estimator:
//!
//! - [`model`]: energy model types and the plain, transition-aware and
//!   event-aware estimators.
//! - [`trace`]: ground-truth current traces (synthesis, integration,
//!   segmentation, periodic-peak detection).
//! - [`calibration`]: least-squares fitting of currents and charges, error
//!   and confidence-interval statistics.
//! - [`workload`]: deterministic sensor-forwarder and 802.11 power-save
//!   timelines.
//! - [`analysis`]: error-vs-traffic-rate sweeps and report comparison.
//! - [`formats`]: the JSON and CSV file formats.

pub mod analysis;
pub mod calibration;
pub mod error;
pub mod formats;
pub mod model;
pub mod trace;
pub mod workload;

pub use error::{Error, Result, Violation};
pub use model::{
    estimate_basic, estimate_with_events, estimate_with_transitions, validate_model, EnergyModel, EnergyReport,
    EventSpec, PowerState, StateInterval, TimedEvent, Timeline, TransitionKey, TransitionSpec,
};
pub use trace::{CurrentTrace, PeakReport, SynthesisSpec};
