use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::CurrentTrace;
use crate::error::{Error, Result};
use crate::model::{EnergyModel, Timeline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionShape {
    /// Flat plateau at the transition current.
    #[default]
    Rectangular,
    /// Piecewise-linear excursion from the previous state's level through a
    /// mid-window apex to the destination level. The apex is placed so the
    /// window still averages the transition current (clamped at 0 A).
    LinearRamp,
}

/// Rectangular current pulse superimposed at each event timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventPulse {
    #[serde(rename = "width_s")]
    pub width: f64,
    #[serde(rename = "amplitude_a")]
    pub amplitude: f64,
}

impl EventPulse {
    pub fn charge(&self) -> f64 {
        self.width * self.amplitude
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSpec {
    #[serde(rename = "sample_period_s")]
    pub sample_period: f64,
    #[serde(default)]
    pub transition_shape: TransitionShape,
    #[serde(rename = "noise_stddev_a", default)]
    pub noise_stddev: f64,
    /// Explicit pulse per event kind. Kinds not listed get a pulse of
    /// `default_pulse_width` carrying the model's event charge.
    #[serde(default)]
    pub event_pulses: BTreeMap<String, EventPulse>,
    #[serde(rename = "default_pulse_width_s", default = "default_pulse_width")]
    pub default_pulse_width: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_pulse_width() -> f64 {
    2e-3
}

impl SynthesisSpec {
    pub fn new(sample_period: f64) -> Self {
        Self {
            sample_period,
            transition_shape: TransitionShape::Rectangular,
            noise_stddev: 0.0,
            event_pulses: BTreeMap::new(),
            default_pulse_width: default_pulse_width(),
            rng_seed: 0,
        }
    }

    pub fn with_noise(mut self, stddev: f64, seed: u64) -> Self {
        self.noise_stddev = stddev;
        self.rng_seed = seed;
        self
    }

    pub fn with_shape(mut self, shape: TransitionShape) -> Self {
        self.transition_shape = shape;
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Error::InvalidParams(format!("synthesis {what} = {v}"));
        if !(self.sample_period.is_finite() && self.sample_period > 0.0) {
            return Err(bad("sample_period_s", self.sample_period));
        }
        if !(self.noise_stddev.is_finite() && self.noise_stddev >= 0.0) {
            return Err(bad("noise_stddev_a", self.noise_stddev));
        }
        if !(self.default_pulse_width.is_finite() && self.default_pulse_width > 0.0) {
            return Err(bad("default_pulse_width_s", self.default_pulse_width));
        }
        for p in self.event_pulses.values() {
            if !(p.width.is_finite() && p.width >= 0.0) {
                return Err(bad("pulse width_s", p.width));
            }
            if !(p.amplitude.is_finite() && p.amplitude >= 0.0) {
                return Err(bad("pulse amplitude_a", p.amplitude));
            }
        }
        Ok(())
    }

    fn pulse_for(&self, model: &EnergyModel, kind: &str) -> Result<EventPulse> {
        if let Some(p) = self.event_pulses.get(kind) {
            return Ok(*p);
        }
        let charge = model
            .event(kind)
            .ok_or_else(|| Error::UnknownEventKind(kind.to_string()))?
            .charge;
        Ok(EventPulse {
            width: self.default_pulse_width,
            amplitude: charge / self.default_pulse_width,
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Level {
    Flat(f64),
    Tent { start: f64, apex: f64, end: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    start: f64,
    end: f64,
    level: Level,
}

impl Piece {
    fn value_at(&self, t: f64) -> f64 {
        match self.level {
            Level::Flat(i) => i,
            Level::Tent { start, apex, end } => {
                let len = self.end - self.start;
                if len <= 0.0 {
                    return apex;
                }
                let x = ((t - self.start) / len).clamp(0.0, 1.0);
                if x < 0.5 {
                    start + (apex - start) * (2.0 * x)
                } else {
                    apex + (end - apex) * (2.0 * x - 1.0)
                }
            }
        }
    }
}

/// Builds the noiseless piecewise waveform the transition-aware estimator
/// assumes: state plateaus with each transition carved from the head of its
/// destination interval.
fn build_pieces(model: &EnergyModel, timeline: &Timeline, shape: TransitionShape) -> Result<Vec<Piece>> {
    let mut pieces = Vec::with_capacity(timeline.intervals().len() * 2);
    let mut t = 0.0;
    let mut prev: Option<(&str, f64)> = None;
    for iv in timeline.intervals() {
        let current = model.state_current(&iv.state)?;
        let end = t + iv.duration;
        let mut head = t;
        if let Some((from, from_current)) = prev.filter(|(p, _)| *p != iv.state) {
            if let Some(spec) = model.transition(from, &iv.state) {
                let carve = spec.duration.min(iv.duration);
                if carve > 0.0 {
                    head = (t + carve).min(end);
                    let level = match shape {
                        TransitionShape::Rectangular => Level::Flat(spec.avg_current),
                        TransitionShape::LinearRamp => Level::Tent {
                            start: from_current,
                            apex: ((4.0 * spec.avg_current - from_current - current) / 2.0).max(0.0),
                            end: current,
                        },
                    };
                    pieces.push(Piece { start: t, end: head, level });
                }
            }
        }
        if end > head {
            pieces.push(Piece {
                start: head,
                end,
                level: Level::Flat(current),
            });
        }
        prev = Some((&iv.state, current));
        t = end;
    }
    Ok(pieces)
}

/// Renders a model and timeline into a sampled current trace.
///
/// Sample `i` is the waveform value at `i * sample_period`, plus any event
/// pulse covering that instant, plus zero-mean Gaussian noise drawn from a
/// ChaCha8 generator seeded with `spec.rng_seed`.
pub fn synthesize_trace(model: &EnergyModel, timeline: &Timeline, spec: &SynthesisSpec) -> Result<CurrentTrace> {
    model.ensure_valid()?;
    spec.validate()?;
    timeline.check_states(model)?;
    timeline.check_events(model)?;

    let pieces = build_pieces(model, timeline, spec.transition_shape)?;
    let mut pulses = Vec::with_capacity(timeline.events().len());
    for ev in timeline.events() {
        let p = spec.pulse_for(model, &ev.kind)?;
        if p.width > 0.0 && p.amplitude != 0.0 {
            pulses.push((ev.timestamp, ev.timestamp + p.width, p.amplitude));
        }
    }
    // events are sorted, so pulse starts are too

    let dt = spec.sample_period;
    let total = timeline.total_duration();
    let n = (total / dt).round() as usize + 1;
    let mut samples = Vec::with_capacity(n);

    let mut pi = 0;
    let mut first_pulse = 0;
    for i in 0..n {
        let t = i as f64 * dt;
        while pi + 1 < pieces.len() && t >= pieces[pi].end {
            pi += 1;
        }
        let mut value = pieces.get(pi).map_or(0.0, |p| p.value_at(t));
        while first_pulse < pulses.len() && pulses[first_pulse].1 <= t {
            first_pulse += 1;
        }
        for &(start, end, amp) in &pulses[first_pulse..] {
            if start > t {
                break;
            }
            if t < end {
                value += amp;
            }
        }
        samples.push(value);
    }

    if spec.noise_stddev > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
        let normal = Normal::new(0.0, spec.noise_stddev)
            .map_err(|e| Error::InvalidParams(format!("noise: {e}")))?;
        for s in &mut samples {
            *s += normal.sample(&mut rng);
        }
    }

    CurrentTrace::new(dt, samples, model.supply_voltage)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{estimate_with_events, EventSpec, PowerState, StateInterval, TimedEvent, TransitionSpec};
    use crate::trace::integrate_energy;

    fn two_state() -> EnergyModel {
        EnergyModel::new(3.0, vec![PowerState::new("sleep", 0.002), PowerState::new("tx", 0.020)])
            .with_transition(TransitionSpec::new("sleep", "tx", 0.1, 0.005))
            .with_event(EventSpec::new("beacon", 1e-5))
    }

    #[test]
    fn single_state_is_constant() {
        let m = two_state();
        let t = Timeline::from_intervals(vec![StateInterval::new("tx", 1.0)]).unwrap();
        let tr = synthesize_trace(&m, &t, &SynthesisSpec::new(1e-3)).unwrap();
        assert_eq!(tr.len(), 1001);
        assert!(tr.samples().iter().all(|&s| s == 0.020));
        assert_eq!(tr.supply_voltage(), 3.0);
    }

    #[test]
    fn plateau_and_pulses_are_placed() {
        let m = two_state();
        let t = Timeline::new(
            vec![StateInterval::new("sleep", 0.5), StateInterval::new("tx", 0.5)],
            vec![TimedEvent::new("beacon", 0.25)],
        )
        .unwrap();
        let tr = synthesize_trace(&m, &t, &SynthesisSpec::new(1e-3)).unwrap();
        let s = tr.samples();
        assert_eq!(s[100], 0.002);
        assert!((s[250] - (0.002 + 1e-5 / 2e-3)).abs() < 1e-12);
        assert_eq!(s[520], 0.005);
        assert_eq!(s[700], 0.020);
    }

    #[test]
    fn closes_against_estimator() {
        let m = two_state();
        let t = Timeline::new(
            vec![StateInterval::new("sleep", 0.5), StateInterval::new("tx", 0.5)],
            vec![TimedEvent::new("beacon", 0.2503)],
        )
        .unwrap();
        let dt = 1e-3;
        let measured = integrate_energy(&synthesize_trace(&m, &t, &SynthesisSpec::new(dt)).unwrap()).unwrap();
        let est = estimate_with_events(&m, &t).unwrap().total;
        let i_max = 0.002 + 1e-5 / 2e-3;
        // boundaries: sleep|tr, tr|tx, pulse start and end
        assert!((measured - est).abs() <= 3.0 * i_max * 2.0 * dt * 4.0);
    }

    #[test]
    fn linear_ramp_preserves_mean() {
        // apex = (4 * 0.01 - 0.002 - 0.020) / 2 stays positive
        let mut m = two_state();
        m.transitions[0].avg_current = 0.01;
        let t = Timeline::from_intervals(vec![StateInterval::new("sleep", 0.5), StateInterval::new("tx", 0.5)]).unwrap();
        let spec = SynthesisSpec::new(1e-4).with_shape(TransitionShape::LinearRamp);
        let measured = integrate_energy(&synthesize_trace(&m, &t, &spec).unwrap()).unwrap();
        let est = estimate_with_events(&m, &t).unwrap().total;
        assert!((measured - est).abs() < 3.0 * 0.02 * 1e-4 * 4.0, "{measured} vs {est}");
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let m = two_state();
        let t = Timeline::from_intervals(vec![StateInterval::new("sleep", 1.0)]).unwrap();
        let spec = SynthesisSpec::new(1e-3).with_noise(1e-3, 42);
        let a = synthesize_trace(&m, &t, &spec).unwrap();
        let b = synthesize_trace(&m, &t, &spec).unwrap();
        assert_eq!(a, b);
        let c = synthesize_trace(&m, &t, &spec.clone().with_noise(1e-3, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unknown_names() {
        let m = two_state();
        let t = Timeline::from_intervals(vec![StateInterval::new("idle", 1.0)]).unwrap();
        assert!(matches!(synthesize_trace(&m, &t, &SynthesisSpec::new(1e-3)), Err(Error::UnknownState(_))));
        let t = Timeline::new(vec![StateInterval::new("tx", 1.0)], vec![TimedEvent::new("pkt", 0.1)]).unwrap();
        assert!(matches!(synthesize_trace(&m, &t, &SynthesisSpec::new(1e-3)), Err(Error::UnknownEventKind(_))));
    }
}
