//! Offline recovery of a state timeline from a sampled current trace.
//!
//! Samples are labeled with the nearest candidate level (state currents and
//! transition currents) under hysteresis, short runs are absorbed into their
//! neighbours, and transition-labeled runs are kept only where they sit
//! between the states their spec names.

use super::CurrentTrace;
use crate::error::{Error, Result};
use crate::model::{EnergyModel, StateInterval, Timeline, TransitionKey};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentLabel {
    State(String),
    Transition(TransitionKey),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub label: SegmentLabel,
    pub start: f64,
    pub duration: f64,
    pub mean_current: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
}

impl Segmentation {
    /// Folds each transition segment into the head of the following state
    /// interval, matching how a residency logger records a switch.
    pub fn to_timeline(&self) -> Result<Timeline> {
        let mut intervals: Vec<StateInterval> = Vec::new();
        let mut pending = 0.0;
        for seg in &self.segments {
            match &seg.label {
                SegmentLabel::Transition(_) => pending += seg.duration,
                SegmentLabel::State(name) => {
                    let d = seg.duration + pending;
                    pending = 0.0;
                    match intervals.last_mut() {
                        Some(last) if last.state == *name => last.duration += d,
                        _ => intervals.push(StateInterval::new(name, d)),
                    }
                }
            }
        }
        if pending > 0.0 {
            // trailing transition with no destination interval
            if let Some(SegmentLabel::Transition(k)) = self.segments.last().map(|s| &s.label) {
                intervals.push(StateInterval::new(&k.to, pending));
            }
        }
        Timeline::from_intervals(intervals)
    }
}

#[derive(Debug, Clone)]
struct Level {
    label: SegmentLabel,
    current: f64,
}

#[derive(Debug, Clone)]
struct Run {
    level: usize,
    start: usize,
    end: usize,
    sum: f64,
}

impl Run {
    fn len(&self) -> usize {
        self.end - self.start
    }

    fn mean(&self) -> f64 {
        self.sum / self.len() as f64
    }
}

/// Segments a trace into a state timeline. See [`segment_trace_detailed`].
pub fn segment_trace(trace: &CurrentTrace, model: &EnergyModel, hysteresis: f64, min_dwell: f64) -> Result<Timeline> {
    segment_trace_detailed(trace, model, hysteresis, min_dwell)?.to_timeline()
}

/// Segments a trace into labeled state and transition segments.
///
/// Segment boundaries are placed half a sample before the first sample of
/// the new run, and the segments tile `[0, trace.duration()]` exactly.
pub fn segment_trace_detailed(
    trace: &CurrentTrace,
    model: &EnergyModel,
    hysteresis: f64,
    min_dwell: f64,
) -> Result<Segmentation> {
    model.ensure_valid()?;
    if !(hysteresis.is_finite() && hysteresis >= 0.0) {
        return Err(Error::InvalidParams(format!("hysteresis {hysteresis} A")));
    }
    if !(min_dwell.is_finite() && min_dwell >= 0.0) {
        return Err(Error::InvalidParams(format!("min_dwell {min_dwell} s")));
    }
    check_separable(model, hysteresis)?;
    let samples = trace.samples();
    if samples.is_empty() {
        return Err(Error::EmptyTrace);
    }

    let mut levels: Vec<Level> = model
        .states
        .iter()
        .map(|s| Level {
            label: SegmentLabel::State(s.name.clone()),
            current: s.avg_current,
        })
        .collect();
    let n_states = levels.len();
    levels.extend(model.transitions.iter().filter(|t| t.duration > 0.0).map(|t| Level {
        label: SegmentLabel::Transition(t.key()),
        current: t.avg_current,
    }));

    let labels = label_samples(samples, &levels, hysteresis);
    let mut runs = to_runs(samples, &labels);

    let dt = trace.sample_period();
    let min_len = (min_dwell / dt).ceil().max(1.0) as usize;
    merge_short_runs(&mut runs, &levels, min_len);
    resolve_transitions(&mut runs, &levels, n_states);

    let n = samples.len();
    let total = trace.duration();
    let boundary = |idx: usize| {
        if idx == 0 {
            0.0
        } else if idx >= n {
            total
        } else {
            (idx as f64 - 0.5) * dt
        }
    };
    let segments = runs
        .iter()
        .map(|r| {
            let start = boundary(r.start);
            Segment {
                label: levels[r.level].label.clone(),
                start,
                duration: boundary(r.end) - start,
                mean_current: r.mean(),
            }
        })
        .collect();
    Ok(Segmentation { segments })
}

fn check_separable(model: &EnergyModel, hysteresis: f64) -> Result<()> {
    let mut states: Vec<_> = model.states.iter().collect();
    states.sort_by(|a, b| a.avg_current.total_cmp(&b.avg_current));
    for w in states.windows(2) {
        let gap = w[1].avg_current - w[0].avg_current;
        if gap <= 2.0 * hysteresis {
            return Err(Error::AmbiguousModel {
                a: w[0].name.clone(),
                b: w[1].name.clone(),
                gap,
                hysteresis,
            });
        }
    }
    Ok(())
}

fn nearest(x: f64, levels: &[Level]) -> usize {
    // ties go to the earlier level, so states win over coincident transitions
    let mut best = 0;
    for (i, l) in levels.iter().enumerate().skip(1) {
        if (x - l.current).abs() < (x - levels[best].current).abs() {
            best = i;
        }
    }
    best
}

/// Keeps the current label until another level is closer by more than
/// `2 * hysteresis`, i.e. the sample crossed the midpoint by `hysteresis`.
fn label_samples(samples: &[f64], levels: &[Level], hysteresis: f64) -> Vec<usize> {
    let mut out = Vec::with_capacity(samples.len());
    let mut cur = nearest(samples[0], levels);
    for &x in samples {
        let cand = nearest(x, levels);
        if cand != cur && (x - levels[cur].current).abs() - (x - levels[cand].current).abs() > 2.0 * hysteresis {
            cur = cand;
        }
        out.push(cur);
    }
    out
}

fn to_runs(samples: &[f64], labels: &[usize]) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (i, (&x, &l)) in samples.iter().zip(labels).enumerate() {
        match runs.last_mut() {
            Some(r) if r.level == l => {
                r.end = i + 1;
                r.sum += x;
            }
            _ => runs.push(Run {
                level: l,
                start: i,
                end: i + 1,
                sum: x,
            }),
        }
    }
    runs
}

fn coalesce(runs: &mut Vec<Run>) {
    let mut out: Vec<Run> = Vec::with_capacity(runs.len());
    for r in runs.drain(..) {
        match out.last_mut() {
            Some(last) if last.level == r.level => {
                last.end = r.end;
                last.sum += r.sum;
            }
            _ => out.push(r),
        }
    }
    *runs = out;
}

/// Absorbs runs shorter than `min_len` samples, shortest first, into the
/// neighbour whose level is closest to the run's mean.
fn merge_short_runs(runs: &mut Vec<Run>, levels: &[Level], min_len: usize) {
    loop {
        if runs.len() < 2 {
            return;
        }
        let Some(idx) = (0..runs.len())
            .filter(|&i| runs[i].len() < min_len)
            .min_by_key(|&i| (runs[i].len(), i))
        else {
            return;
        };
        let mean = runs[idx].mean();
        let dist = |j: usize| (mean - levels[runs[j].level].current).abs();
        let target = match (idx.checked_sub(1), (idx + 1 < runs.len()).then_some(idx + 1)) {
            (Some(p), Some(nx)) => {
                if dist(nx) < dist(p) {
                    nx
                } else {
                    p
                }
            }
            (Some(p), None) => p,
            (None, Some(nx)) => nx,
            (None, None) => return,
        };
        runs[idx].level = runs[target].level;
        coalesce(runs);
    }
}

/// A transition-labeled run survives only when its neighbours are the
/// spec's endpoints (or the trace edge) and its mean is closer to the
/// transition current than to either neighbouring state's current.
fn resolve_transitions(runs: &mut Vec<Run>, levels: &[Level], n_states: usize) {
    for i in 0..runs.len() {
        if runs[i].level < n_states {
            continue;
        }
        let SegmentLabel::Transition(key) = &levels[runs[i].level].label else {
            continue;
        };
        let state_of = |j: Option<usize>| j.map(|j| runs[j].level).filter(|&l| l < n_states);
        let prev = i.checked_sub(1).and_then(|j| state_of(Some(j)));
        let next = state_of((i + 1 < runs.len()).then_some(i + 1));
        let name = |l: usize| match &levels[l].label {
            SegmentLabel::State(s) => s.as_str(),
            SegmentLabel::Transition(_) => "",
        };
        let fits_prev = prev.is_none_or(|l| name(l) == key.from);
        let fits_next = next.is_none_or(|l| name(l) == key.to);
        let mean = runs[i].mean();
        let d_tr = (mean - levels[runs[i].level].current).abs();
        let closer = [prev, next]
            .into_iter()
            .flatten()
            .all(|l| d_tr < (mean - levels[l].current).abs());
        if !(fits_prev && fits_next && closer) {
            let fallback = [prev, next]
                .into_iter()
                .flatten()
                .min_by(|&a, &b| {
                    (mean - levels[a].current)
                        .abs()
                        .total_cmp(&(mean - levels[b].current).abs())
                })
                .unwrap_or_else(|| nearest(mean, &levels[..n_states]));
            runs[i].level = fallback;
        }
    }
    coalesce(runs);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PowerState, TransitionSpec};
    use crate::trace::{synthesize_trace, SynthesisSpec};

    fn model() -> EnergyModel {
        EnergyModel::new(
            3.0,
            vec![
                PowerState::new("sleep", 0.002),
                PowerState::new("rx", 0.015),
                PowerState::new("tx", 0.025),
            ],
        )
    }

    #[test]
    fn constant_trace_is_one_interval() {
        let tr = CurrentTrace::new(1e-3, vec![0.002; 1001], 3.0).unwrap();
        let tl = segment_trace(&tr, &model(), 0.001, 0.005).unwrap();
        assert_eq!(tl.intervals(), &[StateInterval::new("sleep", 1.0)]);
    }

    #[test]
    fn two_state_round_trip() {
        let m = model();
        let input = Timeline::from_intervals(vec![
            StateInterval::new("sleep", 0.3004),
            StateInterval::new("tx", 0.2),
            StateInterval::new("sleep", 0.4996),
        ])
        .unwrap();
        let dt = 1e-3;
        let tr = synthesize_trace(&m, &input, &SynthesisSpec::new(dt)).unwrap();
        let out = segment_trace(&tr, &m, 0.001, 0.005).unwrap();
        assert_eq!(out.intervals().len(), 3);
        let mut a = 0.0;
        let mut b = 0.0;
        for (x, y) in input.intervals().iter().zip(out.intervals()) {
            assert_eq!(x.state, y.state);
            a += x.duration;
            b += y.duration;
            assert!((a - b).abs() <= dt, "boundary {a} vs {b}");
        }
    }

    #[test]
    fn recovers_transition_plateau() {
        let m = EnergyModel::new(3.0, vec![PowerState::new("sleep", 0.002), PowerState::new("tx", 0.020)])
            .with_transition(TransitionSpec::new("sleep", "tx", 0.1, 0.008));
        let input =
            Timeline::from_intervals(vec![StateInterval::new("sleep", 0.5), StateInterval::new("tx", 0.5)]).unwrap();
        let dt = 1e-3;
        let tr = synthesize_trace(&m, &input, &SynthesisSpec::new(dt)).unwrap();
        let seg = segment_trace_detailed(&tr, &m, 0.001, 0.005).unwrap();
        assert_eq!(seg.segments.len(), 3, "{seg:?}");
        assert_eq!(seg.segments[1].label, SegmentLabel::Transition(TransitionKey::new("sleep", "tx")));
        assert!((seg.segments[1].duration - 0.1).abs() <= 2.0 * dt);
        let tl = seg.to_timeline().unwrap();
        assert_eq!(tl.intervals().len(), 2);
        assert!((tl.intervals()[1].duration - 0.5).abs() <= dt);
    }

    #[test]
    fn misplaced_transition_level_is_relabeled() {
        // a plateau at the sleep->tx level, but between tx and sleep
        let m = EnergyModel::new(1.0, vec![PowerState::new("sleep", 0.0), PowerState::new("tx", 1.0)])
            .with_transition(TransitionSpec::new("sleep", "tx", 0.1, 0.4));
        let mut s = vec![1.0; 100];
        s.extend(vec![0.4; 50]);
        s.extend(vec![0.0; 100]);
        let tr = CurrentTrace::new(1e-3, s, 1.0).unwrap();
        let seg = segment_trace_detailed(&tr, &m, 0.05, 0.005).unwrap();
        assert!(seg
            .segments
            .iter()
            .all(|s| matches!(s.label, SegmentLabel::State(_))));
    }

    #[test]
    fn short_glitches_are_merged() {
        let mut s = vec![0.002; 500];
        s[200] = 0.025;
        s[201] = 0.025;
        let tr = CurrentTrace::new(1e-3, s, 3.0).unwrap();
        let tl = segment_trace(&tr, &model(), 0.001, 0.005).unwrap();
        assert_eq!(tl.intervals().len(), 1);
    }

    #[test]
    fn ambiguous_model() {
        let tr = CurrentTrace::new(1e-3, vec![0.0; 10], 3.0).unwrap();
        let err = segment_trace(&tr, &model(), 0.006, 0.0).unwrap_err();
        assert!(matches!(err, Error::AmbiguousModel { ref a, ref b, .. } if a == "rx" && b == "tx"));
    }

    #[test]
    fn durations_tile_the_trace() {
        let mut s = vec![0.002; 333];
        s.extend(vec![0.015; 111]);
        s.extend(vec![0.025; 57]);
        let tr = CurrentTrace::new(1e-3, s, 3.0).unwrap();
        let tl = segment_trace(&tr, &model(), 0.001, 0.0).unwrap();
        assert!((tl.total_duration() - tr.duration()).abs() < 1e-12);
    }
}
