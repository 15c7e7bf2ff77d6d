use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use radio_energy::calibration::fit_ols;
use radio_energy::trace::{integrate_energy, segment_trace, synthesize_trace};
use radio_energy::{estimate_basic, estimate_with_events, estimate_with_transitions, SynthesisSpec};
use radio_energy_bench::{observation_fixture, sensor_fixture, trace_fixture};

fn estimators(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate");
    for rate in [1.0, 20.0] {
        let (model, timeline) = sensor_fixture(rate, 60.0);
        group.bench_with_input(BenchmarkId::new("basic", rate), &timeline, |b, t| {
            b.iter(|| estimate_basic(black_box(&model), black_box(t)))
        });
        group.bench_with_input(BenchmarkId::new("transitions", rate), &timeline, |b, t| {
            b.iter(|| estimate_with_transitions(black_box(&model), black_box(t)))
        });
        group.bench_with_input(BenchmarkId::new("events", rate), &timeline, |b, t| {
            b.iter(|| estimate_with_events(black_box(&model), black_box(t)))
        });
    }
    group.finish();
}

fn synthesis(c: &mut Criterion) {
    let (model, timeline) = sensor_fixture(20.0, 10.0);
    let spec = SynthesisSpec::new(1e-4).with_noise(1e-4, 3);
    c.bench_function("synthesize_and_integrate_10s_at_10khz", |b| {
        b.iter(|| integrate_energy(&synthesize_trace(&model, &timeline, black_box(&spec)).unwrap()))
    });
}

fn calibration(c: &mut Criterion) {
    let (model, obs) = observation_fixture(40);
    c.bench_function("fit_ols_40_runs", |b| b.iter(|| fit_ols(black_box(&obs), &model)));
}

fn segmentation(c: &mut Criterion) {
    let (model, trace) = trace_fixture(10.0, 5.0, 1e-4);
    c.bench_function("segment_5s_at_10khz", |b| {
        b.iter(|| segment_trace(black_box(&trace), &model, 5e-4, 2e-4))
    });
}

criterion_group!(benches, estimators, synthesis, calibration, segmentation);
criterion_main!(benches);
