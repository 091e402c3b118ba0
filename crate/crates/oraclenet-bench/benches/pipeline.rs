use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use oraclenet_bench::{anchor, claims, keys};
use oraclenet_core::filtering::{filter_window, TimedResult};
use oraclenet_core::scenario::{run_scenario, SchemeVariant, SimConfig};
use oraclenet_core::selection::select_top_t;
use oraclenet_core::types::SimTime;
use oraclenet_core::vrf::{generate, setup};

fn bench_vrf_generate(c: &mut Criterion) {
    let kp = setup(1);
    let input = b"benchmark-input-benchmark-input";
    c.bench_function("vrf_generate", |b| {
        b.iter(|| generate(black_box(&kp.secret_key), black_box(input)))
    });
}

fn bench_ring_priorities(c: &mut Criterion) {
    let keys = keys(100);
    let anchor = anchor(7);
    c.bench_function("ring_priorities_100_nodes", |b| {
        b.iter(|| claims(black_box(&keys), black_box(&anchor), 3.0))
    });
}

fn bench_select_top_t(c: &mut Criterion) {
    let keys = keys(100);
    let anchor = anchor(9);
    let all = claims(&keys, &anchor, 2.0);
    c.bench_function("select_top_10_of_100", |b| {
        b.iter(|| select_top_t(black_box(&all), 10))
    });
}

fn bench_filter_window(c: &mut Criterion) {
    let keys = keys(1);
    let anchor = anchor(11);
    let base = claims(&keys, &anchor, 1.0).remove(0);
    let mut group = c.benchmark_group("filter_window");
    for n in [10usize, 40, 100] {
        let results: Vec<TimedResult> = (0..n)
            .map(|i| TimedResult {
                node_id: oraclenet_core::types::NodeId::nth(i),
                value: 100.0,
                timestamp: SimTime::from_micros(1_000_000 + (i as u64 * 37_919) % 2_000_000),
                priority: base.clone(),
            })
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &results, |b, rs| {
            b.iter(|| filter_window(black_box(rs), SimTime::from_secs_f64(1.0)).unwrap())
        });
    }
    group.finish();
}

fn bench_end_to_end(c: &mut Criterion) {
    let cfg = SimConfig { task_count: 10, ..Default::default() };
    let mut group = c.benchmark_group("end_to_end_10_tasks");
    group.sample_size(10);
    for variant in [SchemeVariant::Full, SchemeVariant::Baseline] {
        group.bench_with_input(
            BenchmarkId::from_parameter(variant.label()),
            &variant,
            |b, &v| b.iter(|| run_scenario(black_box(&cfg), v).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_vrf_generate,
    bench_ring_priorities,
    bench_select_top_t,
    bench_filter_window,
    bench_end_to_end
);
criterion_main!(benches);
