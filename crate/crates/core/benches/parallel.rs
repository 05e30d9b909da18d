//! Parallel-versus-sequential benchmarks for the replicate-level loops:
//! the same grid cell and bootstrap workloads run on a one-thread rayon
//! pool and on the default pool. Outputs are identical by construction;
//! only the wall time differs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use scaleup_core::data::{FrameRow, FrameSurvey, KnownPopulationRegistry, ProbeGroup};
use scaleup_core::harness::{run_cell, CellKnobs, ProbeSpec};
use scaleup_core::netsim::SimConfig;
use scaleup_core::variance::{bootstrap_estimate, BootstrapConfig};
use std::collections::BTreeMap;

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
}

fn bench_cell(c: &mut Criterion) {
    let cfg = SimConfig {
        n: 1_000,
        p_frame: 0.5,
        p_hidden: 0.05,
        p_frame_given_hidden: 1.0,
        zeta: 0.05,
        xi: 0.4,
        rho: 0.5,
        tau: 0.5,
        seed: 1,
    };
    let knobs = CellKnobs {
        networks: 1,
        surveys: 64,
        frame_sample_size: 100,
        hidden_sample_size: 20,
        hidden_exponent: 1.0,
        probes: ProbeSpec::partition_of_universe(4),
    };
    let mut group = c.benchmark_group("grid_cell");
    group.sample_size(10);
    for threads in thread_counts() {
        group.bench_with_input(
            BenchmarkId::new("threads", threads),
            &threads,
            |b, &threads| {
                let pool = pool(threads);
                b.iter(|| pool.install(|| run_cell(&cfg, &knobs, 7, 0).unwrap()));
            },
        );
    }
    group.finish();
}

fn bench_bootstrap(c: &mut Criterion) {
    let registry = KnownPopulationRegistry::new(
        vec![ProbeGroup {
            id: "a".into(),
            size_total: 500,
            size_on_frame: 500,
        }],
        2_000,
        4_000,
    )
    .unwrap();
    let rows = (0..500)
        .map(|i| FrameRow {
            id: format!("r{i}"),
            weight: 4.0,
            stratum: "s1".into(),
            psu: format!("p{i}"),
            y_hidden: (i % 5) as u64,
            y_probe: BTreeMap::from([("a".to_string(), (i % 11) as u64)]),
            probe_membership: None,
        })
        .collect();
    let frame = FrameSurvey::new(rows).unwrap();
    let cfg = BootstrapConfig {
        replicates: 1_000,
        seed: 3,
        ..Default::default()
    };
    let est = |f: &FrameSurvey, _: Option<&scaleup_core::data::HiddenSurvey>| {
        scaleup_core::estimators::basic_scaleup(
            f,
            &KnownPopulationRegistry::new(
                vec![ProbeGroup {
                    id: "a".into(),
                    size_total: 500,
                    size_on_frame: 500,
                }],
                2_000,
                4_000,
            )
            .unwrap(),
            scaleup_core::estimators::BasicVariant::Modified,
        )
    };
    let mut group = c.benchmark_group("bootstrap_1000_reps");
    group.sample_size(10);
    for threads in thread_counts() {
        group.bench_with_input(
            BenchmarkId::new("threads", threads),
            &threads,
            |b, &threads| {
                let pool = pool(threads);
                b.iter(|| {
                    pool.install(|| {
                        bootstrap_estimate(est, &frame, None, &registry, "basic-modified", &cfg)
                            .unwrap()
                    })
                });
            },
        );
    }
    group.finish();
}

/// Sequential baseline plus the widest pool the host offers.
fn thread_counts() -> Vec<usize> {
    let cpus = std::thread::available_parallelism().map_or(4, |n| n.get());
    if cpus > 1 {
        vec![1, cpus]
    } else {
        vec![1]
    }
}

criterion_group!(benches, bench_cell, bench_bootstrap);
criterion_main!(benches);
