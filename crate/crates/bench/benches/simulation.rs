use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use nrlight_bench::{baseline, short_config};
use nrlight_core::channel::{pathloss_db, ChannelParams};
use nrlight_core::phy::{select_mcs, McsTable};
use nrlight_core::{named_profile, run, InfVariant, ProfileName};

fn bench_primitives(c: &mut Criterion) {
    let params = ChannelParams::default();
    c.bench_function("pathloss_db", |b| {
        b.iter(|| pathloss_db(black_box(12.3), 28.0, false, InfVariant::Dh, &params))
    });
    let table = McsTable::standard(2.0);
    c.bench_function("select_mcs", |b| b.iter(|| select_mcs(black_box(11.7), 28, &table)));
}

fn bench_run(c: &mut Criterion) {
    let cfg = short_config(1.0);
    let slots = (cfg.scenario.sim_duration_s / 125e-6) as u64;
    let mut group = c.benchmark_group("run_one_second");
    group.throughput(Throughput::Elements(slots));
    group.sample_size(10);
    for name in [ProfileName::NrLLow, ProfileName::NrRelease15] {
        let profile = if name == ProfileName::NrLLow { baseline() } else { named_profile(name) };
        group.bench_with_input(BenchmarkId::from_parameter(name), &profile, |b, p| {
            b.iter(|| run(&cfg, p, 0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_primitives, bench_run);
criterion_main!(benches);
