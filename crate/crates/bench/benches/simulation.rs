use criterion::{criterion_group, criterion_main, Criterion};

use sunedge::sbeo::{brute_force_solve, check_feasible};
use sunedge::simkit::{build_scenario, simulate};
use sunedge::StrategyKind;
use sunedge_bench::{desk_instance, desk_ship, tiny_instances};

fn strategies(c: &mut Criterion) {
    let inst = desk_instance(11, 150);
    let mut group = c.benchmark_group("simulate_desk");
    for kind in StrategyKind::ALL {
        group.bench_function(kind.name(), |b| b.iter(|| simulate(&inst, kind)));
    }
    group.finish();
}

fn replay(c: &mut Criterion) {
    let inst = desk_instance(11, 150);
    let out = simulate(&inst, StrategyKind::SunlightAware);
    c.bench_function("check_feasible_desk", |b| b.iter(|| check_feasible(&inst, &out.solution)));
}

fn scenario(c: &mut Criterion) {
    let cfg = desk_ship(600);
    let mut group = c.benchmark_group("scenario_600_slots");
    group.sample_size(10);
    group.bench_function("build", |b| b.iter(|| build_scenario(&cfg).unwrap()));
    let built = build_scenario(&cfg).unwrap();
    group.bench_function("run_sunlight_aware", |b| b.iter(|| built.run(StrategyKind::SunlightAware)));
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let instances = tiny_instances(3, 20);
    c.bench_function("brute_force_20_tiny", |b| {
        b.iter(|| instances.iter().filter(|i| brute_force_solve(i).is_ok()).count())
    });
}

criterion_group!(benches, strategies, replay, scenario, oracle);
criterion_main!(benches);
