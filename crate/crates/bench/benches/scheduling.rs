use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use sunedge::scheduler::{arrange, assign_orbits, knapsack_select, ArrangeItem};
use sunedge::{SatId, TaskId};
use sunedge_bench::desk_instance;

fn knapsack(c: &mut Criterion) {
    let mut group = c.benchmark_group("knapsack_select");
    for n in [8usize, 32, 128] {
        let items: Vec<(usize, u64)> = (0..n).map(|i| (i, 500 + (i as u64 * 7919) % 4000)).collect();
        let cap = items.iter().map(|it| it.1).sum::<u64>() / 3;
        group.bench_with_input(BenchmarkId::from_parameter(n), &items, |b, items| {
            b.iter(|| knapsack_select(black_box(items), cap))
        });
    }
    group.finish();
}

fn arrangement(c: &mut Criterion) {
    let inst = desk_instance(5, 150);
    let items: Vec<ArrangeItem> = inst
        .tasks
        .iter()
        .take(24)
        .enumerate()
        .map(|(i, k)| ArrangeItem { task: TaskId(i), compute_slots: k.compute_slots, deadline: inst.world.horizon() })
        .collect();
    c.bench_function("arrange_24_tasks", |b| b.iter(|| arrange(&inst.world, SatId(0), 0, black_box(&items))));
}

fn orbit_assignment(c: &mut Criterion) {
    let inst = desk_instance(7, 150);
    c.bench_function("assign_orbits", |b| b.iter(|| assign_orbits(&inst.world, black_box(&inst.tasks), 0)));
}

criterion_group!(benches, knapsack, arrangement, orbit_assignment);
criterion_main!(benches);
