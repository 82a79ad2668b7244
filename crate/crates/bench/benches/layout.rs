use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use storyexp_bench::fragments;
use storyexp_core::layout::{
    align, compact, compute_layout, discretize, feasible_anchors, incremental_update, order_lines, LayoutParams,
};
use storyexp_core::model::Interval;

fn ordering(c: &mut Criterion) {
    let p = LayoutParams::default();
    let mut g = c.benchmark_group("ordering");
    for (persons, frags) in [(5, 12), (10, 40), (20, 120)] {
        let disc = discretize(&fragments(1, persons, frags)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(format!("{persons}x{frags}")), &disc, |b, d| {
            b.iter(|| order_lines(black_box(d), &p))
        });
    }
    g.finish();
}

fn compaction(c: &mut Criterion) {
    let p = LayoutParams::default();
    let mut g = c.benchmark_group("compaction");
    for (persons, frags) in [(5, 12), (10, 40), (20, 120)] {
        let disc = discretize(&fragments(2, persons, frags)).unwrap();
        let ord = order_lines(&disc, &p);
        let anchors = feasible_anchors(&disc, &ord, &align(&ord), &p);
        g.bench_function(format!("{persons}x{frags}"), |b| b.iter(|| compact(black_box(&disc), &ord, &anchors, &p)));
    }
    g.finish();
}

fn full_and_incremental(c: &mut Criterion) {
    let p = LayoutParams::default();
    let fs = fragments(3, 12, 60);
    let prev = compute_layout(&fs, &p).unwrap();
    let mut moved = fs.clone();
    let end = moved.iter().map(|f| f.interval.end).max().unwrap();
    moved[30].interval = Interval::point(end + 1);
    let changed = vec![moved[30].id.clone()];
    c.bench_function("layout/full 12x60", |b| b.iter(|| compute_layout(black_box(&fs), &p)));
    c.bench_function("layout/incremental 12x60", |b| {
        b.iter(|| incremental_update(black_box(&prev), &changed, &moved, &p))
    });
}

criterion_group!(benches, ordering, compaction, full_and_incremental);
criterion_main!(benches);
