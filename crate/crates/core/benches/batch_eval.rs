//! Parallel versus sequential batch evaluation over growing worlds.
//!
//! Each world holds `n` independent promise-breaking maxims; a batch
//! run saturates one willed world per (maxim, operator) pair. The
//! parallel path distributes pairs with rayon, the sequential path
//! walks them in order; both must produce the same rows.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use full_core::engine::ResourceLimits;
use full_core::evaluate::{evaluate_all, evaluate_all_sequential};
use full_core::synth::bench_world;
use full_core::DeonticOp;

fn bench_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch_eval");
    group.sample_size(10);
    let ops = [DeonticOp::Perm, DeonticOp::Imp];
    for n in [2usize, 4, 8] {
        let kb = bench_world(n);
        let limits = ResourceLimits::default();
        group.bench_with_input(BenchmarkId::new("parallel", n), &kb, |b, kb| {
            b.iter(|| black_box(evaluate_all(kb, &ops, limits).expect("evaluates")));
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &kb, |b, kb| {
            b.iter(|| black_box(evaluate_all_sequential(kb, &ops, limits).expect("evaluates")));
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch);
criterion_main!(benches);
