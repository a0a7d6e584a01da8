use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sqrtpoly::census::{full_census, CensusOptions};
use sqrtpoly::fourier::count_vanishing_bruteforce;
use sqrtpoly::search::{minimal_search, SearchOptions};
use sqrtpoly::{make_field_ctx, Parallelism};

/// The threaded mode is pinned to 4 workers so the pool path runs even on a single core.
fn modes() -> [(&'static str, Parallelism); 2] {
    [
        ("sequential", Parallelism::Sequential),
        ("threads", Parallelism::Threads(4)),
    ]
}

fn census(c: &mut Criterion) {
    let mut g = c.benchmark_group("census");
    g.sample_size(10);
    for p in [41u64, 53] {
        let ctx = make_field_ctx(p).unwrap();
        for (name, par) in modes() {
            g.bench_with_input(BenchmarkId::new(name, p), &ctx, |b, ctx| {
                b.iter(|| full_census(black_box(ctx), &CensusOptions::with_par(par)).unwrap())
            });
        }
    }
    g.finish();
}

fn bruteforce_count(c: &mut Criterion) {
    let mut g = c.benchmark_group("count_vanishing");
    g.sample_size(10);
    let ctx = make_field_ctx(41).unwrap();
    for (name, par) in modes() {
        g.bench_function(BenchmarkId::new(name, 41), |b| {
            b.iter(|| count_vanishing_bruteforce(black_box(&ctx), 20, 1, None, par).unwrap())
        });
    }
    g.finish();
}

fn search(c: &mut Criterion) {
    let mut g = c.benchmark_group("minimal_search");
    g.sample_size(10);
    for p in [73u64, 89] {
        let ctx = make_field_ctx(p).unwrap();
        for (name, par) in modes() {
            g.bench_with_input(BenchmarkId::new(name, p), &ctx, |b, ctx| {
                b.iter(|| minimal_search(black_box(ctx), &SearchOptions::with_par(par)).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, census, bruteforce_count, search);
criterion_main!(benches);
