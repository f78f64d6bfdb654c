use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use dst_bench::{certified, layered, lp_solution, oracle_suite, SEED};
use dst_core::decomposition::{assign_capacities, grow_tree, DEFAULT_NODE_BUDGET};
use dst_core::lp::{solve_basic_lp, solve_strengthened_lp};
use dst_core::oracle::{exact_dst, exhaustive_dst};
use dst_core::rounding::{decompose_and_round, main_algorithm_with_solution, RoundingConfig};
use dst_core::LayeredInstance;

fn oracles(c: &mut Criterion) {
    let suite = oracle_suite();
    let mut g = c.benchmark_group("oracle");
    g.bench_function("exact_dp", |b| {
        b.iter(|| suite.iter().map(|i| exact_dst(i).unwrap().0).sum::<f64>())
    });
    g.bench_function("exhaustive", |b| b.iter(|| suite.iter().map(|i| exhaustive_dst(i).unwrap()).sum::<f64>()));
    g.finish();
}

fn lps(c: &mut Criterion) {
    let mut g = c.benchmark_group("lp");
    g.sample_size(20);
    for k in [2, 4] {
        let li = LayeredInstance::prepare(&layered(k)).unwrap();
        g.bench_with_input(BenchmarkId::new("basic", k), &li, |b, li| b.iter(|| solve_basic_lp(li).unwrap()));
        g.bench_with_input(BenchmarkId::new("strengthened", k), &li, |b, li| {
            b.iter(|| solve_strengthened_lp(li).unwrap())
        });
    }
    g.finish();
}

fn trees(c: &mut Criterion) {
    let (li, sol) = lp_solution(&layered(3));
    let mut g = c.benchmark_group("decomposition_tree");
    for d in [2, 4, 8] {
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            b.iter(|| {
                let mut t = grow_tree(&sol, &li, d, SEED, DEFAULT_NODE_BUDGET).unwrap();
                assign_capacities(&mut t);
                t.len()
            })
        });
    }
    g.finish();
}

fn rounding(c: &mut Criterion) {
    let ri = certified(4);
    let mut g = c.benchmark_group("decompose_and_round");
    for d in [16, 256, 4096] {
        let mut cfg = RoundingConfig::for_instance(ri.instance.graph.vertex_count(), 4, SEED);
        cfg.d = d;
        for lazy in [false, true] {
            let name = if lazy { "lazy" } else { "naive" };
            g.bench_with_input(BenchmarkId::new(name, d), &cfg, |b, cfg| {
                let mut round = 0;
                b.iter(|| {
                    round += 1;
                    black_box(decompose_and_round(&ri.layered, &ri.solution, cfg, round, lazy).unwrap())
                })
            });
        }
    }
    g.finish();

    let mut g = c.benchmark_group("main_algorithm");
    g.sample_size(10);
    let cfg = RoundingConfig::for_instance(ri.instance.graph.vertex_count(), 4, SEED);
    g.bench_function("certified_k4", |b| {
        b.iter(|| main_algorithm_with_solution(&ri.layered, &ri.solution, &cfg).unwrap().solution.cost)
    });
    g.finish();
}

criterion_group!(benches, oracles, lps, trees, rounding);
criterion_main!(benches);
