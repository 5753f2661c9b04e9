use birkhoff_bench::instance;
use birkhoff_core::{
    hungarian_max, solve_birkhoff, solve_grampa, sym_eigen, SolverMethod, SolverOptions,
};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn assignment(c: &mut Criterion) {
    let mut g = c.benchmark_group("hungarian");
    for n in [50, 200] {
        let p = instance(n, 0.5);
        let w = p.a.as_matrix().matmul(p.b.as_matrix());
        g.bench_with_input(BenchmarkId::from_parameter(n), &w, |bch, w| {
            bch.iter(|| hungarian_max(black_box(w)).unwrap())
        });
    }
    g.finish();
}

fn eigen(c: &mut Criterion) {
    let mut g = c.benchmark_group("sym_eigen");
    for n in [50, 200] {
        let p = instance(n, 0.0);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p.a, |bch, a| {
            bch.iter(|| sym_eigen(black_box(a)).unwrap())
        });
    }
    g.finish();
}

fn birkhoff(c: &mut Criterion) {
    let mut g = c.benchmark_group("birkhoff");
    g.sample_size(10);
    let p = instance(100, 0.1);
    for (name, method) in [
        ("admm", SolverMethod::Admm),
        ("frank-wolfe", SolverMethod::FrankWolfe),
    ] {
        // A fixed iteration count measures per-step cost, not convergence.
        let opts = SolverOptions {
            method,
            tol_gap: 0.0,
            max_iters: Some(100),
            ..Default::default()
        };
        g.bench_function(name, |bch| {
            bch.iter(|| solve_birkhoff(black_box(&p.a), black_box(&p.b), &opts).unwrap())
        });
    }
    g.finish();
}

fn grampa(c: &mut Criterion) {
    let p = instance(200, 0.1);
    c.bench_function("grampa/200", |bch| {
        bch.iter(|| solve_grampa(black_box(&p.a), black_box(&p.b), 0.2).unwrap())
    });
}

criterion_group!(benches, assignment, eigen, birkhoff, grampa);
criterion_main!(benches);
