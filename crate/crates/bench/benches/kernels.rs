use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use purity_bench::{lmg_setup, random_hermitian};
use purity_core::dynamics::run_state;
use purity_core::ensemble::haar_unitary;
use purity_core::spin::polarized_state;
use purity_core::{eigendecompose, purity, Axis, SeedSpec};

fn eigen(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigendecompose");
    for d in [16, 64, 256] {
        let h = random_hermitian(d, 1);
        g.bench_with_input(BenchmarkId::from_parameter(d), &h, |b, h| {
            b.iter(|| eigendecompose(&h.clone()).unwrap())
        });
    }
    g.finish();
}

fn haar(c: &mut Criterion) {
    let mut g = c.benchmark_group("haar_unitary");
    for d in [16, 64] {
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            let mut rng = SeedSpec::new(2).rng();
            b.iter(|| haar_unitary(&mut rng, d).unwrap())
        });
    }
    g.finish();
}

fn observable_purity(c: &mut Criterion) {
    let a = random_hermitian(64, 3);
    c.bench_function("purity d=64", |b| b.iter(|| purity(&a.clone()).unwrap()));
}

fn perturbed_evolution(c: &mut Criterion) {
    let setup = lmg_setup(15, 10, 100.0, 1000).unwrap();
    let psi = polarized_state(setup.system(), Axis::X, false).unwrap();
    let seed = SeedSpec::new(4);
    let mut g = c.benchmark_group("perturbed_evolution");
    g.sample_size(10);
    g.bench_function("lmg N=15, 10 instances, 1000 steps", |b| {
        b.iter(|| run_state(&setup, &psi, 0, &seed).unwrap())
    });
    g.finish();
}

criterion_group!(benches, eigen, haar, observable_purity, perturbed_evolution);
criterion_main!(benches);
