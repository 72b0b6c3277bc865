use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use exposure_core::annotations::{fisher_exact, ContingencyTable, FisherMode};
use exposure_core::scales::optimize_partition;
use exposure_core::stats::{fit_ztnb, Design};
use exposure_core::synth::{generate, PlantedHierarchy};
use exposure_core::{project, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

fn projection(c: &mut Criterion) {
    let data = generate(&PlantedHierarchy::preset("three-level", 7).unwrap()).unwrap();
    c.bench_function("project three-level", |b| {
        b.iter(|| project(black_box(&data.network), Side::Influencers))
    });
}

fn optimizer(c: &mut Criterion) {
    let data = generate(&PlantedHierarchy::preset("three-level", 7).unwrap()).unwrap();
    let graph = project(&data.network, Side::Influencers);
    let mut group = c.benchmark_group("optimize_partition");
    for t in [0.1, 1.0, 10.0] {
        group.bench_function(format!("t={t}"), |b| {
            let mut seed = 0;
            b.iter(|| {
                seed += 1;
                optimize_partition(black_box(&graph), t, seed)
            })
        });
    }
    group.finish();
}

fn fisher(c: &mut Criterion) {
    let table = ContingencyTable::from_counts(vec![vec![8, 3, 2], vec![2, 7, 4], vec![1, 3, 9]]);
    let mut group = c.benchmark_group("fisher");
    group.bench_function("exact 3x3 n=39", |b| {
        b.iter(|| fisher_exact(black_box(&table), FisherMode::exact()).unwrap())
    });
    group.bench_function("monte carlo 1e4 draws", |b| {
        b.iter(|| {
            fisher_exact(
                black_box(&table),
                FisherMode::MonteCarlo {
                    draws: 10_000,
                    seed: 1,
                },
            )
            .unwrap()
        })
    });
    group.finish();
}

fn regression(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 2000;
    let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let theta = 2.0;
    let y: Vec<f64> = x
        .iter()
        .map(|xi| {
            let mu = (0.5f64 + 0.4 * xi).exp();
            loop {
                let lambda = Gamma::new(theta, mu / theta).unwrap().sample(&mut rng);
                let k = if lambda > 0.0 { Poisson::new(lambda).unwrap().sample(&mut rng) } else { 0.0 };
                if k >= 1.0 {
                    break k;
                }
            }
        })
        .collect();
    let design = Design::with_intercept(n, &[("x".to_owned(), x)]);
    c.bench_function("fit_ztnb n=2000", |b| {
        b.iter_batched(|| y.clone(), |y| fit_ztnb(&y, black_box(&design)).unwrap(), BatchSize::SmallInput)
    });
}

criterion_group!(benches, projection, optimizer, fisher, regression);
criterion_main!(benches);
