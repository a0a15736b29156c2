//! Data-parallel vs sequential timings for the hot inner loops.
//!
//! The default build runs the parallel path; rerun with
//! `cargo bench --no-default-features` for a fully sequential build. The
//! `exec_layer` group additionally pits the dispatching map against its
//! always-sequential twin inside one run.

use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use votebound::ensemble::{build_forest, SplitPlan, VoterOutputs};
use votebound::oracle::mc_stochastic_risk;
use votebound::s2d::{stochastic_risk_gaussian_binary, stochastic_risk_gaussian_multiclass, McSettings};
use votebound::special::mvn_cdf_at_origin;
use votebound::{exec, Family, Posterior};

#[cfg(feature = "parallel")]
const MODE: &str = "parallel";
#[cfg(not(feature = "parallel"))]
const MODE: &str = "sequential";

fn toy_voters(m: usize, n: usize, k: usize, seed: u64) -> VoterOutputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..k)).collect();
    let predictions: Vec<u16> = (0..m * n)
        .map(|idx| {
            let j = idx / n;
            if rng.random_range(0.0..1.0) < 0.7 {
                labels[j] as u16
            } else {
                rng.random_range(0..k) as u16
            }
        })
        .collect();
    VoterOutputs::from_predictions(predictions, labels, k, None).unwrap()
}

fn bench_profiles(c: &mut Criterion) {
    let voters = toy_voters(4000, 120, 2, 1);
    let params: Vec<f64> = (0..120).map(|i| 0.5 - 0.005 * i as f64).collect();
    let idx: Vec<usize> = (0..voters.m).collect();
    c.bench_function(&format!("gaussian_binary_profile/{MODE}"), |b| {
        b.iter(|| {
            stochastic_risk_gaussian_binary(black_box(&voters), black_box(&params), &idx).unwrap()
        })
    });

    let voters3 = toy_voters(40, 60, 3, 2);
    let params3: Vec<f64> = (0..60).map(|i| 0.3 - 0.005 * i as f64).collect();
    let idx3: Vec<usize> = (0..voters3.m).collect();
    c.bench_function(&format!("gaussian_multiclass_profile/{MODE}"), |b| {
        b.iter(|| {
            stochastic_risk_gaussian_multiclass(
                black_box(&voters3),
                black_box(&params3),
                &idx3,
                McSettings { samples: 4000, seed: 3 },
            )
            .unwrap()
        })
    });
}

fn bench_mc_oracle(c: &mut Criterion) {
    let voters = toy_voters(200, 40, 2, 4);
    let posterior =
        Posterior::new(Family::Dirichlet, (0..40).map(|i| 0.5 + 0.05 * i as f64).collect())
            .unwrap();
    let idx: Vec<usize> = (0..voters.m).collect();
    c.bench_function(&format!("mc_stochastic_risk_dirichlet/{MODE}"), |b| {
        b.iter(|| mc_stochastic_risk(black_box(&voters), &posterior, &idx, 20_000, 9).unwrap())
    });
}

fn bench_mvn(c: &mut Criterion) {
    let dim = 9;
    let mut cov = vec![0.0f64; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            cov[i * dim + j] = if i == j { 2.0 } else { 0.5 };
        }
    }
    let mean = vec![-0.2f64; dim];
    c.bench_function(&format!("mvn_cdf_at_origin/{MODE}"), |b| {
        b.iter(|| mvn_cdf_at_origin(black_box(&mean), black_box(&cov), 100_000, 7).unwrap())
    });
}

fn bench_forest(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = 1200usize;
    let d = 9usize;
    let k = 10usize;
    let mut features = Vec::with_capacity(m * d);
    let mut labels = Vec::with_capacity(m);
    for j in 0..m {
        let class = j % k;
        labels.push(class);
        for f in 0..d {
            features
                .push((class as f64 / k as f64 + 0.1 * rng.random_range(-1.0..1.0f64) + f as f64 * 0.0).clamp(0.0, 1.0));
        }
    }
    let data = votebound::ensemble::Dataset::new("bench", features, labels, d).unwrap();
    let split = SplitPlan::new(m, 0.5, 1).unwrap();
    c.bench_function(&format!("forest_training/{MODE}"), |b| {
        b.iter(|| build_forest(black_box(&data), &split, 20, 3).unwrap())
    });
}

fn bench_exec_layer(c: &mut Criterion) {
    // The same kernel through the dispatching map and the sequential twin.
    let kernel = |i: usize| {
        let mut acc = 0.0f64;
        for t in 0..400 {
            acc += ((i * 31 + t) as f64).sqrt().sin();
        }
        acc
    };
    c.bench_function("exec_map/dispatching", |b| {
        b.iter(|| exec::map_range(black_box(4096), kernel))
    });
    c.bench_function("exec_map/sequential_twin", |b| {
        b.iter(|| exec::map_range_seq(black_box(4096), kernel))
    });
}

criterion_group!(
    benches,
    bench_profiles,
    bench_mc_oracle,
    bench_mvn,
    bench_forest,
    bench_exec_layer
);
criterion_main!(benches);
