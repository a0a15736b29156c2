//! Deterministic synthetic datasets for desk-scale experiments.
//!
//! Each generator reproduces the shape (example count, feature count, class
//! count) of a reference benchmark corpus and is calibrated so the stump or
//! forest ensembles built on it reach a similar difficulty regime (best-voter
//! error, vote error, per-example risk spread). Generation is keyed by the
//! dataset name alone, so every run sees the same data; run seeds only move
//! the splits and the training.

use crate::ensemble::Dataset;
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Shape and noise profile of one synthetic binary task.
struct BinarySpec {
    name: &'static str,
    m: usize,
    d: usize,
    /// Label threshold on feature 0 (a stump grid point).
    threshold: f64,
    /// Label flip probability: the best achievable stump error floor.
    flip: f64,
    /// Secondary informative features: (copy probability of the clean label
    /// signal, own threshold). The rest of the features are uniform noise.
    echoes: &'static [(f64, f64)],
    seed: u64,
}

/// Smooth latent-boundary binary task: a latent coordinate decides the
/// label through a logistic band of width `temp` plus a flat far-flip floor,
/// and every informative feature observes the coordinate through Gaussian
/// noise. The noise scales control how close the per-feature stumps sit to
/// each other, which in turn decides whether posterior optimization spreads
/// or concentrates.
struct LatentSpec {
    name: &'static str,
    m: usize,
    d: usize,
    /// Label noise far from the boundary.
    flip: f64,
    /// Width of the logistic label band around the boundary.
    temp: f64,
    /// Per informative feature: observation noise on the latent coordinate.
    noise: &'static [f64],
    seed: u64,
}

const HABER: LatentSpec = LatentSpec {
    name: "haber",
    m: 306,
    d: 3,
    flip: 0.13,
    temp: 0.105,
    noise: &[0.055, 0.18, 0.20],
    seed: 0x4841_4245,
};

const SVMG: BinarySpec = BinarySpec {
    name: "svmg",
    m: 7089,
    d: 4,
    threshold: 0.45,
    flip: 0.062,
    echoes: &[(0.85, 0.35), (0.75, 0.55)],
    seed: 0x5356_4d47,
};

const MUSH: BinarySpec = BinarySpec {
    name: "mush",
    m: 8124,
    d: 22,
    threshold: 0.45,
    flip: 0.042,
    echoes: &[(0.9, 0.35), (0.85, 0.55), (0.8, 0.45), (0.75, 0.65), (0.7, 0.25)],
    seed: 0x4d55_5348,
};

fn generate_latent(spec: &LatentSpec, m_override: Option<usize>) -> Dataset {
    use rand_distr::{Distribution, StandardNormal};
    let m = m_override.unwrap_or(spec.m);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut features = Vec::with_capacity(m * spec.d);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let z: f64 = rng.random_range(0.0..1.0);
        let p_upper = spec.flip
            + (1.0 - 2.0 * spec.flip) / (1.0 + (-(z - 0.5) / spec.temp).exp());
        let label = rng.random_range(0.0..1.0) < p_upper;
        for f in 0..spec.d {
            let v = match spec.noise.get(f) {
                Some(&b) => {
                    let nu: f64 = StandardNormal.sample(&mut rng);
                    (z + b * nu).clamp(0.0, 1.0)
                }
                None => rng.random_range(0.0..1.0),
            };
            features.push(v);
        }
        labels.push(usize::from(label));
    }
    Dataset::new(spec.name, features, labels, spec.d).expect("synthetic shapes are valid")
}

fn generate_binary(spec: &BinarySpec, m_override: Option<usize>) -> Dataset {
    let m = m_override.unwrap_or(spec.m);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut features = Vec::with_capacity(m * spec.d);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let x0: f64 = rng.random_range(0.0..1.0);
        let clean = x0 > spec.threshold;
        let label = if rng.random_range(0.0..1.0) < spec.flip { !clean } else { clean };
        features.push(x0);
        for f in 1..spec.d {
            let v = match spec.echoes.get(f - 1) {
                Some(&(fidelity, tau)) => {
                    // An echo feature lands on the clean side of its own
                    // threshold with the stated fidelity.
                    let side = if rng.random_range(0.0..1.0) < fidelity { clean } else { !clean };
                    if side {
                        rng.random_range(tau..1.0)
                    } else {
                        rng.random_range(0.0..tau)
                    }
                }
                None => rng.random_range(0.0..1.0),
            };
            features.push(v);
        }
        labels.push(usize::from(label));
    }
    Dataset::new(spec.name, features, labels, spec.d).expect("synthetic shapes are valid")
}

/// Endgame-pattern-like binary task: most board cells carry the same noisy
/// summary of the position (their stumps are exact column duplicates, the
/// way redundant cells of a solved pattern agree), while a few cells observe
/// the position independently. A support gap around the central thresholds
/// makes adjacent-threshold stumps coincide too, so the duplicate group is
/// wide.
fn generate_ttt(m_override: Option<usize>) -> Dataset {
    use rand_distr::{Distribution, StandardNormal};
    let m = m_override.unwrap_or(958);
    let d = 9;
    let (flip, temp) = (0.12, 0.16);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5454_5400);
    let mut features = Vec::with_capacity(m * d);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let z: f64 = rng.random_range(0.0..1.0);
        let p_upper = flip + (1.0 - 2.0 * flip) / (1.0 + (-(z - 0.5) / temp).exp());
        let label = rng.random_range(0.0..1.0) < p_upper;
        // Shared noisy observation with a (0.4, 0.6) support gap.
        let nu: f64 = StandardNormal.sample(&mut rng);
        let v = (z + 0.2 * nu).clamp(0.0, 1.0);
        let grouped = if v < 0.5 { 0.8 * v } else { 0.6 + 0.8 * (v - 0.5) };
        for f in 0..d {
            let value = if f < 6 {
                grouped
            } else {
                let own: f64 = StandardNormal.sample(&mut rng);
                (z + 0.26 * own).clamp(0.0, 1.0)
            };
            features.push(value);
        }
        labels.push(usize::from(label));
    }
    Dataset::new("ttt", features, labels, d).expect("synthetic shapes are valid")
}

/// Ten-class digit-like blobs: class centers in `[0,1]^d` with Gaussian
/// spread plus a small label noise floor.
fn generate_pend(m: usize) -> Dataset {
    let d = 9;
    let k = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5045_4e44);
    let centers: Vec<f64> = (0..k * d).map(|_| rng.random_range(0.1..0.9)).collect();
    let mut features = Vec::with_capacity(m * d);
    let mut labels = Vec::with_capacity(m);
    for j in 0..m {
        let class = j % k;
        let label = if rng.random_range(0.0..1.0) < 0.02 {
            rng.random_range(0..k)
        } else {
            class
        };
        for f in 0..d {
            let noise: f64 = rng.random_range(-1.0..1.0) + rng.random_range(-1.0..1.0);
            features.push((centers[class * d + f] + 0.09 * noise).clamp(0.0, 1.0));
        }
        labels.push(label);
    }
    Dataset::new("pend", features, labels, d).expect("synthetic shapes are valid")
}

/// Build a named synthetic dataset, optionally overriding the example count
/// (desk-scale subsampling).
pub fn synth_dataset(name: &str, m_override: Option<usize>) -> Result<Dataset> {
    match name.trim().to_ascii_lowercase().as_str() {
        "haber" => Ok(generate_latent(&HABER, m_override)),
        "ttt" => Ok(generate_ttt(m_override)),
        "svmg" => Ok(generate_binary(&SVMG, m_override)),
        "mush" => Ok(generate_binary(&MUSH, m_override)),
        "pend" => Ok(generate_pend(m_override.unwrap_or(2000))),
        other => Err(Error::Config(format!("unknown synthetic dataset '{other}'"))),
    }
}
