//! Independent Monte-Carlo and brute-force oracles.
//!
//! Everything here validates the closed forms and soundness claims from the
//! outside: weight draws are taken literally from the posterior family, the
//! drawn vote's loss is evaluated mechanically, and partition optima come
//! from exhaustive subset scans. None of these routines are used by the
//! bound pipeline itself.

use crate::ensemble::VoterOutputs;
use crate::exec;
use crate::pac_bayes::{Family, Posterior};
use crate::s2d::deterministic_errors;
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// A Monte-Carlo estimate with provenance.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by √samples; `None` when it cannot
    /// be estimated (a single draw, or an empty conditioning bucket).
    pub std_error: Option<f64>,
    pub samples: usize,
    pub seed: u64,
}

/// Which partition optimum to compute exhaustively.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionVariant {
    MinSubsetSumAtLeastHalf,
    MinAbsSignedDifference,
}

/// Exhaustive 2ⁿ partition optimum; ground truth for certificate tests.
pub fn brute_force_partition(p: &[f64], variant: PartitionVariant) -> f64 {
    assert!(p.len() <= 22, "brute force partition is capped at n = 22");
    let total: f64 = p.iter().sum();
    let n = p.len();
    let mut best = f64::INFINITY;
    // Gray-code walk: one weight toggles per step.
    let mut sum = 0.0f64;
    let mut members = vec![false; n];
    let mut consider = |s: f64| {
        let value = match variant {
            PartitionVariant::MinSubsetSumAtLeastHalf => {
                if s >= total / 2.0 {
                    s
                } else {
                    return;
                }
            }
            PartitionVariant::MinAbsSignedDifference => (2.0 * s - total).abs(),
        };
        if value < best {
            best = value;
        }
    };
    consider(sum);
    for code in 1u64..(1u64 << n) {
        let bit = code.trailing_zeros() as usize;
        if members[bit] {
            sum -= p[bit];
        } else {
            sum += p[bit];
        }
        members[bit] = !members[bit];
        consider(sum);
    }
    best
}

/// Per-draw weight sample of a posterior family.
fn sample_weights(posterior: &Posterior, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
    out.clear();
    match posterior.family {
        Family::Categorical => {
            // A draw is a single voter index; encode it as a one-hot weight.
            let u: f64 = rng.random_range(0.0..1.0);
            let mut acc = 0.0;
            let mut pick = posterior.params.len() - 1;
            for (i, &p) in posterior.params.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            out.resize(posterior.params.len(), 0.0);
            out[pick] = 1.0;
        }
        Family::Dirichlet => {
            // Normalized independent unit-rate gammas.
            let mut total = 0.0;
            for &a in &posterior.params {
                let g = Gamma::new(a, 1.0).expect("positive shape");
                let v: f64 = g.sample(rng);
                total += v;
                out.push(v);
            }
            if total <= 0.0 {
                // All-zero draw (possible for tiny shapes): fall back to the mean.
                let s: f64 = posterior.params.iter().sum();
                out.clear();
                out.extend(posterior.params.iter().map(|&a| a / s));
            } else {
                for v in out.iter_mut() {
                    *v /= total;
                }
            }
        }
        Family::Gaussian => {
            for &mu in &posterior.params {
                let z: f64 = StandardNormal.sample(rng);
                out.push(mu + z);
            }
        }
    }
}

/// 0/1 loss of the vote with drawn weights `w` on one example.
///
/// Categorical/Dirichlet votes use the threshold loss at every class count —
/// error when the wrong-voter mass reaches half the drawn weights' own total
/// (the loss whose expectation the closed forms compute; it dominates the
/// plurality loss pointwise). The binary Gaussian errs on `y·(w·f) ≤ 0`;
/// multi-class Gaussians take the weighted plurality with lowest-index
/// tie-break.
fn drawn_vote_error(voters: &VoterOutputs, family: Family, w: &[f64], example: usize) -> f64 {
    match (family, voters.k) {
        (Family::Categorical | Family::Dirichlet, _) => {
            let total: f64 = w.iter().sum();
            let wrong: f64 = voters
                .error_row(example)
                .iter()
                .zip(w)
                .map(|(&e, &wi)| wi * e as f64)
                .sum();
            f64::from(wrong >= total / 2.0)
        }
        (Family::Gaussian, 2) => {
            let dot: f64 =
                (0..voters.n).map(|i| w[i] * voters.sign_prediction(example, i)).sum();
            f64::from(voters.sign_label(example) * dot <= 0.0)
        }
        (_, _) => {
            let mut scores = vec![0.0f64; voters.k];
            for i in 0..voters.n {
                scores[voters.prediction(example, i)] += w[i];
            }
            let mut best = 0usize;
            for (c, &s) in scores.iter().enumerate() {
                if s > scores[best] {
                    best = c;
                }
            }
            f64::from(best != voters.labels[example])
        }
    }
}

const DRAW_CHUNK: usize = 512;

/// Per-draw empirical risks over `indices`, one value per weight draw.
fn per_draw_risks(
    voters: &VoterOutputs,
    posterior: &Posterior,
    indices: &[usize],
    samples: usize,
    seed: u64,
) -> Vec<f64> {
    let chunks = samples.div_ceil(DRAW_CHUNK);
    let nested = exec::map_range(chunks, |chunk| {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (chunk as u64 + 1).wrapping_mul(0xa076_1d64_78bd_642f));
        let lo = chunk * DRAW_CHUNK;
        let hi = ((chunk + 1) * DRAW_CHUNK).min(samples);
        let mut w = Vec::with_capacity(voters.n);
        let mut out = Vec::with_capacity(hi - lo);
        for _ in lo..hi {
            sample_weights(posterior, &mut rng, &mut w);
            let risk: f64 = indices
                .iter()
                .map(|&j| drawn_vote_error(voters, posterior.family, &w, j))
                .sum::<f64>()
                / indices.len().max(1) as f64;
            out.push(risk);
        }
        out
    });
    nested.into_iter().flatten().collect()
}

fn summarize(values: &[f64], seed: u64) -> McEstimate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n.max(1) as f64;
    let std_error = (n > 1).then(|| {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    });
    McEstimate { mean, std_error, samples: n, seed }
}

/// Monte-Carlo estimate of the stochastic risk `E_{w∼Q} L̂(h_w)` over the
/// index set. Deterministic given the seed.
pub fn mc_stochastic_risk(
    voters: &VoterOutputs,
    posterior: &Posterior,
    indices: &[usize],
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::Domain("mc_stochastic_risk: samples must be ≥ 1".into()));
    }
    posterior.validate()?;
    let risks = per_draw_risks(voters, posterior, indices, samples, seed);
    Ok(summarize(&risks, seed))
}

/// Monte-Carlo conditional risks: the same draws, restricted to the examples
/// the posterior-mean vote gets right (`b`) and wrong (`c`). An empty bucket
/// yields `None`.
pub fn mc_conditional_risks(
    voters: &VoterOutputs,
    posterior: &Posterior,
    indices: &[usize],
    samples: usize,
    seed: u64,
) -> Result<(Option<McEstimate>, Option<McEstimate>)> {
    if samples == 0 {
        return Err(Error::Domain("mc_conditional_risks: samples must be ≥ 1".into()));
    }
    posterior.validate()?;
    let det = deterministic_errors(voters, posterior, indices)?;
    let correct: Vec<usize> = indices
        .iter()
        .zip(&det)
        .filter(|(_, &e)| e == 0)
        .map(|(&j, _)| j)
        .collect();
    let wrong: Vec<usize> =
        indices.iter().zip(&det).filter(|(_, &e)| e == 1).map(|(&j, _)| j).collect();
    let b = (!correct.is_empty())
        .then(|| summarize(&per_draw_risks(voters, posterior, &correct, samples, seed), seed));
    let c = (!wrong.is_empty())
        .then(|| summarize(&per_draw_risks(voters, posterior, &wrong, samples, seed), seed));
    Ok((b, c))
}

/// Monte-Carlo Bayes risk: per example, the sampled votes' *output vectors*
/// are averaged and the loss is applied to that averaged prediction.
/// Standard errors come from splitting the draws into ten batches.
pub fn mc_bayes_risk(
    voters: &VoterOutputs,
    posterior: &Posterior,
    indices: &[usize],
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::Domain("mc_bayes_risk: samples must be ≥ 1".into()));
    }
    posterior.validate()?;
    let batches = 10usize.min(samples);
    let per_batch = samples / batches;
    let batch_values: Vec<f64> = exec::map_range(batches, |b| {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (b as u64 + 1).wrapping_mul(0x2545_f491_4f6c_dd1d));
        // Accumulated output vectors per example: k entries each (±1 votes are
        // folded into two-class one-hots).
        let mut acc = vec![0.0f64; indices.len() * voters.k];
        let mut w = Vec::with_capacity(voters.n);
        for _ in 0..per_batch {
            sample_weights(posterior, &mut rng, &mut w);
            let wtotal: f64 = w.iter().sum();
            for (slot, &j) in indices.iter().enumerate() {
                let a = &mut acc[slot * voters.k..(slot + 1) * voters.k];
                match (posterior.family, voters.k) {
                    (Family::Gaussian, 2) => {
                        let dot: f64 =
                            (0..voters.n).map(|i| w[i] * voters.sign_prediction(j, i)).sum();
                        // The drawn vote's output as a two-class one-hot.
                        if dot > 0.0 {
                            a[1] += 1.0;
                        } else {
                            a[0] += 1.0;
                        }
                    }
                    (Family::Categorical | Family::Dirichlet, 2) => {
                        let wrong: f64 = voters
                            .error_row(j)
                            .iter()
                            .zip(&w)
                            .map(|(&e, &wi)| wi * e as f64)
                            .sum();
                        let errs = wrong >= wtotal / 2.0;
                        let predicted = if errs { 1 - voters.labels[j] } else { voters.labels[j] };
                        a[predicted] += 1.0;
                    }
                    (_, _) => {
                        let mut scores = vec![0.0f64; voters.k];
                        for i in 0..voters.n {
                            scores[voters.prediction(j, i)] += w[i];
                        }
                        let mut best = 0usize;
                        for (c, &s) in scores.iter().enumerate() {
                            if s > scores[best] {
                                best = c;
                            }
                        }
                        a[best] += 1.0;
                    }
                }
            }
        }
        // Loss of the averaged prediction, per example.
        let mut errors = 0usize;
        for (slot, &j) in indices.iter().enumerate() {
            let a = &acc[slot * voters.k..(slot + 1) * voters.k];
            let mut best = 0usize;
            for (c, &s) in a.iter().enumerate() {
                if s > a[best] {
                    best = c;
                }
            }
            if best != voters.labels[j] {
                errors += 1;
            }
        }
        errors as f64 / indices.len().max(1) as f64
    });
    let mean = batch_values.iter().sum::<f64>() / batches as f64;
    let std_error = (batches > 1).then(|| {
        let var = batch_values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (batches - 1) as f64;
        (var / batches as f64).sqrt()
    });
    Ok(McEstimate { mean, std_error, samples: per_batch * batches, seed })
}
