//! Stochastic risks, conditional risks, deterministic lower bounds, and the
//! partition-bound assembly.
//!
//! For each posterior family the per-example stochastic risk
//! `E_{w∼Q} ℓ(h_w(x), y)` has a closed form:
//!
//! * Categorical `C(p)`: the error mass `p_F = Σ_i p_i·1{f_i(x) ≠ y}`;
//! * Dirichlet `D(p)`: `I_{0.5}(‖p‖₁ − p_F, p_F)` through the aggregation
//!   property of Dirichlet marginals;
//! * Gaussian `N(p, I)`, binary: `Φ(y·(p·f(x))/√n)` for ±1 voters;
//! * Gaussian, multi-class: one minus the orthant probability that the true
//!   class beats every other class, estimated by Monte Carlo over the
//!   (k−1)-variate Gaussian of score differences.
//!
//! Conditioning those risks on whether the posterior-mean vote `h_p` is
//! right or wrong yields the empirical conditional risks `b̂`, `ĉ`; the
//! partition certificates yield deterministic lower bounds `b̃`, `c̃` valid
//! for every posterior and every vote simultaneously; and the triple bound
//! `(L̃ − b̃)/(c̃ − b̃)` converts a stochastic certificate `L̃` into a
//! deterministic one. With the trivial bounds `b̃ = 0`, `c̃ = ½` this
//! degrades gracefully to the classical factor-2 bound `2·L̃`.

use crate::ensemble::{VoterHalf, VoterOutputs};
use crate::exec;
use crate::pac_bayes::{self, cross_bound, seeger_bound, CertificateInput, Family, Posterior, Prior};
use crate::partition::{
    min_abs_signed_difference_capped, min_subset_sum_at_least_half_capped, PartitionCertificate,
    DEFAULT_SCALED_TOTAL_CAP,
};
use crate::special::{mvn_cdf_at_origin, normal_upper_tail, reg_inc_beta};
use crate::{Error, Result};

/// Monte-Carlo settings for the profiles that need sampling.
#[derive(Debug, Clone, Copy)]
pub struct McSettings {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { samples: 100_000, seed: 0 }
    }
}

/// Per-example stochastic risks over a fixed index set, plus their mean.
#[derive(Debug, Clone)]
pub struct StochasticRiskProfile {
    pub family: Family,
    /// Aligned with the index set the profile was computed on.
    pub per_example: Vec<f64>,
    pub mean: f64,
    /// Monte-Carlo standard errors, present only for sampled profiles.
    pub per_example_se: Option<Vec<f64>>,
    /// Standard error of `mean` for sampled profiles.
    pub mean_se: Option<f64>,
}

impl StochasticRiskProfile {
    fn closed_form(family: Family, per_example: Vec<f64>) -> Self {
        let mean = per_example.iter().sum::<f64>() / per_example.len().max(1) as f64;
        Self { family, per_example, mean, per_example_se: None, mean_se: None }
    }
}

fn check_params(voters: &VoterOutputs, params: &[f64]) -> Result<()> {
    if params.len() != voters.n {
        return Err(Error::Domain(format!(
            "posterior has {} parameters for {} voters",
            params.len(),
            voters.n
        )));
    }
    Ok(())
}

/// Categorical stochastic risk: `per_example[j] = Σ_i p_i·error[j][i]`.
pub fn stochastic_risk_categorical(
    voters: &VoterOutputs,
    params: &[f64],
    indices: &[usize],
) -> Result<StochasticRiskProfile> {
    check_params(voters, params)?;
    let per_example = exec::map_slice(indices, |&j| {
        voters
            .error_row(j)
            .iter()
            .zip(params)
            .map(|(&e, &p)| p * e as f64)
            .sum::<f64>()
    });
    Ok(StochasticRiskProfile::closed_form(Family::Categorical, per_example))
}

/// Dirichlet stochastic risk: `I_{0.5}(‖p‖₁ − p_F, p_F)` per example, with
/// the endpoint conventions `p_F = 0 ↦ 0` and `p_F = ‖p‖₁ ↦ 1`.
pub fn stochastic_risk_dirichlet(
    voters: &VoterOutputs,
    params: &[f64],
    indices: &[usize],
) -> Result<StochasticRiskProfile> {
    check_params(voters, params)?;
    if params.iter().any(|&p| p <= 0.0) {
        return Err(Error::Domain("dirichlet stochastic risk needs positive parameters".into()));
    }
    let total: f64 = params.iter().sum();
    let rows: Vec<Result<f64>> = exec::map_slice(indices, |&j| {
        let p_f: f64 = voters
            .error_row(j)
            .iter()
            .zip(params)
            .map(|(&e, &p)| p * e as f64)
            .sum();
        if p_f <= 0.0 {
            Ok(0.0)
        } else if p_f >= total {
            Ok(1.0)
        } else {
            reg_inc_beta(0.5, total - p_f, p_f)
        }
    });
    let per_example = rows.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(StochasticRiskProfile::closed_form(Family::Dirichlet, per_example))
}

/// Binary Gaussian stochastic risk: `Φ(y·(p·f(x))/√n)` with ±1 voters, so
/// `‖f(x)‖ = √n` for every example.
pub fn stochastic_risk_gaussian_binary(
    voters: &VoterOutputs,
    params: &[f64],
    indices: &[usize],
) -> Result<StochasticRiskProfile> {
    check_params(voters, params)?;
    if voters.k != 2 {
        return Err(Error::Domain(format!(
            "binary gaussian risk needs k = 2, got k = {}",
            voters.k
        )));
    }
    let sqrt_n = (voters.n as f64).sqrt();
    let per_example = exec::map_slice(indices, |&j| {
        let dot: f64 =
            (0..voters.n).map(|i| params[i] * voters.sign_prediction(j, i)).sum();
        normal_upper_tail(voters.sign_label(j) * dot / sqrt_n)
    });
    Ok(StochasticRiskProfile::closed_form(Family::Gaussian, per_example))
}

/// Multi-class Gaussian stochastic risk.
///
/// For the true class `c` of example `x`, the score differences
/// `w·(f_{:,j}(x) − f_{:,c}(x))` over `j ≠ c` form a (k−1)-variate Gaussian
/// with mean `p·d_j` and Gram covariance `d_j·d_l`; the probability that all
/// of them are ≤ 0 is the probability the vote is *correct*, so the risk is
/// its complement. Estimated per example by [`mvn_cdf_at_origin`] with a
/// deterministic per-example seed derived from `mc.seed`.
pub fn stochastic_risk_gaussian_multiclass(
    voters: &VoterOutputs,
    params: &[f64],
    indices: &[usize],
    mc: McSettings,
) -> Result<StochasticRiskProfile> {
    check_params(voters, params)?;
    if voters.k < 2 {
        return Err(Error::Domain("multiclass gaussian risk needs k ≥ 2".into()));
    }
    let k = voters.k;
    let n = voters.n;
    let rows: Vec<Result<(f64, f64)>> = exec::map_slice(indices, |&j| {
        let truth = voters.labels[j];
        let dim = k - 1;
        // Difference columns d_l = f_{:,class_l} − f_{:,truth}, classes ≠ truth
        // in ascending order.
        let mut diffs = vec![0.0f64; dim * n];
        let mut truth_col = vec![0.0f64; n];
        voters.class_indicator_column(j, truth, &mut truth_col);
        let mut scratch = vec![0.0f64; n];
        for (l, class) in (0..k).filter(|&c| c != truth).enumerate() {
            voters.class_indicator_column(j, class, &mut scratch);
            for i in 0..n {
                diffs[l * n + i] = scratch[i] - truth_col[i];
            }
        }
        let mut mean = vec![0.0f64; dim];
        for l in 0..dim {
            mean[l] = (0..n).map(|i| params[i] * diffs[l * n + i]).sum();
        }
        let mut cov = vec![0.0f64; dim * dim];
        for l in 0..dim {
            for t in l..dim {
                let v: f64 = (0..n).map(|i| diffs[l * n + i] * diffs[t * n + i]).sum();
                cov[l * dim + t] = v;
                cov[t * dim + l] = v;
            }
        }
        let est = mvn_cdf_at_origin(
            &mean,
            &cov,
            mc.samples,
            mc.seed ^ (j as u64 + 1).wrapping_mul(0xd134_2543_de82_ef95),
        )?;
        Ok((1.0 - est.estimate, est.std_error))
    });
    let mut per_example = Vec::with_capacity(indices.len());
    let mut ses = Vec::with_capacity(indices.len());
    for r in rows {
        let (risk, se) = r?;
        per_example.push(risk);
        ses.push(se);
    }
    let count = per_example.len().max(1) as f64;
    let mean = per_example.iter().sum::<f64>() / count;
    let mean_se = (ses.iter().map(|s| s * s).sum::<f64>()).sqrt() / count;
    Ok(StochasticRiskProfile {
        family: Family::Gaussian,
        per_example,
        mean,
        per_example_se: Some(ses),
        mean_se: Some(mean_se),
    })
}

/// Family dispatcher for the per-example stochastic risk.
pub fn stochastic_risk(
    voters: &VoterOutputs,
    posterior: &Posterior,
    indices: &[usize],
    mc: McSettings,
) -> Result<StochasticRiskProfile> {
    match (posterior.family, voters.k) {
        (Family::Categorical, _) => stochastic_risk_categorical(voters, &posterior.params, indices),
        (Family::Dirichlet, _) => stochastic_risk_dirichlet(voters, &posterior.params, indices),
        (Family::Gaussian, 2) => stochastic_risk_gaussian_binary(voters, &posterior.params, indices),
        (Family::Gaussian, _) => {
            stochastic_risk_gaussian_multiclass(voters, &posterior.params, indices, mc)
        }
    }
}

/// Deterministic 0/1 errors of the posterior-mean vote `h_p`, with each
/// family's own loss convention: Categorical/Dirichlet binary votes err when
/// the wrong-voter mass reaches half the total (ties count as errors); the
/// binary Gaussian vote errs when `y·(p·f(x)) ≤ 0`; every multi-class vote
/// uses the weighted plurality with lowest-index tie-break.
pub fn deterministic_errors(
    voters: &VoterOutputs,
    posterior: &Posterior,
    indices: &[usize],
) -> Result<Vec<u8>> {
    check_params(voters, &posterior.params)?;
    let params = &posterior.params;
    let out = match (posterior.family, voters.k) {
        (Family::Categorical | Family::Dirichlet, 2) => {
            let total: f64 = params.iter().sum();
            exec::map_slice(indices, |&j| {
                let p_f: f64 = voters
                    .error_row(j)
                    .iter()
                    .zip(params)
                    .map(|(&e, &p)| p * e as f64)
                    .sum();
                u8::from(p_f >= total / 2.0)
            })
        }
        (Family::Gaussian, 2) => exec::map_slice(indices, |&j| {
            let dot: f64 =
                (0..voters.n).map(|i| params[i] * voters.sign_prediction(j, i)).sum();
            u8::from(voters.sign_label(j) * dot <= 0.0)
        }),
        (_, _) => exec::map_slice(indices, |&j| {
            let mut scores = vec![0.0f64; voters.k];
            for i in 0..voters.n {
                scores[voters.prediction(j, i)] += params[i];
            }
            let mut best = 0usize;
            for (c, &s) in scores.iter().enumerate() {
                if s > scores[best] {
                    best = c;
                }
            }
            u8::from(best != voters.labels[j])
        }),
    };
    Ok(out)
}

/// Mean deterministic error of `h_p` over an index set.
pub fn deterministic_risk(
    voters: &VoterOutputs,
    posterior: &Posterior,
    indices: &[usize],
) -> Result<f64> {
    let errs = deterministic_errors(voters, posterior, indices)?;
    Ok(errs.iter().map(|&e| e as f64).sum::<f64>() / errs.len().max(1) as f64)
}

/// Empirical conditional risks of a profile, split by `h_p`'s correctness.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalRisks {
    /// Mean stochastic risk over the examples `h_p` classifies correctly.
    pub b_hat: Option<f64>,
    /// Mean stochastic risk over the examples `h_p` gets wrong.
    pub c_hat: Option<f64>,
    pub m0: usize,
    pub m1: usize,
}

/// Bucket a per-example profile by the deterministic error indicators.
pub fn conditional_split(
    profile: &StochasticRiskProfile,
    det_errors: &[u8],
) -> Result<ConditionalRisks> {
    if profile.per_example.len() != det_errors.len() {
        return Err(Error::Domain(format!(
            "conditional split: profile has {} entries, errors {}",
            profile.per_example.len(),
            det_errors.len()
        )));
    }
    let (mut sum0, mut sum1) = (0.0f64, 0.0f64);
    let (mut m0, mut m1) = (0usize, 0usize);
    for (&risk, &err) in profile.per_example.iter().zip(det_errors) {
        if err == 0 {
            sum0 += risk;
            m0 += 1;
        } else {
            sum1 += risk;
            m1 += 1;
        }
    }
    Ok(ConditionalRisks {
        b_hat: (m0 > 0).then(|| sum0 / m0 as f64),
        c_hat: (m1 > 0).then(|| sum1 / m1 as f64),
        m0,
        m1,
    })
}

/// Deterministic lower bounds on the conditional risks, valid for every
/// posterior and every vote simultaneously.
#[derive(Debug, Clone)]
pub struct DeterministicLowerBounds {
    pub b_lower: f64,
    pub c_lower: f64,
    /// The partition certificate backing `c_lower`.
    pub certificate: Option<PartitionCertificate>,
}

/// Family-specific deterministic lower bounds.
///
/// Categorical: `c ≥` the certified minimal subset sum ≥ ‖p‖₁/2, `b ≥ 0`.
/// Dirichlet: `c ≥ I_{0.5}(‖p‖₁ − p̃, p̃)` with `p̃` the certified minimal
/// subset sum (under-estimating `p̃` keeps this sound since `I_{0.5}` grows
/// in its second argument). Binary Gaussian: `c ≥ 1 − Φ(p̄/√n)` with `p̄`
/// the certified minimal signed difference of `|p|` (sound for the same
/// monotonicity reason) and `b ≥ Φ(‖p‖₁/√n)`. The multi-class Gaussian has
/// no deterministic bounds.
pub fn deterministic_lower_bounds(
    family: Family,
    params: &[f64],
    k: usize,
    scale_cap: u64,
) -> Result<DeterministicLowerBounds> {
    match (family, k) {
        (Family::Categorical, _) => {
            let cert = min_subset_sum_at_least_half_capped(params, scale_cap)?;
            Ok(DeterministicLowerBounds {
                b_lower: 0.0,
                c_lower: cert.certified_value.min(1.0),
                certificate: Some(cert),
            })
        }
        (Family::Dirichlet, _) => {
            let total: f64 = params.iter().sum();
            let cert = min_subset_sum_at_least_half_capped(params, scale_cap)?;
            let p_tilde = cert.certified_value;
            let c_lower = if total - p_tilde <= 0.0 {
                1.0
            } else {
                reg_inc_beta(0.5, total - p_tilde, p_tilde)?
            };
            Ok(DeterministicLowerBounds { b_lower: 0.0, c_lower, certificate: Some(cert) })
        }
        (Family::Gaussian, 2) => {
            let n = params.len() as f64;
            let l1: f64 = params.iter().map(|p| p.abs()).sum();
            if l1 <= 0.0 {
                // Zero posterior mean: both bounds collapse to Φ(0) = ½.
                return Ok(DeterministicLowerBounds {
                    b_lower: 0.5,
                    c_lower: 0.5,
                    certificate: None,
                });
            }
            let abs: Vec<f64> = params.iter().map(|p| p.abs()).collect();
            let cert = min_abs_signed_difference_capped(&abs, scale_cap)?;
            Ok(DeterministicLowerBounds {
                b_lower: normal_upper_tail(l1 / n.sqrt()),
                c_lower: 1.0 - normal_upper_tail(cert.certified_value / n.sqrt()),
                certificate: Some(cert),
            })
        }
        (Family::Gaussian, _) => Err(Error::NotApplicable(
            "deterministic lower bounds are unavailable for the multi-class Gaussian".into(),
        )),
    }
}

/// The triple-bound ratio `(L̃ − b̃)/(c̃ − b̃)`, clamped to [0, 1].
pub fn triple_bound(l_tilde: f64, b_tilde: f64, c_tilde: f64) -> Result<f64> {
    if !(c_tilde > b_tilde) {
        return Err(Error::Domain(format!(
            "triple bound needs c̃ > b̃, got c̃ = {c_tilde}, b̃ = {b_tilde}"
        )));
    }
    Ok(((l_tilde - b_tilde) / (c_tilde - b_tilde)).clamp(0.0, 1.0))
}

/// Which stochastic certificate supplies `L̃`.
#[derive(Debug, Clone, Copy)]
pub enum StochasticCertificate<'a> {
    /// Plain Seeger certificate over the training indices.
    Seeger,
    /// Cross-split certificate: voters trained on each half are scored on the
    /// other. `s1`/`s2` are the two halves of the training indices; `alpha`
    /// mixes the two posteriors and must match the posterior's mass split.
    CrossSplit { s1: &'a [usize], s2: &'a [usize], alpha: f64 },
}

/// Everything the partition bound consumes.
#[derive(Debug, Clone, Copy)]
pub struct PartitionBoundInput<'a> {
    pub voters: &'a VoterOutputs,
    pub posterior: &'a Posterior,
    pub prior: &'a Prior,
    pub train_idx: &'a [usize],
    pub delta: f64,
    pub certificate: StochasticCertificate<'a>,
    pub scale_cap: u64,
    pub mc: McSettings,
}

impl<'a> PartitionBoundInput<'a> {
    pub fn seeger(
        voters: &'a VoterOutputs,
        posterior: &'a Posterior,
        prior: &'a Prior,
        train_idx: &'a [usize],
        delta: f64,
    ) -> Self {
        Self {
            voters,
            posterior,
            prior,
            train_idx,
            delta,
            certificate: StochasticCertificate::Seeger,
            scale_cap: DEFAULT_SCALED_TOTAL_CAP,
            mc: McSettings::default(),
        }
    }
}

/// A fully assembled partition bound.
#[derive(Debug, Clone)]
pub struct PartitionBoundOutcome {
    /// Final deterministic bound, clamped to [0, 1].
    pub bound: f64,
    /// Pre-clamp value (the raw ratio, or `2·L̃` on the fallback path).
    pub raw: f64,
    pub l_tilde: f64,
    pub b_lower: f64,
    pub c_lower: f64,
    pub kl: f64,
    /// Empirical stochastic risk fed into the certificate.
    pub emp_risk: f64,
    /// True when `c̃ ≤ b̃` forced the factor-2 fallback `min(1, 2·L̃)`.
    pub fallback_factor2: bool,
    pub certificate: Option<PartitionCertificate>,
}

/// Assemble the partition bound: a stochastic upper bound `L̃` on the
/// `Q`-expected risk plus deterministic lower bounds `(b̃, c̃)` from the
/// partition certificates, combined through the triple-bound ratio. Falls
/// back to `min(1, 2·L̃)` when `c̃ > b̃` fails.
pub fn partition_bound(input: PartitionBoundInput<'_>) -> Result<PartitionBoundOutcome> {
    let PartitionBoundInput { voters, posterior, prior, train_idx, delta, certificate, scale_cap, mc } =
        input;
    if posterior.family == Family::Gaussian && voters.k > 2 {
        return Err(Error::NotApplicable(
            "partition bound does not cover the multi-class Gaussian".into(),
        ));
    }
    let (l_tilde, kl, emp_risk) = match certificate {
        StochasticCertificate::Seeger => {
            let profile = stochastic_risk(voters, posterior, train_idx, mc)?;
            let kl = pac_bayes::kl_divergence(posterior, prior)?;
            let l = seeger_bound(&CertificateInput {
                empirical_risk: profile.mean,
                m: train_idx.len(),
                kl_div: kl,
                delta,
            })?;
            (l, kl, profile.mean)
        }
        StochasticCertificate::CrossSplit { s1, s2, alpha } => {
            let (l, kl, mix) = cross_certificate(voters, posterior, s1, s2, alpha, delta, mc)?;
            (l, kl, mix)
        }
    };
    let det = deterministic_lower_bounds(posterior.family, &posterior.params, voters.k, scale_cap)?;
    let (bound, raw, fallback) = if det.c_lower > det.b_lower {
        let ratio = (l_tilde - det.b_lower) / (det.c_lower - det.b_lower);
        (ratio.clamp(0.0, 1.0), ratio, false)
    } else {
        let raw = 2.0 * l_tilde;
        (raw.min(1.0), raw, true)
    };
    Ok(PartitionBoundOutcome {
        bound,
        raw,
        l_tilde,
        b_lower: det.b_lower,
        c_lower: det.c_lower,
        kl,
        emp_risk,
        fallback_factor2: fallback,
        certificate: det.certificate,
    })
}

/// Cross-split stochastic certificate for a Categorical posterior whose mass
/// is already split `alpha`/`1−alpha` across the two voter halves (so the
/// mixture the certificate bounds *is* the posterior itself).
fn cross_certificate(
    voters: &VoterOutputs,
    posterior: &Posterior,
    s1: &[usize],
    s2: &[usize],
    alpha: f64,
    delta: f64,
    _mc: McSettings,
) -> Result<(f64, f64, f64)> {
    if posterior.family != Family::Categorical {
        return Err(Error::NotApplicable(
            "the cross-split certificate is implemented for the Categorical family".into(),
        ));
    }
    let t1 = voters.half_indices(VoterHalf::One);
    let t2 = voters.half_indices(VoterHalf::Two);
    if t1.is_empty() || t2.is_empty() {
        return Err(Error::Config("cross certificate needs voters tagged with both halves".into()));
    }
    let mass1: f64 = t1.iter().map(|&i| posterior.params[i]).sum();
    if (mass1 - alpha).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "cross certificate: posterior puts mass {mass1} on half one but alpha = {alpha}; \
             renormalize the posterior into mixture form first"
        )));
    }
    let q1: Vec<f64> = t1.iter().map(|&i| posterior.params[i] / mass1).collect();
    let q2: Vec<f64> = t2.iter().map(|&i| posterior.params[i] / (1.0 - mass1)).collect();
    let kl_of = |q: &[f64]| -> f64 {
        let n = q.len() as f64;
        q.iter().filter(|&&x| x > 0.0).map(|&x| x * (x * n).ln()).sum::<f64>().max(0.0)
    };
    let (kl1, kl2) = (kl_of(&q1), kl_of(&q2));
    let risk_of = |q: &[f64], voter_ids: &[usize], idx: &[usize]| -> f64 {
        let per = exec::map_slice(idx, |&j| {
            voter_ids.iter().zip(q).map(|(&i, &w)| w * voters.error(j, i)).sum::<f64>()
        });
        per.iter().sum::<f64>() / per.len().max(1) as f64
    };
    // Voters trained on half one are scored on the second half's examples.
    let r1 = risk_of(&q1, &t1, s2);
    let r2 = risk_of(&q2, &t2, s1);
    let m = s1.len() + s2.len();
    let l = cross_bound(r1, r2, s1.len(), m, kl1, kl2, alpha, delta)?;
    Ok((l, kl1 + kl2, alpha * r1 + (1.0 - alpha) * r2))
}

/// Outcome of the Cor-1-style triple bound for a vote fixed before seeing
/// the sample.
#[derive(Debug, Clone)]
pub struct TripleSingleOutcome {
    pub bound: f64,
    pub raw: f64,
    pub l_tilde: f64,
    pub b_tilde: f64,
    pub c_tilde: f64,
    pub kl: f64,
    pub fallback_factor2: bool,
    /// `h_p` made no empirical errors: the stochastic bound is reported as is.
    pub no_error_subset: bool,
    pub total_delta: f64,
}

/// Triple bound with *probabilistic* conditional lower bounds (evaluation
/// only: the vote must be fixed independently of the sample). Total
/// confidence is `1 − (δ₁ + δ₂ + δ₃)`.
pub fn triple_bound_single_h(
    voters: &VoterOutputs,
    posterior: &Posterior,
    prior: &Prior,
    train_idx: &[usize],
    deltas: (f64, f64, f64),
    mc: McSettings,
) -> Result<TripleSingleOutcome> {
    let (d1, d2, d3) = deltas;
    let profile = stochastic_risk(voters, posterior, train_idx, mc)?;
    let det_errs = deterministic_errors(voters, posterior, train_idx)?;
    let cond = conditional_split(&profile, &det_errs)?;
    let kl = pac_bayes::kl_divergence(posterior, prior)?;
    let m = train_idx.len();
    let l_tilde = seeger_bound(&CertificateInput {
        empirical_risk: profile.mean,
        m,
        kl_div: kl,
        delta: d1,
    })?;
    let total_delta = d1 + d2 + d3;
    if cond.m1 == 0 {
        // No empirical errors to condition on: L̃ itself bounds the risk.
        return Ok(TripleSingleOutcome {
            bound: l_tilde.min(1.0),
            raw: l_tilde,
            l_tilde,
            b_tilde: 0.0,
            c_tilde: 1.0,
            kl,
            fallback_factor2: false,
            no_error_subset: true,
            total_delta,
        });
    }
    // The trivial b ≥ 0 stands in when h_p is never right on the sample.
    let b_tilde = match cond.b_hat {
        None => 0.0,
        Some(b_hat) => pac_bayes::conditional_bound(
            b_hat,
            cond.m0,
            m,
            kl,
            d2,
            pac_bayes::BoundDirection::Lower,
        )?,
    };
    let c_tilde = pac_bayes::conditional_bound(
        cond.c_hat.expect("m1 > 0"),
        cond.m1,
        m,
        kl,
        d3,
        pac_bayes::BoundDirection::Lower,
    )?;
    let (bound, raw, fallback) = if c_tilde > b_tilde {
        let ratio = (l_tilde - b_tilde) / (c_tilde - b_tilde);
        (ratio.clamp(0.0, 1.0), ratio, false)
    } else {
        let raw = 2.0 * l_tilde;
        (raw.min(1.0), raw, true)
    };
    Ok(TripleSingleOutcome {
        bound,
        raw,
        l_tilde,
        b_tilde,
        c_tilde,
        kl,
        fallback_factor2: fallback,
        no_error_subset: false,
        total_delta,
    })
}
