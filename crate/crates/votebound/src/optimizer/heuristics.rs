//! Post-training heuristics that tighten the partition bound.
//!
//! The deterministic lower bounds are non-differentiable in the posterior, so
//! after gradient training three greedy heuristics reshape the weights: (1)
//! clip the smallest-magnitude coordinates to zero, (2) coordinate descent
//! that grows the heavier partition set and shrinks the lighter one, (3) a
//! multiplicative rescale of `‖p‖₁`. Each candidate step is kept only if the
//! re-evaluated bound improves, so the recorded trace is strictly decreasing.
//!
//! Candidate evaluation uses a cheaper partition scale; the pipeline's final
//! certificate is recomputed at the full default scale, and the post-training
//! posterior is kept instead whenever it certifies better there.

use super::{train, EpochRecord, Objective, TrainConfig};
use crate::ensemble::VoterOutputs;
use crate::pac_bayes::{Family, Posterior, Prior};
use crate::partition::{DEFAULT_SCALED_TOTAL_CAP, FAST_SCALED_TOTAL_CAP};
use crate::s2d::{
    partition_bound, McSettings, PartitionBoundInput, PartitionBoundOutcome,
    StochasticCertificate,
};
use crate::Result;

/// Minimal improvement for a heuristic step to be accepted.
const IMPROVEMENT_EPS: f64 = 1e-9;

/// One accepted heuristic step.
#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub heuristic: &'static str,
    pub posterior_hash: u64,
    pub bound: f64,
}

/// The sequence of accepted heuristic steps; bound values are nonincreasing.
#[derive(Debug, Clone, Default)]
pub struct HeuristicTrace {
    pub entries: Vec<TraceEntry>,
}

impl HeuristicTrace {
    fn record(&mut self, heuristic: &'static str, params: &[f64], bound: f64) {
        self.entries.push(TraceEntry { heuristic, posterior_hash: hash_params(params), bound });
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].bound <= w[0].bound + 1e-12)
    }
}

fn hash_params(params: &[f64]) -> u64 {
    // FNV-1a over the parameter bit patterns.
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for p in params {
        for b in p.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
    }
    h
}

/// Re-evaluates the partition bound for candidate posterior parameters.
pub struct BoundEvaluator<'a> {
    voters: &'a VoterOutputs,
    prior: &'a Prior,
    train_idx: &'a [usize],
    halves: Option<(&'a [usize], &'a [usize])>,
    alpha: f64,
    family: Family,
    delta: f64,
    mc: McSettings,
    scale_cap: u64,
}

impl<'a> BoundEvaluator<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        voters: &'a VoterOutputs,
        prior: &'a Prior,
        family: Family,
        train_idx: &'a [usize],
        halves: Option<(&'a [usize], &'a [usize])>,
        alpha: f64,
        delta: f64,
        mc: McSettings,
    ) -> Self {
        Self {
            voters,
            prior,
            train_idx,
            halves,
            alpha,
            family,
            delta,
            mc,
            scale_cap: FAST_SCALED_TOTAL_CAP,
        }
    }

    fn certificate(&self) -> StochasticCertificate<'a> {
        match self.halves {
            None => StochasticCertificate::Seeger,
            Some((s1, s2)) => StochasticCertificate::CrossSplit { s1, s2, alpha: self.alpha },
        }
    }

    /// Bound at the search resolution; `Err` candidates are treated as
    /// non-improving by the heuristics.
    pub fn eval(&self, params: &[f64]) -> Result<PartitionBoundOutcome> {
        let posterior = Posterior::new(self.family, params.to_vec())?;
        partition_bound(PartitionBoundInput {
            voters: self.voters,
            posterior: &posterior,
            prior: self.prior,
            train_idx: self.train_idx,
            delta: self.delta,
            certificate: self.certificate(),
            scale_cap: self.scale_cap,
            mc: self.mc,
        })
    }

    /// Bound at the full reporting resolution.
    pub fn eval_full(&self, params: &[f64]) -> Result<PartitionBoundOutcome> {
        let posterior = Posterior::new(self.family, params.to_vec())?;
        partition_bound(PartitionBoundInput {
            voters: self.voters,
            posterior: &posterior,
            prior: self.prior,
            train_idx: self.train_idx,
            delta: self.delta,
            certificate: self.certificate(),
            scale_cap: DEFAULT_SCALED_TOTAL_CAP,
            mc: self.mc,
        })
    }
}

/// Renormalize Categorical candidates onto the simplex (per half in the
/// mixture setting); other families pass through.
fn repair(evaluator: &BoundEvaluator<'_>, params: &mut [f64]) {
    if evaluator.family != Family::Categorical {
        return;
    }
    match evaluator.halves {
        None => {
            let total: f64 = params.iter().sum();
            if total > 0.0 {
                for p in params.iter_mut() {
                    *p /= total;
                }
            }
        }
        Some(_) => {
            use crate::ensemble::VoterHalf;
            for (ids, mass) in [
                (evaluator.voters.half_indices(VoterHalf::One), evaluator.alpha),
                (evaluator.voters.half_indices(VoterHalf::Two), 1.0 - evaluator.alpha),
            ] {
                let total: f64 = ids.iter().map(|&i| params[i]).sum();
                if total > 0.0 {
                    for &i in &ids {
                        params[i] *= mass / total;
                    }
                }
            }
        }
    }
}

/// Heuristic (1): iteratively clip the smallest-magnitude coordinate to zero,
/// keeping each clip only while the bound improves.
pub fn heuristic_clip(
    params: &mut Vec<f64>,
    evaluator: &BoundEvaluator<'_>,
    current: &mut f64,
    trace: &mut HeuristicTrace,
) {
    loop {
        let live: Vec<usize> =
            (0..params.len()).filter(|&i| params[i].abs() > 0.0).collect();
        if live.len() <= 1 {
            return;
        }
        let smallest = *live
            .iter()
            .min_by(|&&a, &&b| params[a].abs().total_cmp(&params[b].abs()))
            .unwrap();
        let mut candidate = params.clone();
        candidate[smallest] = if evaluator.family == Family::Dirichlet {
            // Dirichlet parameters must stay positive; a near-zero shape is
            // the closest legal analogue of a clip.
            1e-12
        } else {
            0.0
        };
        repair(evaluator, &mut candidate);
        match evaluator.eval(&candidate) {
            Ok(out) if out.bound < *current - IMPROVEMENT_EPS => {
                *params = candidate;
                *current = out.bound;
                trace.record("clip", params, out.bound);
            }
            _ => return,
        }
    }
}

/// Heuristic (2): coordinate descent on the partition sets — grow the
/// heavier set, shrink the lighter one, with step sizes from a small grid.
pub fn heuristic_coordinate_descent(
    params: &mut Vec<f64>,
    evaluator: &BoundEvaluator<'_>,
    current: &mut f64,
    trace: &mut HeuristicTrace,
) {
    const ETAS: [f64; 3] = [0.01, 0.05, 0.1];
    for _round in 0..200 {
        let Ok(outcome) = evaluator.eval(params) else { return };
        let Some(cert) = outcome.certificate else { return };
        let mut improved = false;
        for &eta in &ETAS {
            let mut candidate = params.clone();
            for &i in &cert.set_one {
                candidate[i] *= 1.0 + eta;
            }
            for &i in &cert.set_two {
                candidate[i] *= 1.0 - eta;
            }
            repair(evaluator, &mut candidate);
            if let Ok(out) = evaluator.eval(&candidate) {
                if out.bound < *current - IMPROVEMENT_EPS {
                    *params = candidate;
                    *current = out.bound;
                    trace.record("coordinate_descent", params, out.bound);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            return;
        }
    }
}

/// Heuristic (3): rescale `‖p‖₁` over a log grid (Dirichlet and Gaussian
/// only — the Categorical mass is pinned to the simplex).
pub fn heuristic_rescale(
    params: &mut Vec<f64>,
    evaluator: &BoundEvaluator<'_>,
    current: &mut f64,
    trace: &mut HeuristicTrace,
) {
    if evaluator.family == Family::Categorical {
        return;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for step in 0..25 {
        let exponent = -3.0 + 6.0 * step as f64 / 24.0;
        let factor = 2.0f64.powf(exponent);
        let candidate: Vec<f64> = params.iter().map(|p| p * factor).collect();
        if let Ok(out) = evaluator.eval(&candidate) {
            if out.bound < *current - IMPROVEMENT_EPS
                && best.as_ref().map_or(true, |(b, _)| out.bound < *b)
            {
                best = Some((out.bound, candidate));
            }
        }
    }
    if let Some((bound, candidate)) = best {
        *params = candidate;
        *current = bound;
        trace.record("rescale", params, bound);
    }
}

/// Everything `full_pipeline` produces.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub posterior: Posterior,
    /// Final certificate at the full partition resolution.
    pub outcome: PartitionBoundOutcome,
    /// Certificate of the freshly trained posterior at the same resolution.
    pub post_training: PartitionBoundOutcome,
    pub trace: HeuristicTrace,
    pub curve: Vec<EpochRecord>,
    /// The heuristics were discarded because the trained posterior certified
    /// better at full resolution.
    pub reverted: bool,
}

/// Train, then cycle clip → coordinate descent → rescale until a full cycle
/// stops improving; the final certificate is recomputed at full resolution
/// and the better of {trained, tightened} posterior is kept.
#[allow(clippy::too_many_arguments)]
pub fn full_pipeline(
    voters: &VoterOutputs,
    family: Family,
    prior: &Prior,
    train_idx: &[usize],
    halves: Option<(&[usize], &[usize])>,
    objective: Objective,
    config: &TrainConfig,
    heuristics_enabled: bool,
    mc: McSettings,
) -> Result<PipelineOutcome> {
    let (posterior, curve) = train(voters, family, train_idx, halves, objective, config)?;
    let alpha = match objective {
        Objective::Seeger | Objective::SecondOrder => 0.5,
        Objective::CrossSplit { alpha } => alpha,
    };
    let evaluator = BoundEvaluator::new(
        voters,
        prior,
        family,
        train_idx,
        halves,
        alpha,
        config.delta,
        mc,
    );
    let post_training = evaluator.eval_full(&posterior.params)?;
    if !heuristics_enabled {
        return Ok(PipelineOutcome {
            posterior,
            outcome: post_training.clone(),
            post_training,
            trace: HeuristicTrace::default(),
            curve,
            reverted: false,
        });
    }
    let mut params = posterior.params.clone();
    let mut trace = HeuristicTrace::default();
    let mut current = evaluator.eval(&params)?.bound;
    for _cycle in 0..10 {
        let before = trace.entries.len();
        heuristic_clip(&mut params, &evaluator, &mut current, &mut trace);
        heuristic_coordinate_descent(&mut params, &evaluator, &mut current, &mut trace);
        heuristic_rescale(&mut params, &evaluator, &mut current, &mut trace);
        if trace.entries.len() == before {
            break;
        }
    }
    let tightened = evaluator.eval_full(&params)?;
    if tightened.bound <= post_training.bound {
        Ok(PipelineOutcome {
            posterior: Posterior::new(family, params)?,
            outcome: tightened,
            post_training,
            trace,
            curve,
            reverted: false,
        })
    } else {
        // The search-resolution gains did not survive full resolution.
        Ok(PipelineOutcome {
            posterior,
            outcome: post_training.clone(),
            post_training,
            trace,
            curve,
            reverted: true,
        })
    }
}
