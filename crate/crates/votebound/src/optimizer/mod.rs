//! Trains posterior parameters against the certificate objective, then
//! tightens the partition bound with post-training heuristics.
//!
//! The training objective is the full certificate value (the upper kl
//! inversion of the batch stochastic risk at the current KL budget), made
//! differentiable through the implicit derivatives of the inversion root.
//! Families are parameterized unconstrained: Categorical through a softmax,
//! Dirichlet through an exponential, Gaussian directly. Mini-batches
//! estimate the empirical risk; the KL term is exact at every step; the
//! reported certificate is always recomputed on the full training set.

mod adam;
mod heuristics;

pub use heuristics::{
    full_pipeline, heuristic_clip, heuristic_coordinate_descent, heuristic_rescale,
    BoundEvaluator, HeuristicTrace, PipelineOutcome, TraceEntry,
};

use crate::ensemble::{VoterHalf, VoterOutputs};
use crate::pac_bayes::{Family, Posterior};
use crate::special::{
    digamma, kl_inverse_upper_with_grads, normal_upper_tail, reg_inc_beta, trigamma,
};
use crate::{Error, Result};
use adam::Adam;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Optimizer hyperparameters and confidence budget.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate divisor applied by the plateau scheduler.
    pub scheduler_factor: f64,
    /// Epochs without improvement before the scheduler fires.
    pub scheduler_patience: usize,
    pub max_epochs: usize,
    /// Epochs without improvement before training stops.
    pub early_stop_patience: usize,
    pub seed: u64,
    pub delta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 1024,
            learning_rate: 0.1,
            scheduler_factor: 10.0,
            scheduler_patience: 2,
            max_epochs: 100,
            early_stop_patience: 25,
            seed: 0,
            delta: 0.05,
        }
    }
}

/// Which stochastic certificate the objective minimizes.
#[derive(Debug, Clone, Copy)]
pub enum Objective {
    Seeger,
    /// Tandem-loss certificate: the second-order baseline trains against its
    /// own bound, `4·kl⁻¹(Ê[W²], (2·KL + ln(2√m/δ))/m)`, which rewards
    /// decorrelated voters instead of the single best one.
    SecondOrder,
    /// Data-dependent setting: Categorical posterior in mixture form over
    /// two voter halves, trained against the cross-split certificate.
    CrossSplit { alpha: f64 },
}

/// One entry of the emitted training curve.
#[derive(Debug, Clone, Copy)]
pub struct EpochRecord {
    pub epoch: usize,
    pub objective: f64,
    pub learning_rate: f64,
}

/// Train a posterior of the given family on the training indices.
///
/// Returns the best-objective posterior seen and the per-epoch curve. With
/// `max_epochs = 0` the initialized posterior comes back untouched.
pub fn train(
    voters: &VoterOutputs,
    family: Family,
    train_idx: &[usize],
    halves: Option<(&[usize], &[usize])>,
    objective: Objective,
    config: &TrainConfig,
) -> Result<(Posterior, Vec<EpochRecord>)> {
    if family == Family::Gaussian && voters.k > 2 {
        return Err(Error::NotApplicable(
            "training the multi-class Gaussian objective is not supported".into(),
        ));
    }
    let model = Model::new(voters, family, train_idx, halves, objective, config.delta)?;
    let mut theta = vec![0.0f64; model.dim()];
    let mut curve = Vec::new();
    if config.max_epochs == 0 {
        return Ok((model.posterior(&theta), curve));
    }
    let mut opt = Adam::new(config.learning_rate, theta.len());
    let mut best_theta = theta.clone();
    let mut best_objective = model.objective(&theta, train_idx)?;
    curve.push(EpochRecord { epoch: 0, objective: best_objective, learning_rate: opt.learning_rate });
    let mut stale_epochs = 0usize;
    let mut plateau_epochs = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = train_idx.to_vec();
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for (batch_no, batch) in order.chunks(config.batch_size.max(1)).enumerate() {
            let (value, grad) = model.objective_with_grad(&theta, batch)?;
            if !value.is_finite() {
                return Err(Error::Numerical(format!(
                    "objective became non-finite at epoch {epoch}, batch {batch_no}"
                )));
            }
            opt.step(&mut theta, &grad);
        }
        let objective = model.objective(&theta, train_idx)?;
        curve.push(EpochRecord { epoch, objective, learning_rate: opt.learning_rate });
        if objective < best_objective - 1e-10 {
            best_objective = objective;
            best_theta.copy_from_slice(&theta);
            stale_epochs = 0;
            plateau_epochs = 0;
        } else {
            stale_epochs += 1;
            plateau_epochs += 1;
        }
        if plateau_epochs >= config.scheduler_patience {
            opt.learning_rate /= config.scheduler_factor;
            plateau_epochs = 0;
        }
        if stale_epochs >= config.early_stop_patience {
            break;
        }
    }
    Ok((model.posterior(&best_theta), curve))
}

/// Differentiable certificate objective for one family/certificate pair.
struct Model<'a> {
    voters: &'a VoterOutputs,
    family: Family,
    full_m: usize,
    delta: f64,
    kind: ModelKind,
}

enum ModelKind {
    Seeger { tandem: bool },
    Cross {
        alpha: f64,
        voters_one: Vec<usize>,
        voters_two: Vec<usize>,
        s1: Vec<usize>,
        s2: Vec<usize>,
    },
}

impl<'a> Model<'a> {
    fn new(
        voters: &'a VoterOutputs,
        family: Family,
        train_idx: &[usize],
        halves: Option<(&[usize], &[usize])>,
        objective: Objective,
        delta: f64,
    ) -> Result<Self> {
        let kind = match objective {
            Objective::Seeger => ModelKind::Seeger { tandem: false },
            Objective::SecondOrder => {
                if family == Family::Dirichlet {
                    return Err(Error::NotApplicable(
                        "the tandem objective has no Dirichlet variant".into(),
                    ));
                }
                ModelKind::Seeger { tandem: true }
            }
            Objective::CrossSplit { alpha } => {
                if family != Family::Categorical {
                    return Err(Error::NotApplicable(
                        "the cross-split objective is implemented for the Categorical family"
                            .into(),
                    ));
                }
                let (s1, s2) = halves.ok_or_else(|| {
                    Error::Config("cross-split training needs the two sample halves".into())
                })?;
                let voters_one = voters.half_indices(VoterHalf::One);
                let voters_two = voters.half_indices(VoterHalf::Two);
                if voters_one.is_empty() || voters_two.is_empty() {
                    return Err(Error::Config(
                        "cross-split training needs voters tagged with both halves".into(),
                    ));
                }
                ModelKind::Cross {
                    alpha,
                    voters_one,
                    voters_two,
                    s1: s1.to_vec(),
                    s2: s2.to_vec(),
                }
            }
        };
        Ok(Self { voters, family, full_m: train_idx.len(), delta, kind })
    }

    fn dim(&self) -> usize {
        self.voters.n
    }

    /// Map unconstrained parameters onto the family's domain.
    fn posterior(&self, theta: &[f64]) -> Posterior {
        match (&self.kind, self.family) {
            (ModelKind::Cross { alpha, voters_one, voters_two, .. }, _) => {
                let mut params = vec![0.0; theta.len()];
                for (ids, mass) in [(voters_one, *alpha), (voters_two, 1.0 - *alpha)] {
                    let mx =
                        ids.iter().map(|&i| theta[i]).fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = ids.iter().map(|&i| (theta[i] - mx).exp()).sum();
                    for &i in ids {
                        params[i] = mass * (theta[i] - mx).exp() / z;
                    }
                }
                Posterior { family: Family::Categorical, params }
            }
            (ModelKind::Seeger { .. }, Family::Categorical) => {
                let mx = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = theta.iter().map(|t| (t - mx).exp()).sum();
                Posterior {
                    family: Family::Categorical,
                    params: theta.iter().map(|t| (t - mx).exp() / z).collect(),
                }
            }
            (ModelKind::Seeger { .. }, Family::Dirichlet) => Posterior {
                family: Family::Dirichlet,
                params: theta.iter().map(|t| t.exp()).collect(),
            },
            (ModelKind::Seeger { .. }, Family::Gaussian) => {
                Posterior { family: Family::Gaussian, params: theta.to_vec() }
            }
        }
    }

    fn objective(&self, theta: &[f64], batch: &[usize]) -> Result<f64> {
        Ok(self.objective_terms(theta, batch)?.0)
    }

    fn objective_with_grad(&self, theta: &[f64], batch: &[usize]) -> Result<(f64, Vec<f64>)> {
        let (value, grad) = self.objective_terms(theta, batch)?;
        Ok((value, grad))
    }

    /// Certificate value at `theta` and its gradient through the implicit
    /// derivatives of the kl inversion.
    fn objective_terms(&self, theta: &[f64], batch: &[usize]) -> Result<(f64, Vec<f64>)> {
        let posterior = self.posterior(theta);
        let p = &posterior.params;
        let n = p.len();
        match &self.kind {
            ModelKind::Cross { alpha, voters_one, voters_two, s1, s2 } => {
                let alpha = *alpha;
                let (jlen, m) = (s1.len(), s1.len() + s2.len());
                let q1: Vec<f64> = voters_one.iter().map(|&i| p[i] / alpha).collect();
                let q2: Vec<f64> = voters_two.iter().map(|&i| p[i] / (1.0 - alpha)).collect();
                let e1 = mean_errors_for(self.voters, voters_one, s2);
                let e2 = mean_errors_for(self.voters, voters_two, s1);
                let r1: f64 = q1.iter().zip(&e1).map(|(a, b)| a * b).sum();
                let r2: f64 = q2.iter().zip(&e2).map(|(a, b)| a * b).sum();
                let mix = alpha * r1 + (1.0 - alpha) * r2;
                let kl_term = |q: &[f64]| -> f64 {
                    let len = q.len() as f64;
                    q.iter().filter(|&&x| x > 0.0).map(|&x| x * (x * len).ln()).sum::<f64>().max(0.0)
                };
                let (kl1, kl2) = (kl_term(&q1), kl_term(&q2));
                let budget = alpha * kl2 / jlen as f64
                    + (1.0 - alpha) * kl1 / (m - jlen) as f64
                    + (4.0 * ((jlen * (m - jlen)) as f64).sqrt() / self.delta).ln() / m as f64;
                let (value, dq, db) = kl_inverse_upper_with_grads(mix, budget)?;
                // Chain through both softmax halves.
                let mut grad = vec![0.0f64; n];
                for (ids, q, e, mix_w, kl_w) in [
                    (voters_one, &q1, &e1, alpha, (1.0 - alpha) / (m - jlen) as f64),
                    (voters_two, &q2, &e2, 1.0 - alpha, alpha / jlen as f64),
                ] {
                    let len = q.len() as f64;
                    let g_q: Vec<f64> = q
                        .iter()
                        .zip(e)
                        .map(|(&qi, &ei)| {
                            let d_kl = (qi.max(1e-300) * len).ln() + 1.0;
                            dq * mix_w * ei + db * kl_w * d_kl
                        })
                        .collect();
                    softmax_chain(q, &g_q, ids, &mut grad);
                }
                Ok((value, grad))
            }
            ModelKind::Seeger { tandem } => {
                let tandem = *tandem;
                let m = self.full_m as f64;
                let log_term = (2.0 * m.sqrt() / self.delta).ln();
                // The tandem certificate pays for the product posterior.
                let kl_scale = if tandem { 2.0 } else { 1.0 };
                match self.family {
                    Family::Categorical => {
                        let bl = batch.len() as f64;
                        let mut risk = 0.0;
                        let mut d_risk = vec![0.0f64; n];
                        if tandem {
                            // Ê[W²] with W(x) = p·e(x); dÊ/dp_i = Ê[2W·e_i].
                            for &j in batch {
                                let row = self.voters.error_row(j);
                                let w: f64 =
                                    row.iter().zip(p).map(|(&e, &pi)| pi * e as f64).sum();
                                risk += w * w / bl;
                                let s = 2.0 * w / bl;
                                for (i, &e) in row.iter().enumerate() {
                                    if e == 1 {
                                        d_risk[i] += s;
                                    }
                                }
                            }
                        } else {
                            let e = mean_errors_for_all(self.voters, batch);
                            risk = p.iter().zip(&e).map(|(a, b)| a * b).sum();
                            d_risk.copy_from_slice(&e);
                        }
                        let nf = n as f64;
                        let kl: f64 = p
                            .iter()
                            .filter(|&&x| x > 0.0)
                            .map(|&x| x * (x * nf).ln())
                            .sum::<f64>()
                            .max(0.0);
                        let (value, dq, db) =
                            kl_inverse_upper_with_grads(risk, (kl_scale * kl + log_term) / m)?;
                        let g_p: Vec<f64> = p
                            .iter()
                            .zip(&d_risk)
                            .map(|(&pi, &di)| {
                                dq * di
                                    + db * kl_scale / m * ((pi.max(1e-300) * nf).ln() + 1.0)
                            })
                            .collect();
                        let mut grad = vec![0.0f64; n];
                        let ids: Vec<usize> = (0..n).collect();
                        softmax_chain(p, &g_p, &ids, &mut grad);
                        Ok((value, grad))
                    }
                    Family::Gaussian => {
                        let sqrt_n = (n as f64).sqrt();
                        let bl = batch.len() as f64;
                        let mut risk = 0.0;
                        let mut d_risk = vec![0.0f64; n];
                        for &j in batch {
                            let y = self.voters.sign_label(j);
                            let dot: f64 =
                                (0..n).map(|i| p[i] * self.voters.sign_prediction(j, i)).sum();
                            let t = y * dot / sqrt_n;
                            let w = normal_upper_tail(t);
                            // Φ'(t) = −exp(−t²/2)/√(2π)
                            let phi_prime =
                                -(-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
                            let (value_term, chain) =
                                if tandem { (w * w, 2.0 * w * phi_prime) } else { (w, phi_prime) };
                            risk += value_term / bl;
                            let scale = chain * y / (sqrt_n * bl);
                            for (i, d) in d_risk.iter_mut().enumerate() {
                                *d += scale * self.voters.sign_prediction(j, i);
                            }
                        }
                        let kl: f64 = 0.5 * p.iter().map(|x| x * x).sum::<f64>();
                        let (value, dq, db) =
                            kl_inverse_upper_with_grads(risk, (kl_scale * kl + log_term) / m)?;
                        let grad: Vec<f64> = (0..n)
                            .map(|i| dq * d_risk[i] + db * kl_scale / m * p[i])
                            .collect();
                        Ok((value, grad))
                    }
                    Family::Dirichlet => {
                        let total: f64 = p.iter().sum();
                        let bl = batch.len() as f64;
                        let h = 1e-4;
                        let mut risk = 0.0;
                        // dq̂/dp_i = mean_j [∂I/∂a + (∂I/∂b − ∂I/∂a)·e_ji]
                        let mut mean_da = 0.0f64;
                        let mut d_by_voter = vec![0.0f64; n];
                        for &j in batch {
                            let p_f: f64 = self
                                .voters
                                .error_row(j)
                                .iter()
                                .zip(p)
                                .map(|(&e, &w)| w * e as f64)
                                .sum();
                            let (a, b) = (total - p_f, p_f);
                            let w = if b <= 0.0 {
                                0.0
                            } else if a <= 0.0 {
                                1.0
                            } else {
                                reg_inc_beta(0.5, a, b)?
                            };
                            risk += w / bl;
                            // Central finite differences through the beta
                            // parameters; flat at the endpoints.
                            let (da, dbeta) = if b <= h || a <= h {
                                (0.0, 0.0)
                            } else {
                                let da = (reg_inc_beta(0.5, a + h, b)?
                                    - reg_inc_beta(0.5, a - h, b)?)
                                    / (2.0 * h);
                                let dbv = (reg_inc_beta(0.5, a, b + h)?
                                    - reg_inc_beta(0.5, a, b - h)?)
                                    / (2.0 * h);
                                (da, dbv)
                            };
                            mean_da += da / bl;
                            let s = (dbeta - da) / bl;
                            for (i, &e) in self.voters.error_row(j).iter().enumerate() {
                                if e == 1 {
                                    d_by_voter[i] += s;
                                }
                            }
                        }
                        // KL(Dir(p) ‖ Dir(1)) and its gradient.
                        let a0: f64 = total;
                        let mut kl = crate::special::log_gamma(a0);
                        let psi_a0 = digamma(a0);
                        for &ai in p.iter() {
                            kl += -crate::special::log_gamma(ai) + (ai - 1.0) * (digamma(ai) - psi_a0);
                        }
                        kl -= crate::special::log_gamma(n as f64);
                        let kl = kl.max(0.0);
                        let sum_dev: f64 = p.iter().map(|&ai| ai - 1.0).sum();
                        let trig_a0 = trigamma(a0);
                        let (value, dq, db) = kl_inverse_upper_with_grads(risk, (kl + log_term) / m)?;
                        let grad: Vec<f64> = (0..n)
                            .map(|i| {
                                let d_risk = mean_da + d_by_voter[i];
                                let d_kl = (p[i] - 1.0) * trigamma(p[i]) - sum_dev * trig_a0;
                                // Chain through p_i = exp(θ_i).
                                (dq * d_risk + db / m * d_kl) * p[i]
                            })
                            .collect();
                        Ok((value, grad))
                    }
                }
            }
        }
    }
}

/// Mean error per listed voter over an index set.
fn mean_errors_for(voters: &VoterOutputs, voter_ids: &[usize], idx: &[usize]) -> Vec<f64> {
    let mut acc = vec![0.0f64; voter_ids.len()];
    for &j in idx {
        let row = voters.error_row(j);
        for (slot, &i) in voter_ids.iter().enumerate() {
            acc[slot] += row[i] as f64;
        }
    }
    let inv = 1.0 / idx.len().max(1) as f64;
    for a in &mut acc {
        *a *= inv;
    }
    acc
}

fn mean_errors_for_all(voters: &VoterOutputs, idx: &[usize]) -> Vec<f64> {
    voters.voter_error_means(idx)
}

/// Accumulate `∂L/∂θ` given `∂L/∂q` for `q = softmax(θ over ids)`.
fn softmax_chain(q: &[f64], g_q: &[f64], ids: &[usize], grad: &mut [f64]) {
    let dot: f64 = q.iter().zip(g_q).map(|(a, b)| a * b).sum();
    for (slot, &i) in ids.iter().enumerate() {
        grad[i] += q[slot] * (g_q[slot] - dot);
    }
}
