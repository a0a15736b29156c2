//! Stochastic-risk certificates and posterior-family bookkeeping.
//!
//! Three certificate shapes cover every use in the crate:
//!
//! * the Seeger bound `kl(q̂ ‖ q) ≤ (KL(Q‖P) + ln(2√m/δ)) / m`, inverted
//!   upward for risk upper bounds;
//! * its conditional variant, where the empirical rate is measured on the
//!   subset of examples a fixed vote classifies correctly (or incorrectly):
//!   the divisor becomes the subset size while the log term keeps the full
//!   sample size;
//! * the cross-split certificate for data-dependent voters trained on two
//!   halves of the sample, each half evaluated on the other.

use crate::special::{digamma, kl_inverse_lower, kl_inverse_upper, log_gamma};
use crate::{Error, Result};

/// The three posterior families over majority-vote weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Family {
    /// One voter drawn with probability `p_i`; `p` on the simplex.
    Categorical,
    /// Simplex weights drawn from a Dirichlet with positive parameters `p`.
    Dirichlet,
    /// Unrestricted weights drawn from `N(p, I)`.
    Gaussian,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Categorical => "categorical",
            Family::Dirichlet => "dirichlet",
            Family::Gaussian => "gaussian",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "categorical" | "cat" => Ok(Family::Categorical),
            "dirichlet" | "dir" => Ok(Family::Dirichlet),
            "gaussian" | "gauss" => Ok(Family::Gaussian),
            other => Err(Error::Config(format!("unknown family '{other}'"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Simplex tolerance for Categorical parameters.
const SIMPLEX_TOL: f64 = 1e-9;

/// A posterior distribution over the weight space.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Posterior {
    pub family: Family,
    pub params: Vec<f64>,
}

impl Posterior {
    pub fn new(family: Family, params: Vec<f64>) -> Result<Self> {
        let p = Self { family, params };
        p.validate()?;
        Ok(p)
    }

    /// The untrained starting point: uniform Categorical, all-ones Dirichlet,
    /// zero-mean Gaussian.
    pub fn initial(family: Family, n: usize) -> Self {
        let params = match family {
            Family::Categorical => vec![1.0 / n as f64; n],
            Family::Dirichlet => vec![1.0; n],
            Family::Gaussian => vec![0.0; n],
        };
        Self { family, params }
    }

    pub fn n(&self) -> usize {
        self.params.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(Error::Domain("posterior has no parameters".into()));
        }
        if self.params.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("posterior parameters must be finite".into()));
        }
        match self.family {
            Family::Categorical => {
                if self.params.iter().any(|&x| x < 0.0) {
                    return Err(Error::Domain("categorical parameters must be ≥ 0".into()));
                }
                let sum: f64 = self.params.iter().sum();
                if (sum - 1.0).abs() > SIMPLEX_TOL {
                    return Err(Error::Domain(format!(
                        "categorical parameters sum to {sum}, not 1"
                    )));
                }
            }
            Family::Dirichlet => {
                if self.params.iter().any(|&x| x <= 0.0) {
                    return Err(Error::Domain("dirichlet parameters must be > 0".into()));
                }
            }
            Family::Gaussian => {}
        }
        Ok(())
    }
}

/// A prior with the same shape as the posterior; constructed once per run and
/// recorded in every report.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Prior {
    pub family: Family,
    pub params: Vec<f64>,
}

impl Prior {
    /// The default priors: uniform Categorical, all-ones Dirichlet, zero-mean
    /// Gaussian.
    pub fn default_for(family: Family, n: usize) -> Self {
        let p = Posterior::initial(family, n);
        Self { family: p.family, params: p.params }
    }

    pub fn describe(&self) -> String {
        match self.family {
            Family::Categorical => format!("uniform categorical (1/{})", self.params.len()),
            Family::Dirichlet => "dirichlet all-ones".to_string(),
            Family::Gaussian => "gaussian zero mean, identity covariance".to_string(),
        }
    }
}

/// `KL(Q ‖ P)` in closed form, per family.
///
/// Categorical: `Σ q_i ln(q_i/p_i)` with the `0 ln 0 = 0` convention and an
/// infinity sentinel when the prior has a hole the posterior fills.
/// Dirichlet: the standard closed form through `ln Γ` and `ψ`.
/// Gaussian (identity covariances): `½‖p_Q − p_P‖²`.
pub fn kl_divergence(q: &Posterior, p: &Prior) -> Result<f64> {
    if q.family != p.family {
        return Err(Error::FamilyMismatch {
            posterior: q.family.as_str().into(),
            prior: p.family.as_str().into(),
        });
    }
    if q.params.len() != p.params.len() {
        return Err(Error::Domain(format!(
            "kl_divergence: posterior has {} parameters, prior {}",
            q.params.len(),
            p.params.len()
        )));
    }
    let value = match q.family {
        Family::Categorical => {
            let mut acc = 0.0;
            for (&qi, &pi) in q.params.iter().zip(&p.params) {
                if qi == 0.0 {
                    continue;
                }
                if pi == 0.0 {
                    return Ok(f64::INFINITY);
                }
                acc += qi * (qi / pi).ln();
            }
            acc.max(0.0)
        }
        Family::Dirichlet => {
            let a0: f64 = q.params.iter().sum();
            let b0: f64 = p.params.iter().sum();
            let mut acc = log_gamma(a0) - log_gamma(b0);
            let psi_a0 = digamma(a0);
            for (&ai, &bi) in q.params.iter().zip(&p.params) {
                acc += log_gamma(bi) - log_gamma(ai);
                acc += (ai - bi) * (digamma(ai) - psi_a0);
            }
            acc.max(0.0)
        }
        Family::Gaussian => {
            0.5 * q
                .params
                .iter()
                .zip(&p.params)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>()
        }
    };
    Ok(value)
}

/// Everything a Seeger-style certificate consumes.
#[derive(Debug, Clone, Copy)]
pub struct CertificateInput {
    /// Empirical stochastic risk in [0, 1].
    pub empirical_risk: f64,
    /// Sample count.
    pub m: usize,
    /// `KL(Q‖P)`.
    pub kl_div: f64,
    /// Confidence budget in (0, 1].
    pub delta: f64,
}

impl CertificateInput {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.empirical_risk) {
            return Err(Error::Domain(format!(
                "certificate input: empirical risk {} outside [0,1]",
                self.empirical_risk
            )));
        }
        if self.m == 0 {
            return Err(Error::Domain("certificate input: m must be ≥ 1".into()));
        }
        if !(self.kl_div >= 0.0) {
            return Err(Error::Domain(format!(
                "certificate input: KL divergence {} must be ≥ 0",
                self.kl_div
            )));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Domain(format!(
                "certificate input: delta {} outside (0,1]",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Seeger bound with Maurer's constant: the upper kl inversion of the
/// empirical risk at budget `(KL(Q‖P) + ln(2√m/δ)) / m`. Holds with
/// probability ≥ 1 − δ, simultaneously for all posteriors.
pub fn seeger_bound(input: &CertificateInput) -> Result<f64> {
    input.validate()?;
    let m = input.m as f64;
    let budget = (input.kl_div + (2.0 * m.sqrt() / input.delta).ln()) / m;
    Ok(kl_inverse_upper(input.empirical_risk, budget)?.value)
}

/// Which side of the conditional certificate to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundDirection {
    Lower,
    Upper,
}

/// Conditional certificate for the risk restricted to the examples a fixed
/// vote gets right (or wrong): budget `(KL(Q‖P) + ln(2√m/δ)) / m_sub`, with
/// the *full* sample size inside the log and the subset size as divisor.
pub fn conditional_bound(
    subset_risk: f64,
    subset_size: usize,
    full_m: usize,
    kl_div: f64,
    delta: f64,
    direction: BoundDirection,
) -> Result<f64> {
    if subset_size == 0 {
        return Err(Error::DegenerateSubset(
            "conditional bound on an empty subset; caller must fall back to trivial bounds".into(),
        ));
    }
    if subset_size > full_m {
        return Err(Error::Domain(format!(
            "conditional bound: subset size {subset_size} exceeds full m {full_m}"
        )));
    }
    CertificateInput { empirical_risk: subset_risk, m: full_m, kl_div, delta }.validate()?;
    let budget = (kl_div + (2.0 * (full_m as f64).sqrt() / delta).ln()) / subset_size as f64;
    let inv = match direction {
        BoundDirection::Lower => kl_inverse_lower(subset_risk, budget)?,
        BoundDirection::Upper => kl_inverse_upper(subset_risk, budget)?,
    };
    Ok(inv.value)
}

/// Cross-split certificate for data-dependent voters.
///
/// The sample is split at `j`; the voters trained on the first `j` examples
/// carry posterior `Q₁` (divergence `kl1`) and are evaluated on the other
/// `m − j` examples (`risk_t1_on_s2`), and symmetrically for `Q₂`. The
/// α-mixed empirical risk is inverted at budget
/// `α·kl2/j + (1−α)·kl1/(m−j) + ln(4√(j(m−j))/δ)/m`.
pub fn cross_bound(
    risk_t1_on_s2: f64,
    risk_t2_on_s1: f64,
    j: usize,
    m: usize,
    kl1: f64,
    kl2: f64,
    alpha: f64,
    delta: f64,
) -> Result<f64> {
    if j == 0 || j >= m {
        return Err(Error::Config(format!("cross bound requires 0 < j < m, got j={j}, m={m}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("cross bound: alpha {alpha} outside [0,1]")));
    }
    for r in [risk_t1_on_s2, risk_t2_on_s1] {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Domain(format!("cross bound: risk {r} outside [0,1]")));
        }
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("cross bound: delta {delta} outside (0,1]")));
    }
    let (jf, mf) = (j as f64, m as f64);
    let mix = alpha * risk_t1_on_s2 + (1.0 - alpha) * risk_t2_on_s1;
    let budget = alpha * kl2 / jf
        + (1.0 - alpha) * kl1 / (mf - jf)
        + (4.0 * (jf * (mf - jf)).sqrt() / delta).ln() / mf;
    Ok(kl_inverse_upper(mix, budget)?.value)
}
