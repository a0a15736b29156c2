//! Literature comparison bounds: first-order, second-order (tandem),
//! binomial, C-bound, and the VC-dimension bound.

use crate::ensemble::VoterOutputs;
use crate::pac_bayes::{Family, Posterior};
use crate::s2d::{stochastic_risk_gaussian_multiclass, McSettings};
use crate::special::{
    kl_inverse_lower, kl_inverse_upper, log_binomial_term,
};
use crate::{Error, Result};

/// Empirical first and second joint-error moments of a posterior.
///
/// `i1_hat` is the empirical stochastic risk `E_x[W(x)]` and `i2_hat` the
/// empirical tandem loss `E_x[W(x)²]` — two independent weight draws from
/// the same posterior both err; the per-example probability factorizes into
/// the squared per-example stochastic risk for every family.
#[derive(Debug, Clone, Copy)]
pub struct MomentEstimates {
    pub i1_hat: f64,
    pub i2_hat: f64,
    pub m: usize,
}

/// Estimate the joint-error moments over an index set.
///
/// Categorical: `W = p·e`; binary Gaussian: `W = Φ(y·p·f/√n)`; Dirichlet:
/// `W = I_{0.5}(‖p‖₁−p_F, p_F)`; multi-class Gaussian: the Monte-Carlo
/// per-example risk (its square carries an O(1/samples) bias, noted here
/// because no closed form exists).
pub fn estimate_moments(
    voters: &VoterOutputs,
    posterior: &Posterior,
    indices: &[usize],
    mc: McSettings,
) -> Result<MomentEstimates> {
    let profile = match (posterior.family, voters.k) {
        (Family::Categorical, _) => {
            crate::s2d::stochastic_risk_categorical(voters, &posterior.params, indices)?
        }
        (Family::Dirichlet, _) => {
            crate::s2d::stochastic_risk_dirichlet(voters, &posterior.params, indices)?
        }
        (Family::Gaussian, 2) => {
            crate::s2d::stochastic_risk_gaussian_binary(voters, &posterior.params, indices)?
        }
        (Family::Gaussian, _) => {
            stochastic_risk_gaussian_multiclass(voters, &posterior.params, indices, mc)?
        }
    };
    let m = profile.per_example.len();
    let i1_hat = profile.mean;
    let i2_hat = profile.per_example.iter().map(|w| w * w).sum::<f64>() / m.max(1) as f64;
    Ok(MomentEstimates { i1_hat, i2_hat, m })
}

/// A baseline bound value before and after clamping to [0, 1].
#[derive(Debug, Clone, Copy)]
pub struct BaselineValue {
    pub value: f64,
    pub raw: f64,
    pub vacuous: bool,
}

impl BaselineValue {
    fn from_raw(raw: f64) -> Self {
        Self { value: raw.clamp(0.0, 1.0), raw, vacuous: raw >= 1.0 }
    }
}

fn seeger_budget(kl: f64, m: usize, delta: f64) -> f64 {
    (kl + (2.0 * (m as f64).sqrt() / delta).ln()) / m as f64
}

/// First-order bound `2·Ī⁽¹⁾`, the classical factor-2 baseline.
pub fn fo_bound(moments: &MomentEstimates, kl: f64, delta: f64) -> Result<BaselineValue> {
    let i1_up = kl_inverse_upper(moments.i1_hat, seeger_budget(kl, moments.m, delta))?.value;
    Ok(BaselineValue::from_raw(2.0 * i1_up))
}

/// Second-order bound `4·Ī⁽²⁾`: the tandem loss certified on the product
/// posterior, whose divergence is `2·KL(Q‖P)`.
pub fn so_bound(moments: &MomentEstimates, kl: f64, delta: f64) -> Result<BaselineValue> {
    let i2_up = kl_inverse_upper(moments.i2_hat, seeger_budget(2.0 * kl, moments.m, delta))?.value;
    Ok(BaselineValue::from_raw(4.0 * i2_up))
}

/// Binomial bound: draw `n_draws` votes and pay for the event that at least
/// half err, with the certified first moment plugged in (sound: the tail sum
/// is monotone in the plug-in rate):
/// `2·Σ_{j=⌈N/2⌉}^N C(N,j)·Ī^j·(1−Ī)^{N−j}`.
pub fn bin_bound(
    moments: &MomentEstimates,
    n_draws: usize,
    kl: f64,
    delta: f64,
) -> Result<BaselineValue> {
    if n_draws == 0 {
        return Err(Error::Config("bin bound needs at least one draw".into()));
    }
    let i1_up = kl_inverse_upper(moments.i1_hat, seeger_budget(kl, moments.m, delta))?.value;
    let n = n_draws as u64;
    let from = n_draws.div_ceil(2) as u64;
    let mut tail = 0.0f64;
    for j in from..=n {
        tail += log_binomial_term(n, j, i1_up)?.exp();
    }
    Ok(BaselineValue::from_raw(2.0 * tail))
}

/// C-bound via Chebyshev–Cantelli, evaluated worst-case over the certified
/// moment box (binary Categorical posteriors only):
/// `(μ₂ − μ₁²)/(μ₂ − μ₁ + ¼)` maximized over `μ₁` in its two-sided
/// certificate and `μ₂` at its upper certificate (the ratio grows with
/// `μ₂`). Infeasible boxes (`μ₁` reaching ½) yield the vacuous bound.
pub fn c_bound(moments: &MomentEstimates, kl: f64, delta: f64) -> Result<BaselineValue> {
    // δ/2 to each moment's kl ball; both interval ends of one ball hold
    // jointly from the single kl statement.
    let b1 = seeger_budget(kl, moments.m, delta / 2.0);
    let b2 = seeger_budget(2.0 * kl, moments.m, delta / 2.0);
    let mu1_lo = kl_inverse_lower(moments.i1_hat, b1)?.value;
    let mu1_hi = kl_inverse_upper(moments.i1_hat, b1)?.value;
    let mu2_hi = kl_inverse_upper(moments.i2_hat, b2)?.value;
    if mu1_hi >= 0.5 {
        return Ok(BaselineValue { value: 1.0, raw: 1.0, vacuous: true });
    }
    let ratio = |mu1: f64| -> f64 {
        let num = (mu2_hi - mu1 * mu1).max(0.0);
        let den = mu2_hi - mu1 + 0.25;
        if den <= 0.0 {
            1.0
        } else {
            num / den
        }
    };
    // The ratio is quadratic in μ₁ over the box: a grid plus both endpoints
    // suffices for the worst case.
    let steps = 1000;
    let mut worst = ratio(mu1_lo).max(ratio(mu1_hi));
    for s in 1..steps {
        let mu1 = mu1_lo + (mu1_hi - mu1_lo) * s as f64 / steps as f64;
        worst = worst.max(ratio(mu1));
    }
    Ok(BaselineValue::from_raw(worst))
}

/// VC-dimension bound for the class of weighted votes over `n` fixed voters
/// (VC dimension `n`): `L̂ + √((v(ln(2m/v)+1) + ln(4/δ))/m)`.
pub fn vc_bound(empirical_risk: f64, m: usize, n_voters: usize, delta: f64) -> Result<BaselineValue> {
    if m == 0 || n_voters == 0 {
        return Err(Error::Domain("vc bound needs m ≥ 1 and n ≥ 1".into()));
    }
    if !(0.0..=1.0).contains(&empirical_risk) {
        return Err(Error::Domain(format!("vc bound: empirical risk {empirical_risk}")));
    }
    let (v, mf) = (n_voters as f64, m as f64);
    if n_voters > m {
        return Ok(BaselineValue { value: 1.0, raw: 1.0, vacuous: true });
    }
    let radical = ((v * ((2.0 * mf / v).ln() + 1.0) + (4.0 / delta).ln()) / mf).sqrt();
    Ok(BaselineValue::from_raw(empirical_risk + radical))
}
