//! Scalar special functions shared by every bound.
//!
//! The binary kl divergence and its two-sided inversion drive all PAC-Bayes
//! certificates; the normal upper tail `Φ` and the regularized incomplete
//! beta function give the Gaussian and Dirichlet stochastic risks their
//! closed forms; the Monte-Carlo multivariate-normal CDF covers the
//! multi-class Gaussian case, which has no closed form.

mod beta;
mod gamma;
mod mvn;

pub use beta::reg_inc_beta;
pub use gamma::{digamma, log_binomial, log_binomial_term, log_gamma, trigamma};
pub use mvn::{mvn_cdf_at_origin, MvnEstimate};

use crate::{Error, Result};

/// Convergence target for the kl inversions.
pub const KL_RESIDUAL_TOL: f64 = 1e-12;

/// Iteration cap for the kl bisections.
pub const KL_MAX_ITERS: u32 = 200;

/// Binary kl divergence `kl(q‖p) = q ln(q/p) + (1−q) ln((1−q)/(1−p))`.
///
/// Conventions: `0·ln 0 = 0`; a boundary `p` that disagrees with `q` yields
/// `+∞`, never NaN.
pub fn kl(q: f64, p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&q), "q out of [0,1]: {q}");
    debug_assert!((0.0..=1.0).contains(&p), "p out of [0,1]: {p}");
    kl_term(q, p) + kl_term(1.0 - q, 1.0 - p)
}

fn kl_term(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a * (a / b).ln()
    }
}

/// `∂kl(q‖p)/∂q` at interior `q`, `p`.
pub fn kl_grad_q(q: f64, p: f64) -> f64 {
    (q / p).ln() - ((1.0 - q) / (1.0 - p)).ln()
}

/// `∂kl(q‖p)/∂p` at interior `q`, `p`.
pub fn kl_grad_p(q: f64, p: f64) -> f64 {
    (p - q) / (p * (1.0 - p))
}

/// Outcome of a kl inversion: the root, the bisection effort, and the
/// remaining `budget − kl(q, value)` residual (0 when the result saturates
/// at a boundary).
#[derive(Debug, Clone, Copy)]
pub struct KlInversionResult {
    pub value: f64,
    pub iterations: u32,
    pub residual: f64,
}

/// Largest `p ≥ q` with `kl(q‖p) ≤ budget`, by bisection on `[q, 1)`.
///
/// This is the upper confidence limit used by every Seeger-style bound:
/// `kl(q, value)` lands within [`KL_RESIDUAL_TOL`] below the budget unless
/// the result saturates (zero budget, `q = 1`, or a budget so large the
/// root exceeds `1 − 1e−15`, in which case the bound is vacuous anyway).
pub fn kl_inverse_upper(q: f64, budget: f64) -> Result<KlInversionResult> {
    check_inversion_args(q, budget)?;
    if budget == 0.0 || q >= 1.0 {
        return Ok(saturated(q.min(1.0)));
    }
    let hi_cap = 1.0 - 1e-15;
    if kl(q, hi_cap) <= budget {
        return Ok(saturated(hi_cap));
    }
    // Invariant: kl(q, lo) ≤ budget < kl(q, hi); kl(q, ·) increases on [q, 1).
    let mut lo = q;
    let mut hi = hi_cap;
    let mut iterations = 0;
    while iterations < KL_MAX_ITERS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if kl(q, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
        let residual = budget - kl(q, lo);
        if residual <= KL_RESIDUAL_TOL {
            return Ok(KlInversionResult { value: lo, iterations, residual });
        }
        if hi - lo <= f64::EPSILON * hi {
            // The bracket is down to adjacent floats: `lo` is within one ulp
            // of the root even where the kl residual cannot reach the
            // tolerance (steep near-1 roots).
            return Ok(KlInversionResult { value: lo, iterations, residual });
        }
    }
    Err(Error::Numerical(format!(
        "kl_inverse_upper(q={q}, budget={budget}) exceeded {KL_MAX_ITERS} iterations"
    )))
}

/// Smallest `p ≤ q` with `kl(q‖p) ≤ budget`, by bisection on `(0, q]`.
///
/// Mirror of [`kl_inverse_upper`]; this is the lower confidence limit that
/// feeds the conditional bounds `b̃` and `c̃`.
pub fn kl_inverse_lower(q: f64, budget: f64) -> Result<KlInversionResult> {
    check_inversion_args(q, budget)?;
    if budget == 0.0 || q <= 0.0 {
        return Ok(saturated(q.max(0.0)));
    }
    let lo_cap = 1e-300;
    if kl(q, lo_cap) <= budget {
        // Even a near-zero rate fits the budget: the lower bound is 0.
        return Ok(saturated(0.0));
    }
    // Invariant: kl(q, hi) ≤ budget < kl(q, lo); kl(q, ·) decreases on (0, q].
    let mut lo = lo_cap;
    let mut hi = q;
    let mut iterations = 0;
    while iterations < KL_MAX_ITERS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if kl(q, mid) <= budget {
            hi = mid;
        } else {
            lo = mid;
        }
        let residual = budget - kl(q, hi);
        if residual <= KL_RESIDUAL_TOL {
            return Ok(KlInversionResult { value: hi, iterations, residual });
        }
        if hi - lo <= f64::EPSILON * hi {
            return Ok(KlInversionResult { value: hi, iterations, residual });
        }
    }
    Err(Error::Numerical(format!(
        "kl_inverse_lower(q={q}, budget={budget}) exceeded {KL_MAX_ITERS} iterations"
    )))
}

/// Root and implicit derivatives of the upper inversion.
///
/// At an interior root `p*` of `kl(q, p*) = budget`:
/// `∂p*/∂q = −(∂kl/∂q)/(∂kl/∂p)` and `∂p*/∂budget = 1/(∂kl/∂p)`.
/// The optimizer differentiates the Seeger objective through these.
pub fn kl_inverse_upper_with_grads(q: f64, budget: f64) -> Result<(f64, f64, f64)> {
    let clamped_q = q.clamp(1e-12, 1.0 - 1e-12);
    let root = kl_inverse_upper(clamped_q, budget)?.value;
    let p = root.clamp(clamped_q + 1e-14, 1.0 - 1e-14);
    let dp = kl_grad_p(clamped_q, p);
    if dp <= 0.0 {
        // Saturated at q (zero budget): the bound tracks q one-for-one.
        return Ok((root, 1.0, 0.0));
    }
    let dq = kl_grad_q(clamped_q, p);
    Ok((root, -dq / dp, 1.0 / dp))
}

fn check_inversion_args(q: f64, budget: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("kl inversion: q={q} outside [0,1]")));
    }
    if !budget.is_finite() || budget < 0.0 {
        return Err(Error::Domain(format!("kl inversion: budget={budget} not finite and ≥ 0")));
    }
    Ok(())
}

fn saturated(value: f64) -> KlInversionResult {
    KlInversionResult { value, iterations: 0, residual: 0.0 }
}

/// Standard normal upper tail `Φ(t) = ½(1 − erf(t/√2)) = P(Z ≥ t)`.
///
/// Strictly decreasing, range (0, 1); computed through `erfc` so the far
/// tails keep full relative accuracy.
pub fn normal_upper_tail(t: f64) -> f64 {
    0.5 * libm::erfc(t / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_identity_is_zero() {
        assert_eq!(kl(0.3, 0.3), 0.0);
        assert_eq!(kl(0.0, 0.0), 0.0);
        assert_eq!(kl(1.0, 1.0), 0.0);
    }

    #[test]
    fn kl_zero_rate_analytic() {
        // kl(0, 0.5) = ln 2
        assert!((kl(0.0, 0.5) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn kl_matches_direct_formula() {
        let (q, p) = (0.1f64, 0.4f64);
        let direct = q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln();
        assert!((kl(q, p) - direct).abs() < 1e-16);
    }

    #[test]
    fn kl_boundary_is_infinite_not_nan() {
        assert_eq!(kl(0.5, 0.0), f64::INFINITY);
        assert_eq!(kl(0.5, 1.0), f64::INFINITY);
        assert!(!kl(0.5, 0.0).is_nan());
    }

    #[test]
    fn inverse_upper_zero_budget_returns_q() {
        let r = kl_inverse_upper(0.37, 0.0).unwrap();
        assert_eq!(r.value, 0.37);
    }

    #[test]
    fn inverse_upper_of_ln2_from_zero_is_half() {
        let r = kl_inverse_upper(0.0, std::f64::consts::LN_2).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12, "got {}", r.value);
    }

    #[test]
    fn inverse_upper_grid_scan_oracle() {
        // Independent check: a fine grid locates the root of kl(0.1, p) = 0.05.
        let (q, budget) = (0.1, 0.05);
        let root = kl_inverse_upper(q, budget).unwrap().value;
        let mut best = q;
        let steps = 2_000_000;
        for i in 0..steps {
            let p = q + (1.0 - q) * (i as f64) / (steps as f64);
            if p < 1.0 && kl(q, p) <= budget {
                best = p;
            }
        }
        assert!((root - best).abs() < 1e-5, "bisection {root} vs grid {best}");
        let res = budget - kl(q, root);
        assert!((0.0..=KL_RESIDUAL_TOL).contains(&res), "residual {res}");
    }

    #[test]
    fn inverse_lower_mirrors_upper() {
        let r = kl_inverse_lower(0.5, std::f64::consts::LN_2).unwrap();
        assert!((kl(0.5, r.value) - std::f64::consts::LN_2).abs() < 1e-11);
        assert!(r.value < 0.5);
        assert_eq!(kl_inverse_lower(0.4, 0.0).unwrap().value, 0.4);
        assert_eq!(kl_inverse_lower(0.0, 123.0).unwrap().value, 0.0);
    }

    #[test]
    fn inverse_lower_grid_scan_oracle() {
        let (q, budget) = (0.5, std::f64::consts::LN_2);
        let root = kl_inverse_lower(q, budget).unwrap().value;
        let mut best = q;
        let steps = 2_000_000;
        for i in (0..steps).rev() {
            let p = q * (i as f64 + 1.0) / (steps as f64);
            if kl(q, p) <= budget {
                best = p;
            }
        }
        assert!((root - best).abs() < 1e-5, "bisection {root} vs grid {best}");
    }

    #[test]
    fn inverse_upper_monotone_in_q_and_budget() {
        let qs: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
        let budgets: Vec<f64> = (0..30).map(|i| i as f64 * 0.02).collect();
        for w in qs.windows(2) {
            for &b in &budgets {
                let lo = kl_inverse_upper(w[0], b).unwrap().value;
                let hi = kl_inverse_upper(w[1], b).unwrap().value;
                assert!(hi >= lo - 1e-12, "q-monotonicity broke at q={:?} b={b}", w);
            }
        }
        for &q in &qs {
            for w in budgets.windows(2) {
                let lo = kl_inverse_upper(q, w[0]).unwrap().value;
                let hi = kl_inverse_upper(q, w[1]).unwrap().value;
                assert!(hi >= lo - 1e-12, "budget-monotonicity broke at q={q} b={:?}", w);
            }
        }
    }

    #[test]
    fn normal_upper_tail_at_zero_is_half() {
        assert!((normal_upper_tail(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn normal_upper_tail_symmetry() {
        for &t in &[-3.0, -1.2, -0.1, 0.4, 2.7, 6.0] {
            let s = normal_upper_tail(t) + normal_upper_tail(-t);
            assert!((s - 1.0).abs() < 1e-14, "Φ(t)+Φ(−t) = {s} at t={t}");
        }
    }

    #[test]
    fn normal_upper_tail_strictly_decreasing() {
        let grid: Vec<f64> = (-60..=60).map(|i| i as f64 * 0.1).collect();
        for w in grid.windows(2) {
            assert!(
                normal_upper_tail(w[1]) < normal_upper_tail(w[0]),
                "Φ not strictly decreasing at {:?}",
                w
            );
        }
    }

    #[test]
    fn normal_upper_tail_monte_carlo_oracle() {
        // Φ(1) against a seeded Monte-Carlo estimate of P(Z ≥ 1).
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000usize;
        let mut hits = 0usize;
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            if z >= 1.0 {
                hits += 1;
            }
        }
        let est = hits as f64 / n as f64;
        let se = (est * (1.0 - est) / n as f64).sqrt();
        let diff = (normal_upper_tail(1.0) - est).abs();
        assert!(diff <= 3.0 * se, "Φ(1) off by {diff} (> 3σ = {})", 3.0 * se);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(256))]

        #[test]
        fn inversions_bracket_and_roundtrip(q in 0.0f64..1.0, budget in 0.0f64..0.6) {
            let up = kl_inverse_upper(q, budget).unwrap();
            let down = kl_inverse_lower(q, budget).unwrap();
            proptest::prop_assert!(down.value <= q + 1e-15 && q <= up.value + 1e-15);
            proptest::prop_assert!(kl(q, up.value) <= budget + 1e-12);
            proptest::prop_assert!(kl(q, down.value) <= budget + 1e-12);
        }
    }

    #[test]
    fn implicit_gradients_match_finite_differences() {
        let h = 1e-5;
        for &q in &[0.05, 0.1, 0.3, 0.5, 0.7] {
            for &b in &[0.01, 0.05, 0.2, 0.5] {
                let (_, dq, db) = kl_inverse_upper_with_grads(q, b).unwrap();
                let up = kl_inverse_upper(q + h, b).unwrap().value;
                let dn = kl_inverse_upper(q - h, b).unwrap().value;
                let fd_q = (up - dn) / (2.0 * h);
                let up_b = kl_inverse_upper(q, b + h).unwrap().value;
                let dn_b = kl_inverse_upper(q, b - h).unwrap().value;
                let fd_b = (up_b - dn_b) / (2.0 * h);
                assert!(
                    ((dq - fd_q) / fd_q).abs() < 1e-6,
                    "dq mismatch at q={q} b={b}: implicit {dq} fd {fd_q}"
                );
                assert!(
                    ((db - fd_b) / fd_b).abs() < 1e-6,
                    "db mismatch at q={q} b={b}: implicit {db} fd {fd_b}"
                );
            }
        }
    }
}
