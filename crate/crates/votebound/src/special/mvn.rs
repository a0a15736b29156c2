//! Monte-Carlo multivariate-normal CDF at the origin.

use crate::exec;
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Symmetry tolerance on the covariance input.
const SYMMETRY_TOL: f64 = 1e-8;
/// Most negative eigenvalue tolerated before the input is rejected as non-PSD.
const EIGEN_FLOOR: f64 = -1e-8;
/// Diagonal jitter added before factorization.
const JITTER: f64 = 1e-10;
/// Samples per deterministic RNG chunk; fixed so results do not depend on the
/// execution mode or thread count.
const CHUNK: usize = 4096;

/// A Monte-Carlo estimate with its standard error and provenance.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct MvnEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// `P(Z ≤ 0 componentwise)` for `Z ~ N(mean, cov)`, estimated by Monte Carlo.
///
/// `cov` is a row-major `dim × dim` matrix. It must be symmetric within
/// 1e−8 and PSD up to an eigenvalue floor of −1e−8; a 1e−10 identity jitter
/// is added before factorization so rank-deficient Gram matrices (duplicated
/// voter columns) stay usable. The standard error comes from the Bernoulli
/// sample variance.
pub fn mvn_cdf_at_origin(mean: &[f64], cov: &[f64], samples: usize, seed: u64) -> Result<MvnEstimate> {
    let dim = mean.len();
    if cov.len() != dim * dim {
        return Err(Error::Domain(format!(
            "mvn_cdf_at_origin: cov has {} entries, expected {}",
            cov.len(),
            dim * dim
        )));
    }
    if samples == 0 {
        return Err(Error::Domain("mvn_cdf_at_origin: samples must be ≥ 1".into()));
    }
    for r in 0..dim {
        for c in (r + 1)..dim {
            if (cov[r * dim + c] - cov[c * dim + r]).abs() > SYMMETRY_TOL {
                return Err(Error::Domain(format!(
                    "mvn_cdf_at_origin: cov asymmetric at ({r},{c}) beyond {SYMMETRY_TOL}"
                )));
            }
        }
    }
    let (eigvals, eigvecs) = jacobi_eigen(cov, dim);
    if let Some(&min) = eigvals.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < EIGEN_FLOOR {
            return Err(Error::Domain(format!(
                "mvn_cdf_at_origin: eigenvalue {min} below floor {EIGEN_FLOOR}; cov not PSD"
            )));
        }
    }
    // Sampling factor L = V · diag(√(λ + jitter)); cov + jitter·I shares V.
    let mut factor = vec![0.0; dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            factor[r * dim + c] = eigvecs[r * dim + c] * (eigvals[c] + JITTER).max(0.0).sqrt();
        }
    }

    let chunks = samples.div_ceil(CHUNK);
    let hit_counts = exec::map_range(chunks, |chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(chunk as u64 + 1)));
        let lo = chunk * CHUNK;
        let hi = ((chunk + 1) * CHUNK).min(samples);
        let mut g = vec![0.0f64; dim];
        let mut hits = 0usize;
        for _ in lo..hi {
            for gj in g.iter_mut() {
                *gj = StandardNormal.sample(&mut rng);
            }
            let mut inside = true;
            for r in 0..dim {
                let mut z = mean[r];
                for c in 0..dim {
                    z += factor[r * dim + c] * g[c];
                }
                if z > 0.0 {
                    inside = false;
                    break;
                }
            }
            if inside {
                hits += 1;
            }
        }
        hits
    });
    let hits: usize = hit_counts.iter().sum();
    let estimate = hits as f64 / samples as f64;
    let std_error = (estimate * (1.0 - estimate) / samples as f64).sqrt();
    Ok(MvnEstimate { estimate, std_error, samples, seed })
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns (eigenvalues, eigenvectors as columns). Dimensions here are tiny
/// (k − 1 for k-class problems), so the O(d³) sweeps are negligible.
fn jacobi_eigen(matrix: &[f64], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = matrix.to_vec();
    // Symmetrize once so the sweeps see an exactly symmetric matrix.
    for r in 0..dim {
        for c in 0..dim {
            let s = 0.5 * (matrix[r * dim + c] + matrix[c * dim + r]);
            a[r * dim + c] = s;
        }
    }
    let mut v = vec![0.0; dim * dim];
    for i in 0..dim {
        v[i * dim + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for r in 0..dim {
            for c in (r + 1)..dim {
                off = off.max(a[r * dim + c].abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[p * dim + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * dim + p];
                let aqq = a[q * dim + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = c * akp - s * akq;
                    a[k * dim + q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = c * apk - s * aqk;
                    a[q * dim + k] = s * apk + c * aqk;
                }
                for k in 0..dim {
                    let vkp = v[k * dim + p];
                    let vkq = v[k * dim + q];
                    v[k * dim + p] = c * vkp - s * vkq;
                    v[k * dim + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigvals: Vec<f64> = (0..dim).map(|i| a[i * dim + i]).collect();
    (eigvals, v)
}
