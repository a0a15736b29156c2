//! Axis-aligned decision stumps with evenly spread thresholds.

use super::{Dataset, SplitPlan, VoterHalf, VoterOutputs};
use crate::{Error, Result};

/// Build the binary stump basis: for every feature and every threshold
/// `(t + 0.5)/T` over the feature's [0, 1] range, both polarities are
/// emitted, so `n = 2·d·T`. The stumps are fixed threshold rules — they never
/// look at labels, which is what keeps the plain Seeger certificate valid.
///
/// Features are expected min-max scaled to [0, 1] beforehand.
pub fn build_stumps(data: &Dataset, thresholds_per_feature: usize) -> Result<VoterOutputs> {
    if thresholds_per_feature == 0 {
        return Err(Error::Config("thresholds_per_feature must be ≥ 1".into()));
    }
    if data.k != 2 {
        return Err(Error::Config(format!(
            "binary stumps need k = 2, dataset {} has k = {}",
            data.name, data.k
        )));
    }
    let t_count = thresholds_per_feature;
    let n = 2 * data.d * t_count;
    let mut predictions = vec![0u16; data.m * n];
    for j in 0..data.m {
        let row = &mut predictions[j * n..(j + 1) * n];
        for f in 0..data.d {
            let x = data.feature(j, f);
            for t in 0..t_count {
                let tau = (t as f64 + 0.5) / t_count as f64;
                let above = x >= tau;
                let base = f * 2 * t_count + 2 * t;
                // Polarity +: predict class 1 above the threshold.
                row[base] = u16::from(above);
                // Polarity −: the mirror stump.
                row[base + 1] = u16::from(!above);
            }
        }
    }
    VoterOutputs::from_predictions(predictions, data.labels.clone(), 2, None)
}

/// Multi-class stumps: each (feature, threshold) stump predicts the majority
/// label of its training half on each side of the threshold, and the basis
/// contains one copy per half (`n = 2·d·T`). Because these stumps see labels,
/// they are data-dependent: voters carry half tags so the cross-split
/// certificate can evaluate each half on the other.
pub fn build_stumps_majority(
    data: &Dataset,
    split: &SplitPlan,
    thresholds_per_feature: usize,
) -> Result<VoterOutputs> {
    if thresholds_per_feature == 0 {
        return Err(Error::Config("thresholds_per_feature must be ≥ 1".into()));
    }
    if split.half_one.is_empty() || split.half_two.is_empty() {
        return Err(Error::Config("majority stumps need two non-empty training halves".into()));
    }
    let t_count = thresholds_per_feature;
    let per_half = data.d * t_count;
    let n = 2 * per_half;
    let mut rules: Vec<(usize, f64, u16, u16)> = Vec::with_capacity(n); // (feature, τ, below, above)
    let mut half_tags = Vec::with_capacity(n);
    for (half_idx, half) in [&split.half_one, &split.half_two].into_iter().enumerate() {
        for f in 0..data.d {
            for t in 0..t_count {
                let tau = (t as f64 + 0.5) / t_count as f64;
                let mut below = vec![0usize; data.k];
                let mut above = vec![0usize; data.k];
                for &j in half.iter() {
                    if data.feature(j, f) >= tau {
                        above[data.labels[j]] += 1;
                    } else {
                        below[data.labels[j]] += 1;
                    }
                }
                let whole: Vec<usize> =
                    below.iter().zip(&above).map(|(b, a)| b + a).collect();
                let maj_below = majority(&below).unwrap_or_else(|| majority(&whole).unwrap());
                let maj_above = majority(&above).unwrap_or_else(|| majority(&whole).unwrap());
                rules.push((f, tau, maj_below as u16, maj_above as u16));
                half_tags.push(if half_idx == 0 { VoterHalf::One } else { VoterHalf::Two });
            }
        }
    }
    let mut predictions = vec![0u16; data.m * n];
    for j in 0..data.m {
        let row = &mut predictions[j * n..(j + 1) * n];
        for (i, &(f, tau, lo, hi)) in rules.iter().enumerate() {
            row[i] = if data.feature(j, f) >= tau { hi } else { lo };
        }
    }
    VoterOutputs::from_predictions(predictions, data.labels.clone(), data.k, Some(half_tags))
}

/// Majority class with lowest-index tie-break; `None` on an empty side.
fn majority(counts: &[usize]) -> Option<usize> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    Some(best)
}
