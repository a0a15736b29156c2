//! Dataset ingestion, base-voter construction, and the prediction/error
//! matrices every bound consumes.

mod dataset;
mod forest;
mod stumps;

pub use dataset::{load_dataset, load_prediction_matrix, DataFormat};
pub use forest::build_forest;
pub use stumps::{build_stumps, build_stumps_majority};

use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A classification dataset with contiguous labels and finite features.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    /// Row-major `m × d` feature matrix.
    features: Vec<f64>,
    pub labels: Vec<usize>,
    pub m: usize,
    pub d: usize,
    pub k: usize,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Vec<f64>, labels: Vec<usize>, d: usize) -> Result<Self> {
        let name = name.into();
        let m = labels.len();
        if m == 0 {
            return Err(Error::EmptyDataset(name));
        }
        if d == 0 || features.len() != m * d {
            return Err(Error::Domain(format!(
                "dataset {name}: feature matrix is {} entries, expected {m}×{d}",
                features.len()
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("dataset {name}: NaN or infinite feature value")));
        }
        let k = labels.iter().copied().max().unwrap() + 1;
        if k < 2 {
            return Err(Error::Domain(format!("dataset {name}: needs at least 2 classes")));
        }
        Ok(Self { name, features, labels, m, d, k })
    }

    #[inline]
    pub fn feature(&self, example: usize, feature: usize) -> f64 {
        self.features[example * self.d + feature]
    }

    pub fn row(&self, example: usize) -> &[f64] {
        &self.features[example * self.d..(example + 1) * self.d]
    }

    /// Min-max scale every feature to [0, 1]. Scaling parameters are fitted on
    /// `fit_on` when given (the training split), otherwise on all examples.
    /// Constant features collapse to 0.
    pub fn min_max_scale(&mut self, fit_on: Option<&[usize]>) {
        let all: Vec<usize>;
        let fit: &[usize] = match fit_on {
            Some(idx) => idx,
            None => {
                all = (0..self.m).collect();
                &all
            }
        };
        for f in 0..self.d {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &j in fit {
                let v = self.feature(j, f);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let span = hi - lo;
            for j in 0..self.m {
                let v = &mut self.features[j * self.d + f];
                *v = if span > 0.0 { ((*v - lo) / span).clamp(0.0, 1.0) } else { 0.0 };
            }
        }
    }
}

/// Train/test assignment plus the two inner halves of the training set used
/// by the data-dependent setting.
#[derive(Debug, Clone)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub half_one: Vec<usize>,
    pub half_two: Vec<usize>,
    pub seed: u64,
}

impl SplitPlan {
    /// Shuffle `0..m` with the seed and split off `train_fraction` for
    /// training; the training indices are halved in order for S₁/S₂.
    pub fn new(m: usize, train_fraction: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&train_fraction) || train_fraction <= 0.0 {
            return Err(Error::Config(format!(
                "train fraction {train_fraction} outside (0,1)"
            )));
        }
        let mut order: Vec<usize> = (0..m).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let cut = ((m as f64) * train_fraction).round() as usize;
        let cut = cut.clamp(1, m.saturating_sub(1).max(1));
        let train: Vec<usize> = order[..cut].to_vec();
        let test: Vec<usize> = order[cut..].to_vec();
        let mid = train.len() / 2;
        let half_one = train[..mid].to_vec();
        let half_two = train[mid..].to_vec();
        Ok(Self { train, test, half_one, half_two, seed })
    }
}

/// Which training half produced a voter, in the data-dependent setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoterHalf {
    One,
    Two,
}

/// Per-example, per-voter predictions and error indicators — the matrices
/// every bound consumes. Immutable after construction; safe to share
/// read-only across threads.
#[derive(Debug, Clone)]
pub struct VoterOutputs {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    /// Row-major `m × n` class indices.
    predictions: Vec<u16>,
    /// Row-major `m × n`: `1` exactly when the voter disagrees with the label.
    errors: Vec<u8>,
    /// Training-half tag per voter (data-dependent settings only).
    pub half: Option<Vec<VoterHalf>>,
    /// Copy of the true labels, so losses can be evaluated without the dataset.
    pub labels: Vec<usize>,
}

impl VoterOutputs {
    pub fn from_predictions(
        predictions: Vec<u16>,
        labels: Vec<usize>,
        k: usize,
        half: Option<Vec<VoterHalf>>,
    ) -> Result<Self> {
        let m = labels.len();
        if m == 0 || predictions.is_empty() || predictions.len() % m != 0 {
            return Err(Error::Domain(format!(
                "voter outputs: {} predictions do not tile {m} examples",
                predictions.len()
            )));
        }
        let n = predictions.len() / m;
        if let Some(h) = &half {
            if h.len() != n {
                return Err(Error::Domain(format!(
                    "voter outputs: {} half tags for {n} voters",
                    h.len()
                )));
            }
        }
        if predictions.iter().any(|&p| (p as usize) >= k) {
            return Err(Error::Domain("voter outputs: prediction index ≥ k".into()));
        }
        if labels.iter().any(|&y| y >= k) {
            return Err(Error::Domain("voter outputs: label index ≥ k".into()));
        }
        let mut errors = vec![0u8; m * n];
        for j in 0..m {
            let y = labels[j] as u16;
            for i in 0..n {
                errors[j * n + i] = u8::from(predictions[j * n + i] != y);
            }
        }
        Ok(Self { m, n, k, predictions, errors, half, labels })
    }

    #[inline]
    pub fn prediction(&self, example: usize, voter: usize) -> usize {
        self.predictions[example * self.n + voter] as usize
    }

    #[inline]
    pub fn error(&self, example: usize, voter: usize) -> f64 {
        self.errors[example * self.n + voter] as f64
    }

    pub fn error_row(&self, example: usize) -> &[u8] {
        &self.errors[example * self.n..(example + 1) * self.n]
    }

    /// ±1 view of a binary voter's prediction (class 1 ↦ +1, class 0 ↦ −1).
    #[inline]
    pub fn sign_prediction(&self, example: usize, voter: usize) -> f64 {
        debug_assert_eq!(self.k, 2);
        if self.predictions[example * self.n + voter] == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// ±1 view of a binary label.
    #[inline]
    pub fn sign_label(&self, example: usize) -> f64 {
        debug_assert_eq!(self.k, 2);
        if self.labels[example] == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// One-hot voter predictions for one example: an `n × k` indicator slab.
    /// Each row sums to exactly 1.
    pub fn onehot_row(&self, example: usize) -> Vec<u8> {
        let mut out = vec![0u8; self.n * self.k];
        for i in 0..self.n {
            out[i * self.k + self.prediction(example, i)] = 1;
        }
        out
    }

    /// Indicator column `[1{f_i(x) = class}]_i` for one example.
    pub fn class_indicator_column(&self, example: usize, class: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = f64::from(self.prediction(example, i) == class);
        }
    }

    /// Mean error of every voter over an index set.
    pub fn voter_error_means(&self, indices: &[usize]) -> Vec<f64> {
        let mut acc = vec![0.0f64; self.n];
        for &j in indices {
            let row = self.error_row(j);
            for (a, &e) in acc.iter_mut().zip(row) {
                *a += e as f64;
            }
        }
        let inv = 1.0 / indices.len().max(1) as f64;
        for a in &mut acc {
            *a *= inv;
        }
        acc
    }

    /// Voter indices belonging to a training half.
    pub fn half_indices(&self, which: VoterHalf) -> Vec<usize> {
        match &self.half {
            None => Vec::new(),
            Some(tags) => {
                tags.iter().enumerate().filter(|(_, &t)| t == which).map(|(i, _)| i).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_plan_partitions_and_halves() {
        let plan = SplitPlan::new(101, 0.5, 3).unwrap();
        let mut all: Vec<usize> = plan.train.iter().chain(plan.test.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
        let mut halves: Vec<usize> =
            plan.half_one.iter().chain(plan.half_two.iter()).copied().collect();
        halves.sort_unstable();
        let mut train_sorted = plan.train.clone();
        train_sorted.sort_unstable();
        assert_eq!(halves, train_sorted);
        // Deterministic given the seed.
        let again = SplitPlan::new(101, 0.5, 3).unwrap();
        assert_eq!(plan.train, again.train);
    }

    #[test]
    fn error_matrix_matches_disagreement() {
        let preds = vec![0u16, 1, 1, 1, 0, 0]; // 2 examples × 3 voters
        let labels = vec![0usize, 1];
        let v = VoterOutputs::from_predictions(preds, labels, 2, None).unwrap();
        assert_eq!(v.error(0, 0), 0.0);
        assert_eq!(v.error(0, 1), 1.0);
        assert_eq!(v.error(1, 0), 0.0);
        assert_eq!(v.error(1, 1), 1.0);
        assert_eq!(v.error(1, 2), 1.0);
    }

    #[test]
    fn onehot_rows_sum_to_one() {
        let preds = vec![2u16, 0, 1, 1, 2, 0];
        let labels = vec![2usize, 0];
        let v = VoterOutputs::from_predictions(preds, labels, 3, None).unwrap();
        for j in 0..v.m {
            let hot = v.onehot_row(j);
            for i in 0..v.n {
                let s: u8 = hot[i * v.k..(i + 1) * v.k].iter().sum();
                assert_eq!(s, 1);
            }
        }
    }

    #[test]
    fn min_max_scale_uses_training_split_only() {
        let mut data = Dataset::new(
            "t",
            vec![0.0, 10.0, 5.0, 20.0],
            vec![0, 1],
            2,
        )
        .unwrap();
        // Fit on example 0 only: feature spans are degenerate there.
        data.min_max_scale(Some(&[0]));
        assert_eq!(data.feature(0, 0), 0.0);
        assert_eq!(data.feature(1, 0), 0.0, "constant-on-train feature collapses");
    }
}
