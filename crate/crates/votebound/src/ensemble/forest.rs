//! Small random forests for the data-dependent setting.
//!
//! Half the trees train on S₁ and half on S₂ (per-tree bootstrap, Gini
//! impurity, √d random candidate features per split, unbounded depth), and
//! every voter records which half produced it so each half can be evaluated
//! on the other.

use super::{Dataset, SplitPlan, VoterHalf, VoterOutputs};
use crate::exec;
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

enum Node {
    Leaf(u16),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> u16 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf(label) => return *label,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// Train `trees` trees (must be even), predict on every example, and tag each
/// voter with its training half. Deterministic given the seed.
pub fn build_forest(
    data: &Dataset,
    split: &SplitPlan,
    trees: usize,
    seed: u64,
) -> Result<VoterOutputs> {
    if trees == 0 || trees % 2 != 0 {
        return Err(Error::Config(format!("tree count must be even and > 0, got {trees}")));
    }
    if split.half_one.is_empty() || split.half_two.is_empty() {
        return Err(Error::Config("forest training needs two non-empty halves".into()));
    }
    let per_half = trees / 2;
    let grown: Vec<Tree> = exec::map_range(trees, |t| {
        let half = if t < per_half { &split.half_one } else { &split.half_two };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        grow_tree(data, half, &mut rng)
    });
    let half_tags: Vec<VoterHalf> = (0..trees)
        .map(|t| if t < per_half { VoterHalf::One } else { VoterHalf::Two })
        .collect();
    let rows: Vec<Vec<u16>> =
        exec::map_range(data.m, |j| grown.iter().map(|tree| tree.predict(data.row(j))).collect());
    let mut predictions = vec![0u16; data.m * trees];
    for (j, row) in rows.into_iter().enumerate() {
        predictions[j * trees..(j + 1) * trees].copy_from_slice(&row);
    }
    VoterOutputs::from_predictions(predictions, data.labels.clone(), data.k, Some(half_tags))
}

fn grow_tree(data: &Dataset, half: &[usize], rng: &mut ChaCha8Rng) -> Tree {
    // Per-tree bootstrap of the training half.
    let sample: Vec<usize> =
        (0..half.len()).map(|_| half[rng.random_range(0..half.len())]).collect();
    let mut tree = Tree { nodes: Vec::new() };
    build_node(data, &sample, rng, &mut tree);
    tree
}

fn build_node(data: &Dataset, indices: &[usize], rng: &mut ChaCha8Rng, tree: &mut Tree) -> usize {
    let mut counts = vec![0usize; data.k];
    for &j in indices {
        counts[data.labels[j]] += 1;
    }
    let node_gini = gini(&counts, indices.len());
    // Pure node or nothing left to split on: emit a leaf.
    if node_gini == 0.0 || indices.len() < 2 {
        let at = tree.nodes.len();
        tree.nodes.push(Node::Leaf(majority(&counts)));
        return at;
    }
    match best_split(data, indices, rng) {
        None => {
            let at = tree.nodes.len();
            tree.nodes.push(Node::Leaf(majority(&counts)));
            at
        }
        Some((feature, threshold)) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
                indices.iter().partition(|&&j| data.feature(j, feature) < threshold);
            if left_idx.is_empty() || right_idx.is_empty() {
                let at = tree.nodes.len();
                tree.nodes.push(Node::Leaf(majority(&counts)));
                return at;
            }
            let at = tree.nodes.len();
            tree.nodes.push(Node::Leaf(0)); // placeholder until children exist
            let left = build_node(data, &left_idx, rng, tree);
            let right = build_node(data, &right_idx, rng, tree);
            tree.nodes[at] = Node::Split { feature, threshold, left, right };
            at
        }
    }
}

/// Best Gini split over √d randomly sampled candidate features.
fn best_split(data: &Dataset, indices: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
    let candidates = ((data.d as f64).sqrt().floor() as usize).max(1);
    let mut features: Vec<usize> = (0..data.d).collect();
    // Partial Fisher–Yates: the first `candidates` entries are the sample.
    for i in 0..candidates.min(data.d) {
        let pick = rng.random_range(i..data.d);
        features.swap(i, pick);
    }
    let total = indices.len();
    let mut parent_counts = vec![0usize; data.k];
    for &j in indices {
        parent_counts[data.labels[j]] += 1;
    }
    let parent = gini(&parent_counts, total);
    let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, score)
    let mut sorted = indices.to_vec();
    for &f in &features[..candidates.min(data.d)] {
        sorted.sort_by(|&a, &b| data.feature(a, f).total_cmp(&data.feature(b, f)));
        let mut left_counts = vec![0usize; data.k];
        for w in 0..total - 1 {
            left_counts[data.labels[sorted[w]]] += 1;
            let (xa, xb) = (data.feature(sorted[w], f), data.feature(sorted[w + 1], f));
            if xa == xb {
                continue;
            }
            let left_n = w + 1;
            let right_n = total - left_n;
            let mut right_counts = vec![0usize; data.k];
            for (c, rc) in right_counts.iter_mut().enumerate() {
                *rc = parent_counts[c] - left_counts[c];
            }
            let score = (left_n as f64 * gini(&left_counts, left_n)
                + right_n as f64 * gini(&right_counts, right_n))
                / total as f64;
            if score < parent - 1e-12
                && best.map_or(true, |(_, _, s)| score < s)
            {
                best = Some((f, 0.5 * (xa + xb), score));
            }
        }
    }
    best.map(|(f, t, _)| (f, t))
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> u16 {
    let mut best = 0usize;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best as u16
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset(m: usize, seed: u64) -> Dataset {
        // Two informative features out of four; three classes in blocks.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::with_capacity(m * 4);
        let mut labels = Vec::with_capacity(m);
        for j in 0..m {
            let class = j % 3;
            let c = class as f64 / 3.0;
            features.push(c + 0.1 * rng.random_range(-1.0..1.0f64));
            features.push(1.0 - c + 0.1 * rng.random_range(-1.0..1.0f64));
            features.push(rng.random_range(0.0..1.0));
            features.push(rng.random_range(0.0..1.0));
            labels.push(class);
        }
        Dataset::new("toy3", features, labels, 4).unwrap()
    }

    #[test]
    fn odd_tree_count_is_a_configuration_error() {
        let data = toy_dataset(60, 0);
        let split = SplitPlan::new(60, 0.5, 0).unwrap();
        assert!(build_forest(&data, &split, 7, 0).is_err());
    }

    #[test]
    fn forest_tags_halves_evenly_and_is_deterministic() {
        let data = toy_dataset(90, 1);
        let split = SplitPlan::new(90, 0.5, 1).unwrap();
        let a = build_forest(&data, &split, 10, 42).unwrap();
        assert_eq!(a.n, 10);
        assert_eq!(a.half_indices(VoterHalf::One).len(), 5);
        assert_eq!(a.half_indices(VoterHalf::Two).len(), 5);
        let b = build_forest(&data, &split, 10, 42).unwrap();
        for j in 0..a.m {
            for i in 0..a.n {
                assert_eq!(a.prediction(j, i), b.prediction(j, i));
            }
        }
    }

    #[test]
    fn trees_fit_their_bootstrap_reasonably() {
        let data = toy_dataset(120, 2);
        let split = SplitPlan::new(120, 0.5, 2).unwrap();
        let v = build_forest(&data, &split, 8, 7).unwrap();
        // On easily separable blocks, forest voters should beat chance by far.
        let mean_err: f64 = v.voter_error_means(&split.test).iter().sum::<f64>() / v.n as f64;
        assert!(mean_err < 0.3, "forest voters too weak: {mean_err}");
    }

    #[test]
    fn single_example_half_predicts_that_label_everywhere() {
        let data = toy_dataset(40, 3);
        let mut split = SplitPlan::new(40, 0.5, 3).unwrap();
        split.half_one = vec![split.train[0]];
        let v = build_forest(&data, &split, 2, 0).unwrap();
        let constant = data.labels[split.half_one[0]];
        for j in 0..data.m {
            assert_eq!(v.prediction(j, 0), constant, "degenerate tree must be constant");
        }
    }

    #[test]
    fn pure_node_becomes_leaf() {
        // All labels equal: the tree is a single leaf.
        let data = Dataset::new(
            "pure",
            (0..20).map(|i| i as f64).collect(),
            // Dataset::new derives k from max label, so plant one example of
            // class 1 in half two and keep half one pure class 0.
            (0..20).map(|i| usize::from(i == 19)).collect(),
            1,
        )
        .unwrap();
        let mut split = SplitPlan::new(20, 0.8, 0).unwrap();
        split.half_one = (0..10).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = grow_tree(&data, &split.half_one, &mut rng);
        assert_eq!(tree.nodes.len(), 1, "pure node should not split");
    }
}
