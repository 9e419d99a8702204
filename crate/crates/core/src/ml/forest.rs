//! Random forest of CART trees with Gini splits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Keeps serialized trees within the nesting limit of JSON readers.
pub const MAX_TREE_DEPTH: usize = 100;

/// `1 - sum p_k^2` over the two classes.
pub fn gini_impurity(counts: [usize; 2]) -> Result<f64> {
    if counts[0] + counts[1] == 0 {
        return Err(Error::input("Gini impurity of an empty node"));
    }
    Ok(gini(counts))
}

fn gini(counts: [usize; 2]) -> f64 {
    let (a, b) = (counts[0] as f64, counts[1] as f64);
    let n = a + b;
    1.0 - (a * a + b * b) / (n * n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split<T> {
    pub feature: usize,
    /// Samples with `x[feature] <= threshold` go left.
    pub threshold: T,
    /// Size-weighted Gini impurity of the two children.
    pub weighted_gini: f64,
    pub left_counts: [usize; 2],
    pub right_counts: [usize; 2],
}

/// `sum_child (a^2 + b^2) / n_child` as an exact fraction. Larger means
/// lower weighted impurity.
fn purity_fraction(l: [usize; 2], r: [usize; 2]) -> (u128, u128) {
    let sq = |c: [usize; 2]| (c[0] as u128).pow(2) + (c[1] as u128).pow(2);
    let (nl, nr) = ((l[0] + l[1]) as u128, (r[0] + r[1]) as u128);
    (sq(l) * nr + sq(r) * nl, nl * nr)
}

fn weighted_gini(l: [usize; 2], r: [usize; 2]) -> f64 {
    let nl = (l[0] + l[1]) as f64;
    let nr = (r[0] + r[1]) as f64;
    (nl * gini(l) + nr * gini(r)) / (nl + nr)
}

fn midpoint<T: Scalar>(a: T, b: T) -> T {
    let m = a + (b - a) / T::of(2.0);
    if m < b {
        m
    } else {
        a
    }
}

/// Exhaustive search over `features` for the split of `indices` with the
/// lowest weighted Gini. Thresholds are midpoints between consecutive
/// distinct values; both children must hold at least `min_samples_leaf`
/// samples. Ties go to the lower feature index, then the lower threshold.
pub fn best_split<T: Scalar>(
    data: &LabeledDataset<T>,
    indices: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<Split<T>> {
    let x = data.features();
    let y = data.labels();
    let mut total = [0usize; 2];
    for &i in indices {
        total[y[i] as usize] += 1;
    }
    let min_leaf = min_samples_leaf.max(1);
    let mut sorted_features = features.to_vec();
    sorted_features.sort_unstable();
    sorted_features.dedup();

    let mut best: Option<(Split<T>, (u128, u128))> = None;
    let mut order = indices.to_vec();
    for &f in &sorted_features {
        order.sort_by(|&a, &b| {
            x[a][f]
                .partial_cmp(&x[b][f])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut left = [0usize; 2];
        for k in 0..order.len().saturating_sub(1) {
            left[y[order[k]] as usize] += 1;
            let (lo, hi) = (x[order[k]][f], x[order[k + 1]][f]);
            if lo == hi {
                continue;
            }
            let n_left = k + 1;
            if n_left < min_leaf || order.len() - n_left < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let frac = purity_fraction(left, right);
            let better = match &best {
                None => true,
                Some((_, b)) => frac.0 * b.1 > b.0 * frac.1,
            };
            if better {
                let split = Split {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    weighted_gini: weighted_gini(left, right),
                    left_counts: left,
                    right_counts: right,
                };
                best = Some((split, frac));
            }
        }
    }
    best.map(|(s, _)| s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Node<T> {
    Split {
        feature: usize,
        threshold: T,
        left: Box<Node<T>>,
        right: Box<Node<T>>,
    },
    Leaf {
        counts: [u64; 2],
    },
}

impl<T: Scalar> Node<T> {
    /// Majority class of the leaf reached by `x`; leaf ties go to 1.
    pub fn classify(&self, x: &[T]) -> Label {
        let mut node = self;
        loop {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
                Node::Leaf { counts } => return u8::from(counts[1] >= counts[0]),
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
            Node::Leaf { .. } => 0,
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
            Node::Leaf { .. } => 1,
        }
    }

    fn validate(&self, n_features: usize) -> Result<()> {
        match self {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if *feature >= n_features {
                    return Err(Error::input(format!(
                        "split feature {feature} out of range for {n_features} features"
                    )));
                }
                if !threshold.is_finite() {
                    return Err(Error::input("split threshold is not finite"));
                }
                left.validate(n_features)?;
                right.validate(n_features)
            }
            Node::Leaf { counts } if counts[0] + counts[1] == 0 => {
                Err(Error::input("leaf with no samples"))
            }
            Node::Leaf { .. } => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// At most [`MAX_TREE_DEPTH`].
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub mtry: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 12,
            min_samples_leaf: 2,
            mtry: None,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_mtry(&self, n_features: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| ((n_features as f64).sqrt().ceil() as usize).max(1))
    }

    fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::param("forest needs at least one tree"));
        }
        if self.max_depth > MAX_TREE_DEPTH {
            return Err(Error::param(format!(
                "max_depth {} exceeds {MAX_TREE_DEPTH}",
                self.max_depth
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::param("min_samples_leaf must be at least 1"));
        }
        let mtry = self.resolved_mtry(n_features);
        if mtry == 0 || mtry > n_features {
            return Err(Error::param(format!(
                "mtry {mtry} must be in 1..={n_features}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestModel<T> {
    pub n_features: usize,
    /// Hyperparameters used for training, with `mtry` resolved.
    pub params: ForestParams,
    pub trees: Vec<Node<T>>,
}

impl<T: Scalar> ForestModel<T> {
    /// Structural checks applied to models loaded from disk.
    pub fn validate(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::input("forest has no trees"));
        }
        self.trees
            .iter()
            .try_for_each(|t| t.validate(self.n_features))
    }

    pub fn tree_votes(&self, x: &[T]) -> Result<Vec<Label>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(self.trees.iter().map(|t| t.classify(x)).collect())
    }
}

/// Fraction of trees voting positive and the resulting label
/// (positive iff the fraction is at least one half).
pub fn forest_predict<T: Scalar>(model: &ForestModel<T>, x: &[T]) -> Result<(T, Label)> {
    let votes = model.tree_votes(x)?;
    let ones = votes.iter().filter(|&&v| v == 1).count();
    let prob = T::of_usize(ones) / T::of_usize(votes.len());
    Ok((prob, u8::from(2 * ones >= votes.len())))
}

/// Tree `t` draws its bootstrap sample and per-node feature subsets from
/// `Rng::new(seed + t)`, so results do not depend on the thread count.
pub fn train_random_forest<T: Scalar>(
    data: &LabeledDataset<T>,
    params: &ForestParams,
) -> Result<ForestModel<T>> {
    if data.is_empty() {
        return Err(Error::input("cannot train a forest on an empty dataset"));
    }
    params.validate(data.dim())?;
    let mtry = params.resolved_mtry(data.dim());
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = Rng::new(params.seed.wrapping_add(t as u64));
            let n = data.len();
            let sample: Vec<usize> = (0..n).map(|_| rng.below(n)).collect();
            TreeBuilder {
                data,
                params,
                mtry,
                rng,
            }
            .grow(sample, 0)
        })
        .collect();
    Ok(ForestModel {
        n_features: data.dim(),
        params: ForestParams {
            mtry: Some(mtry),
            ..*params
        },
        trees,
    })
}

struct TreeBuilder<'a, T> {
    data: &'a LabeledDataset<T>,
    params: &'a ForestParams,
    mtry: usize,
    rng: Rng,
}

impl<T: Scalar> TreeBuilder<'_, T> {
    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> Node<T> {
        let labels = self.data.labels();
        let mut counts = [0u64; 2];
        for &i in &indices {
            counts[labels[i] as usize] += 1;
        }
        let pure = counts[0] == 0 || counts[1] == 0;
        let too_deep = depth >= self.params.max_depth;
        if pure || too_deep || indices.len() < 2 * self.params.min_samples_leaf {
            return Node::Leaf { counts };
        }
        let features = self.rng.sample_indices(self.data.dim(), self.mtry);
        let Some(split) = best_split(self.data, &indices, &features, self.params.min_samples_leaf)
        else {
            return Node::Leaf { counts };
        };
        let x = self.data.features();
        let (go_left, go_right): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| x[i][split.feature] <= split.threshold);
        let left = Box::new(self.grow(go_left, depth + 1));
        let right = Box::new(self.grow(go_right, depth + 1));
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_values() {
        assert_eq!(gini_impurity([4, 0]).unwrap(), 0.0);
        assert_eq!(gini_impurity([2, 2]).unwrap(), 0.5);
        assert!((gini_impurity([3, 1]).unwrap() - 0.375).abs() < 1e-15);
        assert!(gini_impurity([0, 0]).is_err());
    }

    #[test]
    fn separable_feature_is_chosen() {
        let data = LabeledDataset::from_rows(
            vec![
                vec![5.0, 1.0],
                vec![1.0, 2.0],
                vec![5.0, 3.0],
                vec![1.0, 4.0],
            ],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let s = best_split(&data, &[0, 1, 2, 3], &[0, 1], 1).unwrap();
        assert_eq!(s.feature, 1);
        assert_eq!(s.threshold, 2.5);
        assert_eq!(s.weighted_gini, 0.0);
        assert_eq!((s.left_counts, s.right_counts), ([2, 0], [0, 2]));
    }

    #[test]
    fn ties_prefer_lower_feature_then_threshold() {
        // Both features separate perfectly with the same threshold layout.
        let data = LabeledDataset::from_rows(
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]],
            vec![0, 1, 1],
        )
        .unwrap();
        let s = best_split(&data, &[0, 1, 2], &[1, 0], 1).unwrap();
        assert_eq!((s.feature, s.threshold), (0, 0.5));
        // Labels 0,1,0: thresholds 0.5 and 1.5 tie.
        let data = LabeledDataset::from_rows(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 1, 0])
            .unwrap();
        let s = best_split(&data, &[0, 1, 2], &[0], 1).unwrap();
        assert_eq!(s.threshold, 0.5);
    }

    #[test]
    fn min_leaf_and_constant_features() {
        let data = LabeledDataset::from_rows(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 1, 1])
            .unwrap();
        let s = best_split(&data, &[0, 1, 2], &[0], 2);
        assert!(s.is_none());
        let flat = LabeledDataset::from_rows(vec![vec![1.0], vec![1.0]], vec![0, 1]).unwrap();
        assert!(best_split(&flat, &[0, 1], &[0], 1).is_none());
    }

    #[test]
    fn forest_fits_xor_and_is_deterministic() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let a = (i % 2) as f64 + 0.01 * i as f64;
            let b = ((i / 2) % 2) as f64 - 0.005 * i as f64;
            rows.push(vec![a, b]);
            labels.push(((i % 2) ^ ((i / 2) % 2)) as u8);
        }
        let data = LabeledDataset::from_rows(rows, labels).unwrap();
        let params = ForestParams {
            n_trees: 25,
            max_depth: 100,
            mtry: Some(2),
            min_samples_leaf: 1,
            seed: 3,
        };
        let model = train_random_forest(&data, &params).unwrap();
        model.validate().unwrap();
        let correct = data
            .features()
            .iter()
            .zip(data.labels())
            .filter(|(x, &l)| forest_predict(&model, x).unwrap().1 == l)
            .count();
        assert!(correct >= 38, "{correct}");
        assert_eq!(model, train_random_forest(&data, &params).unwrap());
    }

    #[test]
    fn max_depth_zero_gives_stumps_of_leaves() {
        let data = LabeledDataset::from_rows(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 1, 1])
            .unwrap();
        let params = ForestParams {
            n_trees: 3,
            max_depth: 0,
            ..Default::default()
        };
        let model = train_random_forest(&data, &params).unwrap();
        assert!(model.trees.iter().all(|t| t.leaf_count() == 1));
    }

    #[test]
    fn rejects_bad_params_and_inputs() {
        let data = LabeledDataset::from_rows(vec![vec![0.0], vec![1.0]], vec![0, 1]).unwrap();
        let bad = ForestParams {
            n_trees: 0,
            ..Default::default()
        };
        assert!(train_random_forest(&data, &bad).is_err());
        let bad = ForestParams {
            mtry: Some(2),
            ..Default::default()
        };
        assert!(train_random_forest(&data, &bad).is_err());
        let model = train_random_forest(&data, &ForestParams::default()).unwrap();
        assert!(forest_predict(&model, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn single_class_gives_leaf_trees() {
        let one = LabeledDataset::from_rows(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 0, 0])
            .unwrap();
        let model = train_random_forest(
            &one,
            &ForestParams {
                n_trees: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(model.trees.iter().all(|t| matches!(t, Node::Leaf { .. })));
        assert_eq!(forest_predict(&model, &[7.0]).unwrap(), (0.0, 0));
    }

    #[test]
    fn four_point_stump() {
        let data = LabeledDataset::from_rows(
            vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        // Retry seeds until the bootstrap contains both classes.
        for seed in 0..20 {
            let params = ForestParams {
                n_trees: 1,
                max_depth: 1,
                min_samples_leaf: 1,
                mtry: Some(1),
                seed,
            };
            let model = train_random_forest(&data, &params).unwrap();
            if let Node::Split {
                feature: 0,
                threshold,
                ..
            } = model.trees[0]
            {
                assert!(threshold > -1.0 && threshold < 1.0);
                for (x, &l) in data.features().iter().zip(data.labels()) {
                    assert_eq!(forest_predict(&model, x).unwrap(), (f64::from(l), l));
                }
                return;
            }
        }
        panic!("no bootstrap sample contained both classes");
    }

    #[test]
    fn default_mtry_rounds_up() {
        let p = ForestParams::default();
        assert_eq!(p.resolved_mtry(26), 6);
        assert_eq!(p.resolved_mtry(16), 4);
        assert_eq!(p.resolved_mtry(1), 1);
    }

    #[test]
    fn validate_catches_bad_nodes() {
        let bad_feature: ForestModel<f64> = ForestModel {
            n_features: 1,
            params: ForestParams::default(),
            trees: vec![Node::Split {
                feature: 3,
                threshold: 0.0,
                left: Box::new(Node::Leaf { counts: [1, 0] }),
                right: Box::new(Node::Leaf { counts: [0, 1] }),
            }],
        };
        assert!(bad_feature.validate().is_err());
        let empty_leaf: ForestModel<f64> = ForestModel {
            n_features: 1,
            params: ForestParams::default(),
            trees: vec![Node::Leaf { counts: [0, 0] }],
        };
        assert!(empty_leaf.validate().is_err());
    }
}
