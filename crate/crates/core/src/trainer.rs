//! Reference random-forest trainer: bootstrap samples, random feature
//! subsets per node, greedy splits by information gain.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{DecisionTreeModel, EnsembleModel, FeatureKind, NodeKind, Predicate, TreeNode};
use crate::scalar::{argmax, entropy, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub trees: usize,
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    /// Features tried per node; `None` means `round(sqrt(n))`.
    pub features_per_split: Option<usize>,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            trees: 100,
            max_depth: None,
            features_per_split: None,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn mtry(&self, n_features: usize) -> Result<usize> {
        let k = self
            .features_per_split
            .unwrap_or_else(|| ((n_features as f64).sqrt().round() as usize).max(1));
        if k == 0 || k > n_features {
            return Err(Error::InvalidInput(format!(
                "features per split {k} outside [1, {n_features}]"
            )));
        }
        Ok(k)
    }
}

/// Trains `config.trees` trees of weight 1, each on its own bootstrap sample
/// and RNG stream, and records each tree's out-of-bag accuracy.
pub fn train_forest<S: Scalar>(data: &Dataset<S>, config: &TrainConfig) -> Result<EnsembleModel<S>> {
    if config.trees == 0 {
        return Err(Error::InvalidInput("tree count must be >= 1".into()));
    }
    if config.min_samples_leaf == 0 {
        return Err(Error::InvalidInput("min samples per leaf must be >= 1".into()));
    }
    let mtry = config.mtry(data.space.n_features())?;
    let labels: Vec<usize> = data
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.label.ok_or(Error::Data {
                row: i + 1,
                message: "training row without label".into(),
            })
        })
        .collect::<Result<_>>()?;
    if labels.len() < 2 {
        return Err(Error::InvalidInput("training needs at least 2 rows".into()));
    }
    let m = data.space.n_classes();
    let mut observed = vec![false; m];
    labels.iter().for_each(|&l| observed[l] = true);
    if observed.iter().filter(|&&o| o).count() < 2 {
        return Err(Error::InvalidInput("training data contains a single class".into()));
    }

    let trees = (0..config.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            grow_tree(data, &labels, config, mtry, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    EnsembleModel::new(data.space.clone(), trees)
}

struct Grower<'a, S> {
    data: &'a Dataset<S>,
    labels: &'a [usize],
    config: &'a TrainConfig,
    mtry: usize,
    m: usize,
    nodes: Vec<TreeNode<S>>,
}

struct Split<S> {
    gain: f64,
    feature: usize,
    predicate: Predicate<S>,
}

fn grow_tree<S: Scalar>(
    data: &Dataset<S>,
    labels: &[usize],
    config: &TrainConfig,
    mtry: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DecisionTreeModel<S>> {
    let n = data.len();
    let mut in_bag = vec![false; n];
    let sample_rows: Vec<usize> = (0..n)
        .map(|_| {
            let i = rng.random_range(0..n);
            in_bag[i] = true;
            i
        })
        .collect();
    let mut grower = Grower {
        data,
        labels,
        config,
        mtry,
        m: data.space.n_classes(),
        nodes: Vec::new(),
    };
    let root = grower.grow(sample_rows, 0, rng);
    let nodes = grower.nodes;

    let oob: Vec<usize> = (0..n).filter(|&i| !in_bag[i]).collect();
    let tree = DecisionTreeModel::new(nodes, root, S::one(), None, &data.space)?;
    let oob_accuracy = (!oob.is_empty()).then(|| {
        let correct = oob
            .iter()
            .filter(|&&i| {
                let leaf = tree.node(tree.leaf_for(&data.rows[i].values));
                argmax(&leaf.counts.iter().map(|&c| c as f64).collect::<Vec<_>>()) == labels[i]
            })
            .count();
        S::from_f64(correct as f64 / oob.len() as f64).expect("ratio")
    });
    tree.with_oob_accuracy(oob_accuracy)
}

impl<S: Scalar> Grower<'_, S> {
    fn counts(&self, rows: &[usize]) -> Vec<u64> {
        let mut c = vec![0u64; self.m];
        rows.iter().for_each(|&r| c[self.labels[r]] += 1);
        c
    }

    /// Grows the subtree for `rows` and returns its root position.
    fn grow(&mut self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let counts = self.counts(&rows);
        let pos = self.nodes.len();
        self.nodes.push(TreeNode {
            id: pos as u32,
            kind: NodeKind::Leaf,
            counts: counts.clone(),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.config.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || rows.len() < 2 * self.config.min_samples_leaf {
            return pos;
        }
        let Some(split) = self.best_split(&rows, &counts, rng) else {
            return pos;
        };
        let (right_rows, left_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| split.predicate.holds(self.data.rows[r].values[split.feature]));
        let left = self.grow(left_rows, depth + 1, rng);
        let right = self.grow(right_rows, depth + 1, rng);
        self.nodes[pos].kind = NodeKind::Internal {
            feature: split.feature,
            predicate: split.predicate,
            left,
            right,
        };
        pos
    }

    fn best_split(&self, rows: &[usize], counts: &[u64], rng: &mut ChaCha8Rng) -> Option<Split<S>> {
        let parent_entropy = entropy_u64(counts);
        let n_features = self.data.space.n_features();
        let mut best: Option<Split<S>> = None;
        for feature in sample(rng, n_features, self.mtry).into_iter() {
            let candidate = match self.data.space.feature(feature).kind {
                FeatureKind::Numeric => self.numeric_split(rows, counts, feature, parent_entropy),
                FeatureKind::Nominal => self.nominal_split(rows, counts, feature, parent_entropy),
            };
            if let Some(c) = candidate {
                if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        best.filter(|b| b.gain > 1e-12)
    }

    fn numeric_split(&self, rows: &[usize], counts: &[u64], feature: usize, parent_entropy: f64) -> Option<Split<S>> {
        let value = |r: usize| self.data.rows[r].values[feature];
        let mut sorted = rows.to_vec();
        sorted.sort_by(|&a, &b| value(a).partial_cmp(&value(b)).expect("finite feature values"));
        let total = sorted.len();
        let min_leaf = self.config.min_samples_leaf;
        let mut left = vec![0u64; self.m];
        let mut right = counts.to_vec();
        let mut best: Option<(f64, S)> = None;
        for i in 0..total - 1 {
            let label = self.labels[sorted[i]];
            left[label] += 1;
            right[label] -= 1;
            let (a, b) = (value(sorted[i]), value(sorted[i + 1]));
            if a == b || i + 1 < min_leaf || total - i - 1 < min_leaf {
                continue;
            }
            let gain = split_gain(parent_entropy, &left, &right, total);
            if best.is_none_or(|(g, _)| gain > g) {
                let mid = (a + b) / S::lit(2.0);
                best = Some((gain, if mid > a { mid } else { b }));
            }
        }
        best.map(|(gain, t)| Split {
            gain,
            feature,
            predicate: Predicate::AtLeast(t),
        })
    }

    /// Greedy one-vs-rest growth: start from the best single category and
    /// keep adding the category that most improves the gain.
    fn nominal_split(&self, rows: &[usize], counts: &[u64], feature: usize, parent_entropy: f64) -> Option<Split<S>> {
        let n_cat = self.data.space.feature(feature).categories.len();
        let mut per_cat = vec![vec![0u64; self.m]; n_cat];
        for &r in rows {
            let c = self.data.rows[r].values[feature].to_usize().expect("category index");
            per_cat[c][self.labels[r]] += 1;
        }
        let present: Vec<usize> = (0..n_cat).filter(|&c| per_cat[c].iter().sum::<u64>() > 0).collect();
        if present.len() < 2 {
            return None;
        }
        let total = rows.len();
        let min_leaf = self.config.min_samples_leaf as u64;
        let evaluate = |set: &[usize]| -> Option<f64> {
            let mut right = vec![0u64; self.m];
            for &c in set {
                right.iter_mut().zip(&per_cat[c]).for_each(|(r, v)| *r += v);
            }
            let left: Vec<u64> = counts.iter().zip(&right).map(|(a, b)| a - b).collect();
            let (nl, nr) = (left.iter().sum::<u64>(), right.iter().sum::<u64>());
            (nl >= min_leaf && nr >= min_leaf).then(|| split_gain(parent_entropy, &left, &right, total))
        };
        let mut chosen: Vec<usize> = Vec::new();
        let mut best_gain = f64::NEG_INFINITY;
        loop {
            let mut step: Option<(f64, usize)> = None;
            for &c in present.iter().filter(|c| !chosen.contains(c)) {
                let mut trial = chosen.clone();
                trial.push(c);
                if trial.len() == present.len() {
                    continue;
                }
                if let Some(g) = evaluate(&trial) {
                    if step.is_none_or(|(bg, _)| g > bg) {
                        step = Some((g, c));
                    }
                }
            }
            match step {
                Some((g, c)) if g > best_gain + 1e-12 => {
                    best_gain = g;
                    chosen.push(c);
                }
                _ => break,
            }
        }
        (!chosen.is_empty()).then(|| Split {
            gain: best_gain,
            feature,
            predicate: Predicate::InSet(chosen.into_iter().collect()),
        })
    }
}

fn entropy_u64(counts: &[u64]) -> f64 {
    entropy(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>())
}

fn split_gain(parent_entropy: f64, left: &[u64], right: &[u64], total: usize) -> f64 {
    let nl: u64 = left.iter().sum();
    let nr: u64 = right.iter().sum();
    let total = total as f64;
    parent_entropy - nl as f64 / total * entropy_u64(left) - nr as f64 / total * entropy_u64(right)
}
