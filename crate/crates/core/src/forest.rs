//! Random forest of Gini decision trees.
//!
//! Each tree is grown on a bootstrap sample (drawn with replacement, stored as
//! per-row multiplicities) until its leaves are pure or hold fewer than two
//! samples. At every node a random subset of `max_features` non-constant
//! features is searched for the split minimizing weighted Gini impurity;
//! thresholds sit midway between consecutive distinct values. Forest
//! probabilities are the mean of the trees' normalized leaf histograms.
//!
//! Tree `t` draws all of its randomness from ChaCha stream `t + 1` of the
//! master seed, so trees can be grown in parallel without changing results.

use ndarray::{ArrayView1, ArrayView2, Axis};
use rand_core::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_TREES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Weighted impurity decrease, as a fraction of the tree's sample weight.
        impurity_decrease: f64,
    },
    Leaf {
        /// Weighted class histogram `(n₀, n₁)`.
        counts: [u32; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Node arena; the root is node 0.
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf_counts(&self, x: ArrayView1<f64>) -> [u32; 2] {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict_proba(&self, x: ArrayView1<f64>) -> [f64; 2] {
        let [a, b] = self.leaf_counts(x);
        let total = f64::from(a + b);
        let p1 = f64::from(b) / total;
        [1.0 - p1, p1]
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }
}

/// Gini impurity `1 − (a² + b²) / (a + b)²` of a two-class histogram.
pub fn gini(a: f64, b: f64) -> f64 {
    let n = a + b;
    if n <= 0.0 {
        0.0
    } else {
        1.0 - (a * a + b * b) / (n * n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_estimators: usize,
    /// Features examined per split; `None` means `floor(sqrt(p))`.
    pub max_features: Option<usize>,
    pub seed: u64,
    /// When false every tree sees each training row exactly once.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: DEFAULT_TREES,
            max_features: None,
            seed: 0,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub n_estimators: usize,
    pub max_features: usize,
    pub n_features: usize,
    pub seed: u64,
}

pub fn default_max_features(n_features: usize) -> usize {
    ((n_features as f64).sqrt().floor() as usize).max(1)
}

struct TreeBuilder<'a> {
    x: ArrayView2<'a, f64>,
    labels: &'a [u8],
    weights: Vec<u32>,
    max_features: usize,
    total_weight: f64,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    /// `Σ_child n_child · gini_child`.
    child_impurity: f64,
    /// The same quantity as an exact fraction `(numerator, denominator)`, so
    /// equal impurities compare equal and ties fall to the documented order.
    exact: (i128, i128),
}

/// `n_l·gini_l + n_r·gini_r` scaled by `n_l·n_r`, over that denominator.
fn exact_child_impurity(l: [u64; 2], r: [u64; 2]) -> (i128, i128) {
    let (l0, l1, r0, r1) = (l[0] as i128, l[1] as i128, r[0] as i128, r[1] as i128);
    let (nl, nr) = (l0 + l1, r0 + r1);
    let num = nl * nl * nr + nr * nr * nl - (l0 * l0 + l1 * l1) * nr - (r0 * r0 + r1 * r1) * nl;
    (num, nl * nr)
}

impl TreeBuilder<'_> {
    fn histogram(&self, samples: &[usize]) -> [u32; 2] {
        let mut h = [0u32; 2];
        for &s in samples {
            h[self.labels[s] as usize] += self.weights[s];
        }
        h
    }

    /// Best split over a random subset of features, or `None` when every
    /// feature is constant on `samples`.
    fn best_split(&self, samples: &[usize], hist: [u32; 2], rng: &mut impl RngCore) -> Option<SplitChoice> {
        let p = self.x.ncols();
        let mut order: Vec<usize> = (0..p).collect();
        let mut best: Option<SplitChoice> = None;
        let mut visited = 0;
        let mut column: Vec<(f64, u8, u32)> = Vec::with_capacity(samples.len());
        let (total0, total1) = (u64::from(hist[0]), u64::from(hist[1]));

        for drawn in 0..p {
            if visited >= self.max_features {
                break;
            }
            // Partial Fisher–Yates: draw the next feature without replacement.
            let pick = drawn + rng::below(rng, p - drawn);
            order.swap(drawn, pick);
            let feature = order[drawn];

            column.clear();
            column.extend(
                samples
                    .iter()
                    .map(|&s| (self.x[[s, feature]], self.labels[s], self.weights[s])),
            );
            column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if column[0].0 == column[column.len() - 1].0 {
                continue;
            }
            visited += 1;

            let (mut left0, mut left1) = (0u64, 0u64);
            for i in 0..column.len() - 1 {
                let (v, label, w) = column[i];
                if label == 0 {
                    left0 += u64::from(w);
                } else {
                    left1 += u64::from(w);
                }
                let next = column[i + 1].0;
                if next == v {
                    continue;
                }
                let exact = exact_child_impurity([left0, left1], [total0 - left0, total1 - left1]);
                let mut threshold = 0.5 * (v + next);
                if threshold >= next {
                    threshold = v;
                }
                let better = match &best {
                    None => true,
                    Some(b) => {
                        let lhs = exact.0 * b.exact.1;
                        let rhs = b.exact.0 * exact.1;
                        lhs < rhs || (lhs == rhs && (feature, threshold) < (b.feature, b.threshold))
                    }
                };
                if better {
                    best = Some(SplitChoice {
                        feature,
                        threshold,
                        child_impurity: exact.0 as f64 / exact.1 as f64,
                        exact,
                    });
                }
            }
        }
        best
    }

    fn grow(&self, rng: &mut impl RngCore) -> DecisionTree {
        let root: Vec<usize> = (0..self.x.nrows()).filter(|&r| self.weights[r] > 0).collect();
        let mut nodes: Vec<Node> = Vec::new();
        // (node slot, samples); slots are reserved so children follow parents.
        let mut stack = vec![(0usize, root)];
        nodes.push(Node::Leaf { counts: [0, 0] });

        while let Some((slot, samples)) = stack.pop() {
            let hist = self.histogram(&samples);
            let n = hist[0] + hist[1];
            if hist[0] == 0 || hist[1] == 0 || n < 2 {
                nodes[slot] = Node::Leaf { counts: hist };
                continue;
            }
            let Some(choice) = self.best_split(&samples, hist, rng) else {
                nodes[slot] = Node::Leaf { counts: hist };
                continue;
            };
            let parent_impurity = f64::from(n) * gini(f64::from(hist[0]), f64::from(hist[1]));
            let decrease = ((parent_impurity - choice.child_impurity) / self.total_weight).max(0.0);
            let (left, right): (Vec<usize>, Vec<usize>) = samples
                .iter()
                .partition(|&&s| self.x[[s, choice.feature]] <= choice.threshold);
            let left_slot = nodes.len();
            nodes.push(Node::Leaf { counts: [0, 0] });
            let right_slot = nodes.len();
            nodes.push(Node::Leaf { counts: [0, 0] });
            nodes[slot] = Node::Split {
                feature: choice.feature,
                threshold: choice.threshold,
                left: left_slot,
                right: right_slot,
                impurity_decrease: decrease,
            };
            stack.push((right_slot, right));
            stack.push((left_slot, left));
        }
        DecisionTree { nodes }
    }
}

/// Grows a single tree on the given per-row multiplicities.
pub fn fit_tree(
    x: ArrayView2<f64>,
    labels: &[u8],
    weights: Vec<u32>,
    max_features: usize,
    rng: &mut impl RngCore,
) -> Result<DecisionTree> {
    if weights.len() != x.nrows() || labels.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: labels.len().min(weights.len()),
        });
    }
    if max_features == 0 || max_features > x.ncols() {
        return Err(Error::Validation(format!(
            "max_features = {max_features} must lie in 1..={}",
            x.ncols()
        )));
    }
    let total_weight = weights.iter().map(|&w| f64::from(w)).sum::<f64>();
    if total_weight == 0.0 {
        return Err(Error::Validation("tree needs at least one weighted row".into()));
    }
    let builder = TreeBuilder {
        x,
        labels,
        weights,
        max_features,
        total_weight,
    };
    Ok(builder.grow(rng))
}

pub fn fit_forest(x: ArrayView2<f64>, labels: &[u8], config: &ForestConfig) -> Result<ForestModel> {
    let (n, p) = x.dim();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    if n < 2 {
        return Err(Error::Validation(format!("forest needs at least 2 rows, got {n}")));
    }
    if p == 0 {
        return Err(Error::Validation("forest needs at least one feature".into()));
    }
    if config.n_estimators == 0 {
        return Err(Error::Validation("n_estimators must be at least 1".into()));
    }
    let max_features = config.max_features.unwrap_or_else(|| default_max_features(p));
    if max_features == 0 || max_features > p {
        return Err(Error::Validation(format!(
            "max_features = {max_features} must lie in 1..={p}"
        )));
    }

    let trees = (0..config.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(config.seed, t as u64 + 1);
            let weights = if config.bootstrap {
                let mut w = vec![0u32; n];
                for _ in 0..n {
                    w[rng::below(&mut rng, n)] += 1;
                }
                w
            } else {
                vec![1u32; n]
            };
            fit_tree(x, labels, weights, max_features, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ForestModel {
        trees,
        n_estimators: config.n_estimators,
        max_features,
        n_features: p,
        seed: config.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub entries: Vec<(String, f64)>,
}

impl ImportanceRanking {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,importance\n");
        for (name, value) in &self.entries {
            let name = if name.contains([',', '"', '\n']) {
                format!("\"{}\"", name.replace('"', "\"\""))
            } else {
                name.clone()
            };
            out.push_str(&format!("{name},{value}\n"));
        }
        out
    }
}

impl ForestModel {
    /// Mean of the trees' normalized leaf histograms, summed in tree order.
    pub fn predict_proba(&self, x: ArrayView1<f64>) -> [f64; 2] {
        let sum: f64 = self.trees.iter().map(|t| t.predict_proba(x)[1]).sum();
        let p1 = sum / self.trees.len() as f64;
        [1.0 - p1, p1]
    }

    pub fn predict_proba_batch(&self, x: ArrayView2<f64>) -> Vec<[f64; 2]> {
        x.axis_iter(Axis(0))
            .into_par_iter()
            .map(|row| self.predict_proba(row))
            .collect()
    }

    /// Mean decrease in impurity per feature, normalized to sum to 1.
    /// All zeros when no tree has a split.
    pub fn importances(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.n_features];
        for tree in &self.trees {
            for node in &tree.nodes {
                if let Node::Split {
                    feature,
                    impurity_decrease,
                    ..
                } = *node
                {
                    total[feature] += impurity_decrease;
                }
            }
        }
        let trees = self.trees.len() as f64;
        total.iter_mut().for_each(|v| *v /= trees);
        let sum: f64 = total.iter().sum();
        if sum > 0.0 {
            total.iter_mut().for_each(|v| *v /= sum);
        }
        total
    }

    /// Importances paired with feature names, largest first (ties keep
    /// column order).
    pub fn feature_importances(&self, names: &[String]) -> Result<ImportanceRanking> {
        if names.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: names.len(),
            });
        }
        let mut entries: Vec<(String, f64)> = names.iter().cloned().zip(self.importances()).collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(ImportanceRanking { entries })
    }
}
