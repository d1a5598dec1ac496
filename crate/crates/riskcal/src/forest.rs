//! From-scratch random-forest binary classifier.
//!
//! Trees are grown on bootstrap samples with Gini-impurity splits over a
//! uniformly sampled feature subset per split; candidate thresholds sit at
//! midpoints of consecutive sorted distinct values. Leaves store the training
//! positive fraction rather than a majority vote, so [`Forest::predict_proba`]
//! is smooth enough to drive risk-coverage curves.
//!
//! Every tree is seeded from `(seed, tree_index)`, which makes training
//! deterministic regardless of how many threads build trees, and means
//! growing `n_trees` never changes trees already built.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::features::FeatureVector;
use crate::scalar::{cast, Scalar};
use crate::util::derive_seed;
use crate::Result;

/// On-disk format version of serialized forests.
pub const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Minimum training samples per leaf.
    pub min_leaf: usize,
    /// Features considered per split; `None` means `ceil(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, max_depth: 12, min_leaf: 2, features_per_split: None, seed: 0 }
    }
}

impl ForestParams {
    fn validate(&self, dimension: usize) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 || self.min_leaf == 0 {
            return Err(Error::InvalidParams(
                "n_trees, max_depth, and min_leaf must all be positive".into(),
            ));
        }
        if let Some(fps) = self.features_per_split {
            if fps == 0 || fps > dimension {
                return Err(Error::InvalidParams(format!(
                    "features_per_split {fps} must be in 1..={dimension}"
                )));
            }
        }
        Ok(())
    }

    fn resolved_features_per_split(&self, dimension: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (dimension as f64).sqrt().ceil() as usize)
            .min(dimension)
            .max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node<S: Scalar> {
    Split { feature: usize, threshold: S, left: u32, right: u32 },
    Leaf { positive_fraction: S },
}

/// One decision tree; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<S: Scalar> {
    pub nodes: Vec<Node<S>>,
}

impl<S: Scalar> Tree<S> {
    fn leaf_fraction(&self, x: &[S]) -> S {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { positive_fraction } => return *positive_fraction,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left as usize } else { *right as usize };
                }
            }
        }
    }

    /// Root split threshold, if the root is a split node.
    pub fn root_split(&self) -> Option<(usize, S)> {
        match self.nodes.first() {
            Some(Node::Split { feature, threshold, .. }) => Some((*feature, *threshold)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest<S: Scalar> {
    pub format_version: u32,
    pub feature_dimension: usize,
    pub params: ForestParams,
    pub trees: Vec<Tree<S>>,
}

/// Fits a forest on labeled feature vectors. Labels must be 0/1 with both
/// classes present; a single-class fit would yield a degenerate rule and is
/// rejected.
pub fn fit<S: Scalar>(x: &[FeatureVector<S>], y: &[u8], params: &ForestParams) -> Result<Forest<S>> {
    if x.len() != y.len() {
        return Err(Error::InvalidParams(format!(
            "{} feature vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidParams("need at least 2 training rows".into()));
    }
    let dimension = x[0].dimension();
    if dimension == 0 {
        return Err(Error::InvalidParams("feature vectors are empty".into()));
    }
    for fv in x {
        if fv.dimension() != dimension {
            return Err(Error::DimensionMismatch { expected: dimension, got: fv.dimension() });
        }
        if fv.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite feature value".into()));
        }
    }
    if y.iter().any(|&l| l > 1) {
        return Err(Error::InvalidParams("labels must be 0 or 1".into()));
    }
    if y.iter().all(|&l| l == 0) || y.iter().all(|&l| l == 1) {
        return Err(Error::SingleClassLabels);
    }
    params.validate(dimension)?;

    let rows: Vec<&[S]> = x.iter().map(|fv| fv.values.as_slice()).collect();
    let features_per_split = params.resolved_features_per_split(dimension);
    let trees: Vec<Tree<S>> = (0..params.n_trees)
        .into_par_iter()
        .map(|index| {
            let mut builder = TreeBuilder {
                rows: &rows,
                labels: y,
                dimension,
                features_per_split,
                max_depth: params.max_depth,
                min_leaf: params.min_leaf,
                rng: ChaCha12Rng::seed_from_u64(derive_seed(params.seed, index as u64)),
                nodes: Vec::new(),
            };
            builder.grow();
            Tree { nodes: builder.nodes }
        })
        .collect();

    Ok(Forest {
        format_version: FOREST_FORMAT_VERSION,
        feature_dimension: dimension,
        params: params.clone(),
        trees,
    })
}

impl<S: Scalar> Forest<S> {
    /// Mean positive fraction of the reached leaves, always in `[0, 1]`.
    ///
    /// Per-tree fractions are summed in sorted order, so the result is
    /// exactly invariant to the order of trees within the forest.
    pub fn predict_proba(&self, x: &FeatureVector<S>) -> Result<S> {
        self.predict_proba_values(&x.values)
    }

    pub fn predict_proba_values(&self, values: &[S]) -> Result<S> {
        if values.len() != self.feature_dimension {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dimension,
                got: values.len(),
            });
        }
        let mut fractions: Vec<S> = self.trees.iter().map(|t| t.leaf_fraction(values)).collect();
        fractions.sort_by(|a, b| a.partial_cmp(b).expect("leaf fractions are finite"));
        let sum = fractions.iter().fold(S::zero(), |a, &b| a + b);
        Ok(sum / cast::<S, _>(self.trees.len()))
    }

    /// Serializes to a self-describing, versioned payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("forest serializes")
    }

    /// Parses a payload produced by [`Forest::to_bytes`], refusing unknown
    /// format versions rather than guessing.
    pub fn from_bytes(bytes: &[u8]) -> Result<Forest<S>> {
        #[derive(Deserialize)]
        struct VersionProbe {
            format_version: u32,
        }
        let probe: VersionProbe = serde_json::from_slice(bytes)?;
        if probe.format_version != FOREST_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: probe.format_version,
                supported: FOREST_FORMAT_VERSION,
            });
        }
        let forest: Forest<S> = serde_json::from_slice(bytes)?;
        for tree in &forest.trees {
            for node in &tree.nodes {
                match node {
                    Node::Split { feature, left, right, .. } => {
                        if *feature >= forest.feature_dimension
                            || *left as usize >= tree.nodes.len()
                            || *right as usize >= tree.nodes.len()
                        {
                            return Err(Error::InvalidParams(
                                "forest payload references out-of-range nodes or features".into(),
                            ));
                        }
                    }
                    Node::Leaf { positive_fraction } => {
                        if *positive_fraction < S::zero() || *positive_fraction > S::one() {
                            return Err(Error::InvalidParams(
                                "forest payload has a leaf fraction outside [0, 1]".into(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(forest)
    }
}

struct TreeBuilder<'a, S: Scalar> {
    rows: &'a [&'a [S]],
    labels: &'a [u8],
    dimension: usize,
    features_per_split: usize,
    max_depth: usize,
    min_leaf: usize,
    rng: ChaCha12Rng,
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> TreeBuilder<'_, S> {
    fn grow(&mut self) {
        let n = self.rows.len();
        let sample: Vec<u32> = (0..n).map(|_| self.rng.gen_range(0..n) as u32).collect();
        self.build(sample, 0);
    }

    fn build(&mut self, sample: Vec<u32>, depth: usize) -> u32 {
        let total = sample.len();
        let positives = sample.iter().filter(|&&i| self.labels[i as usize] == 1).count();
        let pure = positives == 0 || positives == total;
        if pure || depth >= self.max_depth || total < 2 * self.min_leaf {
            return self.push_leaf(positives, total);
        }

        match self.best_split(&sample, positives) {
            None => self.push_leaf(positives, total),
            Some((feature, threshold)) => {
                let (left, right): (Vec<u32>, Vec<u32>) = sample
                    .into_iter()
                    .partition(|&i| self.rows[i as usize][feature] <= threshold);
                let at = self.nodes.len() as u32;
                // Placeholder, patched once both children exist.
                self.nodes.push(Node::Leaf { positive_fraction: S::zero() });
                let left_index = self.build(left, depth + 1);
                let right_index = self.build(right, depth + 1);
                self.nodes[at as usize] =
                    Node::Split { feature, threshold, left: left_index, right: right_index };
                at
            }
        }
    }

    fn push_leaf(&mut self, positives: usize, total: usize) -> u32 {
        let fraction = cast::<S, _>(positives) / cast::<S, _>(total);
        self.nodes.push(Node::Leaf { positive_fraction: fraction });
        (self.nodes.len() - 1) as u32
    }

    /// Best (feature, threshold) by weighted Gini over a sampled feature
    /// subset; `None` when no candidate improves on the parent impurity.
    /// Features are scanned in ascending index order and thresholds in
    /// ascending value order, with strict comparisons, so ties resolve
    /// deterministically.
    fn best_split(&mut self, sample: &[u32], positives: usize) -> Option<(usize, S)> {
        let total = sample.len();
        let parent = gini::<S>(positives, total);
        let mut feature_subset: Vec<usize> =
            rand::seq::index::sample(&mut self.rng, self.dimension, self.features_per_split)
                .into_vec();
        feature_subset.sort_unstable();

        let mut best: Option<(S, usize, S)> = None;
        let mut column: Vec<(S, u8)> = Vec::with_capacity(total);
        for feature in feature_subset {
            column.clear();
            column.extend(
                sample
                    .iter()
                    .map(|&i| (self.rows[i as usize][feature], self.labels[i as usize])),
            );
            column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("features are finite"));

            let mut left_n = 0usize;
            let mut left_pos = 0usize;
            for w in 0..total - 1 {
                left_n += 1;
                left_pos += column[w].1 as usize;
                let value = column[w].0;
                let next = column[w + 1].0;
                if value == next {
                    continue;
                }
                let right_n = total - left_n;
                if left_n < self.min_leaf || right_n < self.min_leaf {
                    continue;
                }
                let threshold = (value + next) / cast::<S, _>(2);
                // Low-precision scalars can round the midpoint onto an
                // endpoint; such a threshold cannot separate the two values.
                if !(threshold > value && threshold < next) {
                    continue;
                }
                let right_pos = positives - left_pos;
                let left_gini = gini::<S>(left_pos, left_n);
                let right_gini = gini::<S>(right_pos, right_n);
                let weighted = (cast::<S, _>(left_n) * left_gini
                    + cast::<S, _>(right_n) * right_gini)
                    / cast::<S, _>(total);
                if weighted < parent && best.map_or(true, |(b, _, _)| weighted < b) {
                    best = Some((weighted, feature, threshold));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }
}

fn gini<S: Scalar>(positives: usize, total: usize) -> S {
    let p = cast::<S, _>(positives) / cast::<S, _>(total);
    let q = S::one() - p;
    S::one() - p * p - q * q
}
