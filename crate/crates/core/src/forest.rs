//! Smooth recurrent regression forests.
//!
//! Each tree partitions the full state (context window and past actions).
//! A leaf stores a value `ā`, and the tree's prediction blends it with the
//! autoregressor: `(ā + λ h(s)) / (1 + λ)`. Leaf values and split impurities
//! account for that blend, so training optimizes the joint imitation and
//! smoothness loss rather than plain squared error.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autoregressor::LinearAutoregressor;
use crate::error::{Result, SimileError};
use crate::trajectory::State;

const FOREST_FORMAT: &str = "simile-forest";
const FOREST_VERSION: u32 = 1;
const MAX_DEPTH_LIMIT: usize = 64;

/// Rule for setting a leaf's stored value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafMode {
    /// Leaf minimizes the squared distance of the *smoothed* prediction to
    /// the targets: `mean((1 + λ) â - λ h(s))`.
    #[default]
    DistanceOnly,
    /// Leaf minimizes distance plus `λ`-weighted smoothness loss of the
    /// smoothed prediction, which works out to `mean(â)`.
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Fraction of state coordinates considered at each node, in `(0, 1]`.
    pub feature_fraction: f64,
    pub bootstrap: bool,
    pub seed: u64,
    pub leaf_mode: LeafMode,
    /// When false, trees split on the context window only and the policy's
    /// dependence on past actions comes from the autoregressor alone.
    #[serde(default = "default_true")]
    pub split_on_actions: bool,
}

fn default_true() -> bool {
    true
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 10,
            max_depth: 6,
            min_samples_leaf: 5,
            feature_fraction: 1.0,
            bootstrap: true,
            seed: 0,
            leaf_mode: LeafMode::DistanceOnly,
            split_on_actions: true,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SimileError::Config(msg));
        if self.n_trees == 0 {
            return bad("n_trees must be >= 1".into());
        }
        if self.max_depth > MAX_DEPTH_LIMIT {
            return bad(format!("max_depth must be <= {MAX_DEPTH_LIMIT}"));
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be >= 1".into());
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return bad(format!(
                "feature_fraction must lie in (0, 1], got {}",
                self.feature_fraction
            ));
        }
        Ok(())
    }
}

/// One training example: state, feedback target `â`, and the autoregressor
/// value `h(s)` computed from the state's action window.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: Vec<f64>,
    pub target: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: Vec<f64>,
    },
}

impl TreeNode {
    /// Stored value of the leaf that `state` falls into. Samples with
    /// `state[feature] <= threshold` go left.
    pub fn leaf(&self, state: &[f64]) -> &[f64] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if state[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

/// Terminal value of a node. Errors on an empty node.
pub fn leaf_value(node: &[&Sample], lambda: f64, mode: LeafMode) -> Result<Vec<f64>> {
    let first = node.first().ok_or(SimileError::EmptyNode)?;
    let k = first.target.len();
    let mut acc = vec![0.0; k];
    for s in node {
        for j in 0..k {
            acc[j] += match mode {
                LeafMode::DistanceOnly => (1.0 + lambda) * s.target[j] - lambda * s.h[j],
                LeafMode::Joint => s.target[j],
            };
        }
    }
    let n = node.len() as f64;
    Ok(acc.into_iter().map(|v| v / n).collect())
}

/// `(ā + λ h) / (1 + λ)` per action coordinate.
pub fn smoothed_predict(leaf: &[f64], lambda: f64, h: &[f64]) -> Vec<f64> {
    leaf.iter()
        .zip(h)
        .map(|(a, hv)| (a + lambda * hv) / (1.0 + lambda))
        .collect()
}

/// Joint loss of the node at its leaf value: `sum (ā - â)² + λ (ā - h)²`,
/// summed over samples and action coordinates.
pub fn node_impurity(node: &[&Sample], lambda: f64, mode: LeafMode) -> Result<f64> {
    let leaf = leaf_value(node, lambda, mode)?;
    let mut total = 0.0;
    for s in node {
        for (j, a) in leaf.iter().enumerate() {
            let d = a - s.target[j];
            let r = a - s.h[j];
            total += d * d + lambda * r * r;
        }
    }
    Ok(total)
}

/// A chosen split and its impurity reduction
/// `I_node - |L|/|N| I_left - |R|/|N| I_right`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub reduction: f64,
}

/// Threshold strictly separating consecutive sorted values `lo < hi`.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Exact impurity reduction of splitting `node` at `state[feature] <= threshold`,
/// with both children kept in node order. `None` if a child would be empty.
pub fn split_reduction(
    node: &[&Sample],
    feature: usize,
    threshold: f64,
    lambda: f64,
    mode: LeafMode,
) -> Result<Option<f64>> {
    let (left, right): (Vec<&Sample>, Vec<&Sample>) =
        node.iter().partition(|s| s.state[feature] <= threshold);
    if left.is_empty() || right.is_empty() {
        return Ok(None);
    }
    let parent = node_impurity(node, lambda, mode)?;
    Ok(Some(weighted_reduction(
        parent,
        node.len(),
        node_impurity(&left, lambda, mode)?,
        left.len(),
        node_impurity(&right, lambda, mode)?,
        right.len(),
    )))
}

fn weighted_reduction(parent: f64, n: usize, left: f64, nl: usize, right: f64, nr: usize) -> f64 {
    let n = n as f64;
    parent - (nl as f64 / n) * left - (nr as f64 / n) * right
}

/// Running sufficient statistics of centered targets and h-values.
#[derive(Clone)]
struct Moments {
    count: usize,
    target: Vec<f64>,
    target_sq: Vec<f64>,
    h: Vec<f64>,
    h_sq: Vec<f64>,
}

impl Moments {
    fn new(k: usize) -> Self {
        Moments {
            count: 0,
            target: vec![0.0; k],
            target_sq: vec![0.0; k],
            h: vec![0.0; k],
            h_sq: vec![0.0; k],
        }
    }

    fn add(&mut self, target: &[f64], h: &[f64], sign: f64) {
        if sign > 0.0 {
            self.count += 1;
        } else {
            self.count -= 1;
        }
        for j in 0..target.len() {
            self.target[j] += sign * target[j];
            self.target_sq[j] += sign * target[j] * target[j];
            self.h[j] += sign * h[j];
            self.h_sq[j] += sign * h[j] * h[j];
        }
    }

    fn impurity(&self, lambda: f64, mode: LeafMode) -> f64 {
        let c = self.count as f64;
        (0..self.target.len())
            .map(|j| {
                let leaf = match mode {
                    LeafMode::DistanceOnly => {
                        ((1.0 + lambda) * self.target[j] - lambda * self.h[j]) / c
                    }
                    LeafMode::Joint => self.target[j] / c,
                };
                (1.0 + lambda) * c * leaf * leaf
                    - 2.0 * leaf * (self.target[j] + lambda * self.h[j])
                    + self.target_sq[j]
                    + lambda * self.h_sq[j]
            })
            .sum()
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    approx: f64,
}

/// Best split of `node` over `features` by impurity reduction.
///
/// Thresholds are midpoints between consecutive distinct values. Both children
/// must hold at least `min_samples_leaf` samples. Returns `None` unless some
/// split strictly reduces impurity. Ties go to the lowest feature index, then
/// the lowest threshold.
///
/// All candidates are first scored from prefix sums; those within rounding
/// distance of the best are then rescored exactly with [`node_impurity`], so
/// the result agrees with an exhaustive direct evaluation.
pub fn best_split(
    node: &[&Sample],
    lambda: f64,
    mode: LeafMode,
    features: &[usize],
    min_samples_leaf: usize,
) -> Result<Option<Split>> {
    let min_leaf = min_samples_leaf.max(1);
    let n = node.len();
    if n < 2 * min_leaf || features.is_empty() {
        return Ok(None);
    }
    let parent = node_impurity(node, lambda, mode)?;
    if parent <= 0.0 {
        return Ok(None);
    }
    let k = node[0].target.len();

    // Impurity is unchanged when targets and h shift together, so center
    // both on the target mean to keep the prefix sums well conditioned.
    let mut center = vec![0.0; k];
    for s in node {
        for j in 0..k {
            center[j] += s.target[j];
        }
    }
    center.iter_mut().for_each(|c| *c /= n as f64);
    let centered: Vec<(Vec<f64>, Vec<f64>)> = node
        .iter()
        .map(|s| {
            (
                s.target.iter().zip(&center).map(|(v, c)| v - c).collect(),
                s.h.iter().zip(&center).map(|(v, c)| v - c).collect(),
            )
        })
        .collect();
    let mut total = Moments::new(k);
    for (t, h) in &centered {
        total.add(t, h, 1.0);
    }
    let scale: f64 = (0..k)
        .map(|j| total.target_sq[j] + lambda * total.h_sq[j])
        .sum();
    let approx_parent = total.impurity(lambda, mode);

    let mut sorted_features = features.to_vec();
    sorted_features.sort_unstable();
    sorted_features.dedup();

    let mut candidates = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    for &f in &sorted_features {
        order.sort_by(|&a, &b| node[a].state[f].total_cmp(&node[b].state[f]));
        let mut left = Moments::new(k);
        let mut right = total.clone();
        for pos in 0..n - 1 {
            let idx = order[pos];
            left.add(&centered[idx].0, &centered[idx].1, 1.0);
            right.add(&centered[idx].0, &centered[idx].1, -1.0);
            let lo = node[idx].state[f];
            let hi = node[order[pos + 1]].state[f];
            if !(lo < hi) || left.count < min_leaf || right.count < min_leaf {
                continue;
            }
            let approx = weighted_reduction(
                approx_parent,
                n,
                left.impurity(lambda, mode),
                left.count,
                right.impurity(lambda, mode),
                right.count,
            );
            candidates.push(Candidate {
                feature: f,
                threshold: midpoint(lo, hi),
                approx,
            });
        }
    }

    let Some(top) = candidates.iter().map(|c| c.approx).reduce(f64::max) else {
        return Ok(None);
    };
    let slack = 1e-9 * (1.0 + lambda) * (1.0 + lambda) * scale + f64::MIN_POSITIVE;
    if top < -slack {
        return Ok(None);
    }

    let mut best: Option<Split> = None;
    for c in candidates.iter().filter(|c| c.approx >= top - slack) {
        let Some(reduction) = split_reduction(node, c.feature, c.threshold, lambda, mode)? else {
            continue;
        };
        if reduction > 0.0 && best.is_none_or(|b| reduction > b.reduction) {
            best = Some(Split {
                feature: c.feature,
                threshold: c.threshold,
                reduction,
            });
        }
    }
    Ok(best)
}

/// A trained ensemble of smooth regression trees together with the
/// autoregressor it was trained against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothForest {
    trees: Vec<TreeNode>,
    lambda: f64,
    autoregressor: LinearAutoregressor,
    config: ForestConfig,
    state_dim: usize,
    context_len: usize,
    action_dim: usize,
    action_bound: f64,
}

#[derive(Serialize, Deserialize)]
struct ForestDocument {
    format: String,
    version: u32,
    forest: SmoothForest,
}

/// Trains `cfg.n_trees` trees on `(states, targets)`, regularized toward `h`.
///
/// `h(s)` is evaluated once per sample from the recorded action window. Trees
/// are grown independently (in parallel) from per-tree random streams, so the
/// result depends only on the inputs and `cfg.seed`.
pub fn train_forest(
    states: &[State],
    targets: &[Vec<f64>],
    h: &LinearAutoregressor,
    lambda: f64,
    cfg: &ForestConfig,
    action_bound: f64,
) -> Result<SmoothForest> {
    cfg.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(SimileError::Config(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    if !(action_bound > 0.0 && action_bound.is_finite()) {
        return Err(SimileError::Config(format!(
            "action bound must be > 0, got {action_bound}"
        )));
    }
    if states.len() != targets.len() {
        return Err(SimileError::Dimension {
            what: "targets (one per state)",
            expected: states.len(),
            got: targets.len(),
        });
    }
    if states.len() < cfg.min_samples_leaf {
        return Err(SimileError::Config(format!(
            "{} samples is fewer than min_samples_leaf = {}",
            states.len(),
            cfg.min_samples_leaf
        )));
    }
    let k = h.action_dim();
    let state_dim = states[0].dim();
    let context_len = states[0].context_window().len();
    let mut samples = Vec::with_capacity(states.len());
    for (s, t) in states.iter().zip(targets) {
        if s.dim() != state_dim || s.context_window().len() != context_len {
            return Err(SimileError::Dimension {
                what: "state",
                expected: state_dim,
                got: s.dim(),
            });
        }
        if t.len() != k {
            return Err(SimileError::Dimension {
                what: "target",
                expected: k,
                got: t.len(),
            });
        }
        samples.push(Sample {
            state: s.values().to_vec(),
            target: t.clone(),
            h: h.predict_window(s.action_window())?,
        });
    }

    let splittable = if cfg.split_on_actions {
        state_dim
    } else {
        context_len
    };
    if splittable == 0 {
        return Err(SimileError::Config(
            "no state coordinates to split on".into(),
        ));
    }
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|i| grow_tree(&samples, lambda, cfg, i as u64, splittable))
        .collect::<Result<Vec<_>>>()?;

    Ok(SmoothForest {
        trees,
        lambda,
        autoregressor: h.clone(),
        config: cfg.clone(),
        state_dim,
        context_len,
        action_dim: k,
        action_bound,
    })
}

fn grow_tree(
    samples: &[Sample],
    lambda: f64,
    cfg: &ForestConfig,
    stream: u64,
    n_features: usize,
) -> Result<TreeNode> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let n = samples.len();
    let node: Vec<&Sample> = if cfg.bootstrap {
        (0..n).map(|_| &samples[rng.random_range(0..n)]).collect()
    } else {
        samples.iter().collect()
    };
    let per_node =
        ((cfg.feature_fraction * n_features as f64).ceil() as usize).clamp(1, n_features);
    grow_node(&node, 0, lambda, cfg, (per_node, n_features), &mut rng)
}

fn grow_node(
    node: &[&Sample],
    depth: usize,
    lambda: f64,
    cfg: &ForestConfig,
    (per_node, n_features): (usize, usize),
    rng: &mut ChaCha8Rng,
) -> Result<TreeNode> {
    let leaf = || -> Result<TreeNode> {
        Ok(TreeNode::Leaf {
            value: leaf_value(node, lambda, cfg.leaf_mode)?,
        })
    };
    if depth >= cfg.max_depth || node.len() < 2 * cfg.min_samples_leaf {
        return leaf();
    }
    let features: Vec<usize> = if per_node < n_features {
        index::sample(rng, n_features, per_node).into_vec()
    } else {
        (0..n_features).collect()
    };
    let Some(split) = best_split(node, lambda, cfg.leaf_mode, &features, cfg.min_samples_leaf)?
    else {
        return leaf();
    };
    let (left, right): (Vec<&Sample>, Vec<&Sample>) = node
        .iter()
        .partition(|s| s.state[split.feature] <= split.threshold);
    if left.is_empty() || right.is_empty() {
        return Err(SimileError::EmptyNode);
    }
    Ok(TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow_node(
            &left,
            depth + 1,
            lambda,
            cfg,
            (per_node, n_features),
            rng,
        )?),
        right: Box::new(grow_node(
            &right,
            depth + 1,
            lambda,
            cfg,
            (per_node, n_features),
            rng,
        )?),
    })
}

impl SmoothForest {
    /// Mean over trees of the smoothed leaf prediction, clamped to `[0, R]`.
    pub fn predict(&self, state: &State) -> Result<Vec<f64>> {
        let mut out = self.predict_unclamped(state)?;
        for v in &mut out {
            *v = v.clamp(0.0, self.action_bound);
        }
        Ok(out)
    }

    /// Prediction before clamping into the action box.
    pub fn predict_unclamped(&self, state: &State) -> Result<Vec<f64>> {
        if state.dim() != self.state_dim || state.context_window().len() != self.context_len {
            return Err(SimileError::Dimension {
                what: "state for forest prediction",
                expected: self.state_dim,
                got: state.dim(),
            });
        }
        let h = self.autoregressor.predict_window(state.action_window())?;
        let mut acc = vec![0.0; self.action_dim];
        for tree in &self.trees {
            let leaf = tree.leaf(state.values());
            for j in 0..self.action_dim {
                acc[j] += (leaf[j] + self.lambda * h[j]) / (1.0 + self.lambda);
            }
        }
        let n = self.trees.len() as f64;
        Ok(acc.into_iter().map(|v| v / n).collect())
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn autoregressor(&self) -> &LinearAutoregressor {
        &self.autoregressor
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn leaf_mode(&self) -> LeafMode {
        self.config.leaf_mode
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn action_bound(&self) -> f64 {
        self.action_bound
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ForestDocument {
            format: FOREST_FORMAT.into(),
            version: FOREST_VERSION,
            forest: self.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ForestDocument = serde_json::from_str(text)?;
        if doc.format != FOREST_FORMAT || doc.version != FOREST_VERSION {
            return Err(SimileError::Format(format!(
                "expected {FOREST_FORMAT} v{FOREST_VERSION}, found {} v{}",
                doc.format, doc.version
            )));
        }
        Ok(doc.forest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(state: &[f64], target: f64, h: f64) -> Sample {
        Sample {
            state: state.to_vec(),
            target: vec![target],
            h: vec![h],
        }
    }

    fn refs(v: &[Sample]) -> Vec<&Sample> {
        v.iter().collect()
    }

    #[test]
    fn leaf_value_without_smoothing_is_mean() {
        let node = [sample(&[0.0], 2.0, 9.0), sample(&[0.0], 4.0, -3.0)];
        for mode in [LeafMode::DistanceOnly, LeafMode::Joint] {
            assert_eq!(leaf_value(&refs(&node), 0.0, mode).unwrap(), vec![3.0]);
        }
    }

    #[test]
    fn leaf_value_distance_only_compensates_for_h() {
        let node = [sample(&[0.0], 2.0, 1.0)];
        assert_eq!(
            leaf_value(&refs(&node), 1.0, LeafMode::DistanceOnly).unwrap(),
            vec![3.0]
        );
    }

    #[test]
    fn leaf_value_joint_ignores_lambda() {
        let node = [sample(&[0.0], 1.0, 5.0), sample(&[0.0], 3.0, 0.0)];
        assert_eq!(
            leaf_value(&refs(&node), 7.0, LeafMode::Joint).unwrap(),
            vec![2.0]
        );
    }

    #[test]
    fn empty_node_is_an_error() {
        assert!(matches!(
            leaf_value(&[], 1.0, LeafMode::Joint),
            Err(SimileError::EmptyNode)
        ));
        assert!(node_impurity(&[], 1.0, LeafMode::Joint).is_err());
    }

    #[test]
    fn smoothed_predict_examples() {
        assert_eq!(smoothed_predict(&[0.4], 0.0, &[0.9]), vec![0.4]);
        assert_eq!(smoothed_predict(&[3.0], 1.0, &[1.0]), vec![2.0]);
        for lambda in [0.0, 0.3, 2.0, 100.0] {
            assert_eq!(smoothed_predict(&[0.25], lambda, &[0.25]), vec![0.25]);
        }
    }

    #[test]
    fn impurity_examples() {
        let one = [sample(&[0.0], 0.7, 0.1)];
        assert_eq!(
            node_impurity(&refs(&one), 0.0, LeafMode::Joint).unwrap(),
            0.0
        );

        let one = [sample(&[0.0], 2.0, 0.0)];
        assert_eq!(
            node_impurity(&refs(&one), 1.0, LeafMode::Joint).unwrap(),
            4.0
        );

        let fixed = [sample(&[0.0], 0.5, 0.5), sample(&[1.0], 0.5, 0.5)];
        for mode in [LeafMode::DistanceOnly, LeafMode::Joint] {
            for lambda in [0.0, 1.0, 3.0] {
                assert_eq!(node_impurity(&refs(&fixed), lambda, mode).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn separating_feature_is_found() {
        let node = [
            sample(&[5.0, 0.0], 10.0, 0.0),
            sample(&[1.0, 0.0], 0.0, 0.0),
            sample(&[2.0, 0.0], 0.0, 0.0),
            sample(&[6.0, 0.0], 10.0, 0.0),
        ];
        let split = best_split(&refs(&node), 0.0, LeafMode::DistanceOnly, &[0, 1], 1)
            .unwrap()
            .unwrap();
        assert_eq!(split.feature, 0);
        assert_eq!(split.threshold, 3.5);
        let total = node_impurity(&refs(&node), 0.0, LeafMode::DistanceOnly).unwrap();
        assert_eq!(split.reduction, total);
    }

    #[test]
    fn constant_node_has_no_split() {
        let node = [sample(&[1.0], 0.5, 0.5), sample(&[2.0], 0.5, 0.5)];
        assert!(best_split(&refs(&node), 1.0, LeafMode::Joint, &[0], 1)
            .unwrap()
            .is_none());
    }

    #[test]
    fn duplicate_feature_values_give_no_threshold() {
        let node = [sample(&[1.0, 0.0], 0.0, 0.0), sample(&[1.0, 1.0], 1.0, 0.0)];
        assert!(best_split(&refs(&node), 0.0, LeafMode::Joint, &[0], 1)
            .unwrap()
            .is_none());
        let s = best_split(&refs(&node), 0.0, LeafMode::Joint, &[0, 1], 1)
            .unwrap()
            .unwrap();
        assert_eq!(s.feature, 1);
    }

    #[test]
    fn min_leaf_blocks_small_children() {
        let node = [
            sample(&[0.0], 0.0, 0.0),
            sample(&[1.0], 1.0, 0.0),
            sample(&[2.0], 1.0, 0.0),
        ];
        let s = best_split(&refs(&node), 0.0, LeafMode::Joint, &[0], 2).unwrap();
        assert!(s.is_none());
    }

    #[test]
    fn midpoint_never_reaches_upper_value() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let m = midpoint(lo, hi);
        assert!(m >= lo && m < hi);
        assert_eq!(midpoint(1.0, 2.0), 1.5);
    }

    #[test]
    fn depth_zero_forest_is_one_leaf() {
        let states: Vec<State> = (0..6)
            .map(|i| State::from_parts(&[i as f64], &[0.5]))
            .collect();
        let targets: Vec<Vec<f64>> = (0..6).map(|i| vec![0.1 * i as f64]).collect();
        let cfg = ForestConfig {
            n_trees: 1,
            max_depth: 0,
            bootstrap: false,
            min_samples_leaf: 1,
            ..Default::default()
        };
        let h = LinearAutoregressor::identity(1);
        let forest = train_forest(&states, &targets, &h, 0.0, &cfg, 1.0).unwrap();
        assert_eq!(forest.trees()[0].n_leaves(), 1);
        let p = forest
            .predict(&State::from_parts(&[100.0], &[0.9]))
            .unwrap();
        assert!((p[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn prediction_is_clamped() {
        let states: Vec<State> = (0..4)
            .map(|i| State::from_parts(&[i as f64], &[0.0]))
            .collect();
        let targets = vec![vec![1.0]; 4];
        let cfg = ForestConfig {
            n_trees: 1,
            max_depth: 0,
            bootstrap: false,
            min_samples_leaf: 1,
            ..Default::default()
        };
        // h(s) = 0 on every training state pushes the stored leaf to 1 + λ = 3.
        let h = LinearAutoregressor::identity(1);
        let forest = train_forest(&states, &targets, &h, 2.0, &cfg, 1.0).unwrap();
        assert_eq!(forest.trees()[0].leaf(&[0.0, 0.0]), &[3.0]);
        let at_one = State::from_parts(&[0.0], &[1.0]);
        assert!((forest.predict_unclamped(&at_one).unwrap()[0] - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(forest.predict(&at_one).unwrap(), vec![1.0]);
        let at_zero = State::from_parts(&[0.0], &[0.0]);
        assert!((forest.predict(&at_zero).unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predict_rejects_wrong_dimension() {
        let states: Vec<State> = (0..4)
            .map(|i| State::from_parts(&[i as f64], &[0.5]))
            .collect();
        let targets = vec![vec![0.5]; 4];
        let cfg = ForestConfig {
            n_trees: 1,
            min_samples_leaf: 1,
            ..Default::default()
        };
        let forest = train_forest(
            &states,
            &targets,
            &LinearAutoregressor::identity(1),
            1.0,
            &cfg,
            1.0,
        )
        .unwrap();
        let bad = State::from_parts(&[0.0, 1.0], &[0.5]);
        assert!(matches!(
            forest.predict(&bad),
            Err(SimileError::Dimension { .. })
        ));
    }

    #[test]
    fn train_rejects_mismatched_targets() {
        let states = vec![State::from_parts(&[0.0], &[0.5]); 3];
        let targets = vec![vec![0.5]; 2];
        let err = train_forest(
            &states,
            &targets,
            &LinearAutoregressor::identity(1),
            1.0,
            &ForestConfig::default(),
            1.0,
        );
        assert!(matches!(err, Err(SimileError::Dimension { .. })));
    }

    #[test]
    fn json_rejects_foreign_documents() {
        let text = r#"{"format":"other","version":1,"forest":null}"#;
        assert!(SmoothForest::from_json(text).is_err());
    }
}
