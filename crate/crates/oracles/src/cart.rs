//! Plain regression forest: bootstrap, per-node feature sampling, variance
//! splits, mean leaves. Random draws follow the same recipe as `simile`
//! (one ChaCha8 stream per tree) so the two can be compared tree by tree.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct CartConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub feature_fraction: f64,
    pub bootstrap: bool,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf(Vec<f64>),
}

impl Node {
    pub fn leaf(&self, x: &[f64]) -> &[f64] {
        match self {
            Node::Leaf(v) => v,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.leaf(x)
                } else {
                    right.leaf(x)
                }
            }
        }
    }
}

type Item<'a> = (&'a [f64], &'a [f64]);

fn mean(items: &[Item]) -> Vec<f64> {
    let k = items[0].1.len();
    let mut acc = vec![0.0; k];
    for (_, y) in items {
        for j in 0..k {
            acc[j] += y[j];
        }
    }
    acc.into_iter().map(|v| v / items.len() as f64).collect()
}

fn sse(items: &[Item]) -> f64 {
    let m = mean(items);
    let mut total = 0.0;
    for (_, y) in items {
        for (j, mj) in m.iter().enumerate() {
            let d = mj - y[j];
            total += d * d;
        }
    }
    total
}

fn middle(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

fn grow(
    items: &[Item],
    depth: usize,
    cfg: &CartConfig,
    per_node: usize,
    nf: usize,
    rng: &mut ChaCha8Rng,
) -> Node {
    let min_leaf = cfg.min_samples_leaf.max(1);
    if depth >= cfg.max_depth || items.len() < 2 * cfg.min_samples_leaf {
        return Node::Leaf(mean(items));
    }
    let mut features: Vec<usize> = if per_node < nf {
        index::sample(rng, nf, per_node).into_vec()
    } else {
        (0..nf).collect()
    };
    features.sort_unstable();
    let n = items.len();
    let parent = sse(items);
    let mut best: Option<(usize, f64, f64)> = None;
    if n >= 2 * min_leaf {
        for &f in &features {
            let mut values: Vec<f64> = items.iter().map(|(x, _)| x[f]).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            for w in values.windows(2) {
                let t = middle(w[0], w[1]);
                let left: Vec<Item> = items.iter().copied().filter(|(x, _)| x[f] <= t).collect();
                let right: Vec<Item> = items.iter().copied().filter(|(x, _)| x[f] > t).collect();
                if left.len() < min_leaf || right.len() < min_leaf {
                    continue;
                }
                let r = parent
                    - (left.len() as f64 / n as f64) * sse(&left)
                    - (right.len() as f64 / n as f64) * sse(&right);
                if r > 0.0 && best.is_none_or(|b| r > b.2) {
                    best = Some((f, t, r));
                }
            }
        }
    }
    let Some((feature, threshold, _)) = best else {
        return Node::Leaf(mean(items));
    };
    let left: Vec<Item> = items
        .iter()
        .copied()
        .filter(|(x, _)| x[feature] <= threshold)
        .collect();
    let right: Vec<Item> = items
        .iter()
        .copied()
        .filter(|(x, _)| x[feature] > threshold)
        .collect();
    Node::Split {
        feature,
        threshold,
        left: Box::new(grow(&left, depth + 1, cfg, per_node, nf, rng)),
        right: Box::new(grow(&right, depth + 1, cfg, per_node, nf, rng)),
    }
}

/// Fits `cfg.n_trees` trees splitting on the first `n_features` coordinates.
pub fn fit_forest(
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    cfg: &CartConfig,
    n_features: usize,
) -> Vec<Node> {
    let n = x.len();
    (0..cfg.n_trees)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let items: Vec<Item> = if cfg.bootstrap {
                (0..n)
                    .map(|_| {
                        let j = rng.random_range(0..n);
                        (x[j].as_slice(), y[j].as_slice())
                    })
                    .collect()
            } else {
                x.iter()
                    .zip(y)
                    .map(|(a, b)| (a.as_slice(), b.as_slice()))
                    .collect()
            };
            let per_node =
                ((cfg.feature_fraction * n_features as f64).ceil() as usize).clamp(1, n_features);
            grow(&items, 0, cfg, per_node, n_features, &mut rng)
        })
        .collect()
}

/// Mean of the trees' leaf values.
pub fn predict(trees: &[Node], x: &[f64]) -> Vec<f64> {
    let k = trees[0].leaf(x).len();
    let mut acc = vec![0.0; k];
    for t in trees {
        for (j, v) in t.leaf(x).iter().enumerate() {
            acc[j] += v;
        }
    }
    acc.into_iter().map(|v| v / trees.len() as f64).collect()
}
