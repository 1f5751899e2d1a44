//! Exhaustive split search over every feature and every midpoint.

/// One node sample: state, target and regularizer value.
#[derive(Debug, Clone)]
pub struct Row {
    pub state: Vec<f64>,
    pub target: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSplit {
    pub feature: usize,
    pub threshold: f64,
    pub reduction: f64,
}

/// Closed-form leaf per coordinate, summed in row order.
pub fn leaf(rows: &[&Row], lambda: f64, joint: bool) -> Vec<f64> {
    let k = rows[0].target.len();
    let mut acc = vec![0.0; k];
    for r in rows {
        for j in 0..k {
            acc[j] += if joint {
                r.target[j]
            } else {
                (1.0 + lambda) * r.target[j] - lambda * r.h[j]
            };
        }
    }
    acc.into_iter().map(|v| v / rows.len() as f64).collect()
}

pub fn impurity(rows: &[&Row], lambda: f64, joint: bool) -> f64 {
    let value = leaf(rows, lambda, joint);
    let mut total = 0.0;
    for r in rows {
        for (j, a) in value.iter().enumerate() {
            let d = a - r.target[j];
            let e = a - r.h[j];
            total += d * d + lambda * e * e;
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

/// Best strictly positive reduction; ties keep the first found, scanning
/// features and thresholds in increasing order.
pub fn exhaustive_split(
    rows: &[&Row],
    lambda: f64,
    joint: bool,
    features: &[usize],
    min_leaf: usize,
) -> Option<OracleSplit> {
    let min_leaf = min_leaf.max(1);
    let n = rows.len();
    if n < 2 * min_leaf {
        return None;
    }
    let parent = impurity(rows, lambda, joint);
    let mut feats = features.to_vec();
    feats.sort_unstable();
    feats.dedup();
    let mut best: Option<OracleSplit> = None;
    for f in feats {
        let mut values: Vec<f64> = rows.iter().map(|r| r.state[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let threshold = middle(w[0], w[1]);
            let left: Vec<&Row> = rows
                .iter()
                .copied()
                .filter(|r| r.state[f] <= threshold)
                .collect();
            let right: Vec<&Row> = rows
                .iter()
                .copied()
                .filter(|r| r.state[f] > threshold)
                .collect();
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            let reduction = parent
                - (left.len() as f64 / n as f64) * impurity(&left, lambda, joint)
                - (right.len() as f64 / n as f64) * impurity(&right, lambda, joint);
            if reduction > 0.0 && best.is_none_or(|b| reduction > b.reduction) {
                best = Some(OracleSplit {
                    feature: f,
                    threshold,
                    reduction,
                });
            }
        }
    }
    best
}
