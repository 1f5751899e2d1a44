//! Leaf objectives and a derivative-free 1-d minimizer.

/// `Σ ((a + λh)/(1 + λ) - â)²`.
pub fn distance_objective(a: f64, lambda: f64, targets: &[f64], h: &[f64]) -> f64 {
    targets
        .iter()
        .zip(h)
        .map(|(t, hv)| {
            let pred = (a + lambda * hv) / (1.0 + lambda);
            (pred - t).powi(2)
        })
        .sum()
}

/// `Σ (ã - â)² + λ (ã - h)²` with `ã = (a + λh)/(1 + λ)`.
pub fn joint_objective(a: f64, lambda: f64, targets: &[f64], h: &[f64]) -> f64 {
    targets
        .iter()
        .zip(h)
        .map(|(t, hv)| {
            let pred = (a + lambda * hv) / (1.0 + lambda);
            (pred - t).powi(2) + lambda * (pred - hv).powi(2)
        })
        .sum()
}

/// Minimizes `f` on `[lo, hi]`: a dense grid locates the basin, then
/// golden-section search refines it.
pub fn minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize) -> f64 {
    assert!(grid >= 3 && hi > lo);
    let step = (hi - lo) / (grid - 1) as f64;
    let best = (0..grid)
        .map(|i| (i, f(lo + step * i as f64)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap();
    let mut a = lo + step * best.saturating_sub(1) as f64;
    let mut b = (lo + step * (best + 1) as f64).min(hi);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Brute-force leaf value for one action coordinate.
pub fn brute_leaf(joint: bool, lambda: f64, targets: &[f64], h: &[f64]) -> f64 {
    let reach = targets.iter().chain(h).fold(0.0f64, |m, v| m.max(v.abs()));
    let radius = (1.0 + 2.0 * lambda) * reach + 1.0;
    let f = |a| {
        if joint {
            joint_objective(a, lambda, targets, h)
        } else {
            distance_objective(a, lambda, targets, h)
        }
    };
    minimize(f, -radius, radius, 4001)
}
