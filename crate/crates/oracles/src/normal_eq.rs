//! Autoregressive coefficients from the explicit normal equations.

/// Solves `(XᵀX + ridge·I) c = Xᵀy` per action coordinate, where row `t`
/// of `X` is `[a_{t-1}, .., a_{t-tau}]` and `y_t = a_t` for `t >= tau`.
pub fn fit(actions: &[Vec<f64>], tau: usize, ridge: f64) -> Vec<Vec<f64>> {
    let k = actions[0].len();
    (0..k)
        .map(|j| {
            let mut gram = vec![vec![0.0; tau]; tau];
            let mut rhs = vec![0.0; tau];
            for t in tau..actions.len() {
                let x: Vec<f64> = (0..tau).map(|i| actions[t - 1 - i][j]).collect();
                for r in 0..tau {
                    rhs[r] += x[r] * actions[t][j];
                    for c in 0..tau {
                        gram[r][c] += x[r] * x[c];
                    }
                }
            }
            for (i, row) in gram.iter_mut().enumerate() {
                row[i] += ridge;
            }
            gauss_solve(gram, rhs)
        })
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for c in col..n {
                m[row][c] -= factor * m[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|c| m[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    x
}

/// `Σ_t ‖a_t - Σ_i c_i a_{t-i}‖² + ridge ‖c‖²`.
pub fn objective(actions: &[Vec<f64>], coeffs: &[Vec<f64>], ridge: f64) -> f64 {
    let tau = coeffs[0].len();
    let mut total = 0.0;
    for (j, c) in coeffs.iter().enumerate() {
        for t in tau..actions.len() {
            let pred: f64 = (0..tau).map(|i| c[i] * actions[t - 1 - i][j]).sum();
            total += (actions[t][j] - pred).powi(2);
        }
        total += ridge * c.iter().map(|v| v * v).sum::<f64>();
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let x = gauss_solve(vec![vec![0.0, 2.0], vec![1.0, 1.0]], vec![4.0, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }
}
