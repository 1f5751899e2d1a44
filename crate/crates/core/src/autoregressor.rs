//! Linear autoregressive smoothness regularizer `h(a_{t-1..t-tau}) = sum_i c_i a_{t-i}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimileError};

/// Per-dimension autoregressive coefficients: `coeffs[j][i]` multiplies
/// `a_{t-1-i}` in action coordinate `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearAutoregressor {
    coeffs: Vec<Vec<f64>>,
    tau: usize,
    ridge: f64,
}

impl LinearAutoregressor {
    pub fn new(coeffs: Vec<Vec<f64>>, ridge: f64) -> Result<Self> {
        let tau = coeffs.first().map_or(0, Vec::len);
        if coeffs.is_empty() || tau == 0 {
            return Err(SimileError::Config(
                "autoregressor needs at least one dimension and tau >= 1".into(),
            ));
        }
        if let Some(row) = coeffs.iter().find(|r| r.len() != tau) {
            return Err(SimileError::Dimension {
                what: "autoregressor coefficient row",
                expected: tau,
                got: row.len(),
            });
        }
        if coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(SimileError::NonFinite("autoregressor coefficient".into()));
        }
        if !(ridge >= 0.0) {
            return Err(SimileError::Config(format!(
                "ridge must be >= 0, got {ridge}"
            )));
        }
        Ok(LinearAutoregressor { coeffs, tau, ridge })
    }

    /// `h(a) = a`, the regularizer of the simplest smooth policy class.
    pub fn identity(action_dim: usize) -> Self {
        LinearAutoregressor {
            coeffs: vec![vec![1.0]; action_dim],
            tau: 1,
            ridge: 0.0,
        }
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn action_dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// `sum_i c_i a_{t-i}` given exactly `tau` past actions, newest first.
    pub fn predict(&self, recent: &[Vec<f64>]) -> Result<Vec<f64>> {
        if recent.len() != self.tau {
            return Err(SimileError::Dimension {
                what: "autoregressor history length",
                expected: self.tau,
                got: recent.len(),
            });
        }
        if let Some(a) = recent.iter().find(|a| a.len() != self.action_dim()) {
            return Err(SimileError::Dimension {
                what: "autoregressor history action",
                expected: self.action_dim(),
                got: a.len(),
            });
        }
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c.iter().zip(recent).map(|(ci, a)| ci * a[j]).sum())
            .collect())
    }

    /// Same as [`predict`](Self::predict) on a flattened action window
    /// `[a_{t-1}, a_{t-2}, ...]`; entries beyond the first `tau` actions are
    /// ignored.
    pub fn predict_window(&self, window: &[f64]) -> Result<Vec<f64>> {
        let k = self.action_dim();
        if window.len() < self.tau * k {
            return Err(SimileError::Dimension {
                what: "action window for autoregressor",
                expected: self.tau * k,
                got: window.len(),
            });
        }
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                c.iter()
                    .enumerate()
                    .map(|(i, ci)| ci * window[i * k + j])
                    .sum()
            })
            .collect())
    }
}

/// Default ridge weight for a fit over `rows` time steps.
pub fn default_ridge(rows: usize) -> f64 {
    1e-3 * rows as f64
}

/// Ridge-regularized least-squares fit of the autoregressor on one sequence.
/// Warm-up steps `t <= tau` only serve as history.
pub fn fit_autoregressor(
    actions: &[Vec<f64>],
    tau: usize,
    ridge: f64,
) -> Result<LinearAutoregressor> {
    fit_autoregressor_segments(&[actions], tau, ridge)
}

/// Fit over several independent sequences; no regression row spans two
/// segments.
pub fn fit_autoregressor_segments(
    segments: &[&[Vec<f64>]],
    tau: usize,
    ridge: f64,
) -> Result<LinearAutoregressor> {
    if tau == 0 {
        return Err(SimileError::Config("tau must be >= 1".into()));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(SimileError::Config(format!(
            "ridge must be >= 0, got {ridge}"
        )));
    }
    let k = segments
        .iter()
        .find_map(|s| s.first().map(Vec::len))
        .ok_or_else(|| SimileError::Config("no actions to fit".into()))?;
    let rows: usize = segments.iter().map(|s| s.len().saturating_sub(tau)).sum();
    if rows == 0 {
        return Err(SimileError::Config(format!(
            "sequence length must exceed tau = {tau}"
        )));
    }
    for a in segments.iter().flat_map(|s| s.iter()) {
        if a.len() != k {
            return Err(SimileError::Dimension {
                what: "action vector",
                expected: k,
                got: a.len(),
            });
        }
    }

    let extra = if ridge > 0.0 { tau } else { 0 };
    let mut coeffs = Vec::with_capacity(k);
    for j in 0..k {
        // Augmented system [X; sqrt(ridge) I] c = [y; 0], solved by QR.
        let mut design = DMatrix::<f64>::zeros(rows + extra, tau);
        let mut target = DVector::<f64>::zeros(rows + extra);
        let mut r = 0;
        for seg in segments {
            for t in tau..seg.len() {
                for i in 0..tau {
                    design[(r, i)] = seg[t - 1 - i][j];
                }
                target[r] = seg[t][j];
                r += 1;
            }
        }
        let root = ridge.sqrt();
        for i in 0..extra {
            design[(rows + i, i)] = root;
        }
        if rows + extra < tau {
            return Err(SimileError::Singular(format!(
                "{} equations for {tau} unknowns",
                rows + extra
            )));
        }
        let qr = design.qr();
        let upper = qr.r();
        let rhs = qr.q().transpose() * target;
        let largest = upper.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = upper.diagonal().iter().any(|v| v.abs() <= 1e-12 * largest);
        if largest == 0.0 || tiny {
            return Err(SimileError::Singular(format!(
                "rank-deficient history matrix in action dimension {j}"
            )));
        }
        let sol = upper
            .solve_upper_triangular(&rhs)
            .ok_or_else(|| SimileError::Singular(format!("action dimension {j}")))?;
        if sol.iter().any(|c| !c.is_finite()) {
            return Err(SimileError::NonFinite("autoregressor fit".into()));
        }
        coeffs.push(sol.iter().copied().collect());
    }
    LinearAutoregressor::new(coeffs, ridge)
}
