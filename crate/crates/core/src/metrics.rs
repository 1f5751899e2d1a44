//! Imitation loss and trajectory smoothness.

use serde::{Deserialize, Serialize};

use crate::autoregressor::LinearAutoregressor;
use crate::error::{Result, SimileError};
use crate::forest::{train_forest, ForestConfig};
use crate::trajectory::{State, Trajectory};

fn check_lengths(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<()> {
    if a.len() != b.len() {
        return Err(SimileError::Dimension {
            what: "sequence length",
            expected: b.len(),
            got: a.len(),
        });
    }
    if let Some((x, y)) = a.iter().zip(b).find(|(x, y)| x.len() != y.len()) {
        return Err(SimileError::Dimension {
            what: "action vector",
            expected: y.len(),
            got: x.len(),
        });
    }
    Ok(())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Mean squared distance `(1/T) Σ ‖a_t - a*_t‖²`.
pub fn imitation_loss(actions: &[Vec<f64>], expert: &[Vec<f64>]) -> Result<f64> {
    check_lengths(actions, expert)?;
    if actions.is_empty() {
        return Err(SimileError::Config(
            "imitation loss of an empty sequence".into(),
        ));
    }
    let total: f64 = actions.iter().zip(expert).map(|(a, e)| sq_dist(a, e)).sum();
    Ok(total / actions.len() as f64)
}

/// Mean Euclidean first-order difference `‖a_t - a_{t-1}‖` over `t = 2..T`.
pub fn smoothness(actions: &[Vec<f64>]) -> Result<f64> {
    if actions.len() < 2 {
        return Err(SimileError::Config(format!(
            "smoothness needs at least 2 steps, got {}",
            actions.len()
        )));
    }
    let total: f64 = actions.windows(2).map(|w| dist(&w[1], &w[0])).sum();
    Ok(total / (actions.len() - 1) as f64)
}

/// Mean distance between each expert action and the *previous* rolled-out
/// action, `‖a*_t - a_{t-1}‖` over `t = 2..T`. Large values mean the expert
/// labels ask for jumps away from where the policy actually was.
pub fn feedback_gap(actions: &[Vec<f64>], expert: &[Vec<f64>]) -> Result<f64> {
    check_lengths(actions, expert)?;
    if actions.len() < 2 {
        return Err(SimileError::Config(
            "feedback gap needs at least 2 steps".into(),
        ));
    }
    let total: f64 = (1..actions.len())
        .map(|t| dist(&expert[t], &actions[t - 1]))
        .sum();
    Ok(total / (actions.len() - 1) as f64)
}

/// Smoothness of a roll-out next to reference quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub mean_first_order_diff: f64,
    /// The same metric on the expert actions.
    pub expert_reference: f64,
    /// Imitation loss of a regressor that sees contexts only.
    pub naive_error: f64,
    pub gap: f64,
}

/// Builds a [`SmoothnessReport`] for `actions` rolled out along `traj`.
///
/// The context-only baseline is a forest with `λ = 0` trained on expert
/// states whose action window is zeroed out, evaluated on the same states.
pub fn smoothness_report(
    actions: &[Vec<f64>],
    traj: &Trajectory,
    p: usize,
    forest: &ForestConfig,
) -> Result<SmoothnessReport> {
    let expert = traj.actions();
    let k = traj.action_dim();
    let zero_window = vec![0.0; k];
    let states: Vec<State> = traj
        .expert_states(p, 1)
        .iter()
        .map(|s| s.with_action_window(&zero_window))
        .collect();
    let h = LinearAutoregressor::identity(k);
    let naive = train_forest(&states, expert, &h, 0.0, forest, traj.action_bound())?;
    let predictions = states
        .iter()
        .map(|s| naive.predict(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SmoothnessReport {
        mean_first_order_diff: smoothness(actions)?,
        expert_reference: smoothness(expert)?,
        naive_error: imitation_loss(&predictions, expert)?,
        gap: feedback_gap(actions, expert)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn imitation_loss_examples() {
        let a = seq(&[0.3, 0.7]);
        assert_eq!(imitation_loss(&a, &a).unwrap(), 0.0);
        assert_eq!(
            imitation_loss(&seq(&[0.0, 0.0]), &seq(&[1.0, 1.0])).unwrap(),
            1.0
        );
    }

    #[test]
    fn imitation_loss_is_quadratic_in_scale() {
        let a = seq(&[0.1, 0.4, 0.2]);
        let b = seq(&[0.3, 0.1, 0.5]);
        let c = 3.0;
        let scale = |s: &[Vec<f64>]| s.iter().map(|v| vec![v[0] * c]).collect::<Vec<_>>();
        let base = imitation_loss(&a, &b).unwrap();
        let scaled = imitation_loss(&scale(&a), &scale(&b)).unwrap();
        assert!((scaled - c * c * base).abs() < 1e-12);
    }

    #[test]
    fn imitation_loss_rejects_length_mismatch() {
        assert!(imitation_loss(&seq(&[0.0]), &seq(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn smoothness_examples() {
        assert_eq!(smoothness(&seq(&[0.4; 5])).unwrap(), 0.0);
        assert_eq!(smoothness(&seq(&[0.0, 1.0, 0.0, 1.0])).unwrap(), 1.0);
        assert!(smoothness(&seq(&[0.0])).is_err());
    }

    #[test]
    fn smoothness_is_translation_invariant() {
        let a = seq(&[0.1, 0.5, 0.25, 0.75]);
        let shifted: Vec<Vec<f64>> = a.iter().map(|v| vec![v[0] + 2.0]).collect();
        let d = smoothness(&a).unwrap() - smoothness(&shifted).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn smoothness_uses_euclidean_norm() {
        let a = vec![vec![0.0, 0.0], vec![3.0, 4.0]];
        assert_eq!(smoothness(&a).unwrap(), 5.0);
    }

    #[test]
    fn gap_compares_expert_with_previous_action() {
        let rolled = seq(&[0.5, 0.5, 0.5]);
        let expert = seq(&[0.0, 1.0, 0.0]);
        assert_eq!(feedback_gap(&rolled, &expert).unwrap(), 0.5);
    }
}
