//! Improvement bounds, optimal step size, and numeric checks of the
//! smoothness inequalities they rest on.
//!
//! Every constant here (`γ`, `ε`, `L`) is a finite-sample estimate, so the
//! checks report what they measured instead of panicking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimileError};
use crate::policy::Policy;
use crate::trajectory::State;

/// Smallest step size ever returned.
pub const BETA_MIN: f64 = 0.01;
/// Largest step size ever returned.
pub const BETA_MAX: f64 = 0.99;

/// Outcome of [`check_lemma1`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub pairs: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen; non-positive when the inequality holds.
    pub max_violation: f64,
    /// Sampled points where the function was negative.
    pub negative_values: usize,
    /// Set when `H <= 0`, where the inequality says nothing useful.
    pub degenerate: bool,
}

impl Lemma1Report {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.negative_values == 0 && !self.degenerate
    }
}

/// Evaluates `(φ(a) - φ(a'))² <= 6 H (φ(a) + φ(a')) |a - a'|²` on every pair.
///
/// A pair counts as a violation when the left side exceeds the right side by
/// more than `tol`.
pub fn check_lemma1<F: Fn(f64) -> f64>(
    phi: F,
    smoothness: f64,
    pairs: &[(f64, f64)],
    tol: f64,
) -> Lemma1Report {
    let mut report = Lemma1Report {
        pairs: pairs.len(),
        violations: 0,
        max_violation: f64::NEG_INFINITY,
        negative_values: 0,
        degenerate: !(smoothness > 0.0),
    };
    for &(a, b) in pairs {
        let (fa, fb) = (phi(a), phi(b));
        if fa < 0.0 || fb < 0.0 {
            report.negative_values += 1;
            continue;
        }
        let lhs = (fa - fb).powi(2);
        let rhs = 6.0 * smoothness * (fa + fb) * (a - b).powi(2);
        let gap = lhs - rhs;
        report.max_violation = report.max_violation.max(gap);
        if gap > tol {
            report.violations += 1;
        }
    }
    report
}

fn check_beta_open(beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(SimileError::Config(format!(
            "beta must lie in [0, 1), got {beta}"
        )));
    }
    Ok(())
}

/// `β γ ε L / ((1 - β)(1 - γ)) + β · reduction`, where `reduction` is the
/// loss of the new policy minus the loss of the current one, both on the
/// current policy's states.
pub fn theorem2_bound(
    beta: f64,
    gamma: f64,
    epsilon: f64,
    lipschitz: f64,
    reduction: f64,
) -> Result<f64> {
    check_beta_open(beta)?;
    if !(gamma < 1.0) {
        return Err(SimileError::ContractionViolated { gamma });
    }
    if gamma < 0.0 {
        return Err(SimileError::Config(format!(
            "gamma must be >= 0, got {gamma}"
        )));
    }
    Ok(beta * gamma * epsilon * lipschitz / ((1.0 - beta) * (1.0 - gamma)) + beta * reduction)
}

/// Horizon-dependent bound `β ε L T + β · reduction`.
pub fn theorem1_bound(
    beta: f64,
    epsilon: f64,
    lipschitz: f64,
    horizon: usize,
    reduction: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(SimileError::Config(format!(
            "beta must lie in [0, 1], got {beta}"
        )));
    }
    Ok(beta * epsilon * lipschitz * horizon as f64 + beta * reduction)
}

/// Contraction penalty `δ = γ ε L / (1 - γ)`.
pub fn contraction_penalty(gamma: f64, epsilon: f64, lipschitz: f64) -> Result<f64> {
    if !(gamma < 1.0) {
        return Err(SimileError::ContractionViolated { gamma });
    }
    Ok(gamma * epsilon * lipschitz / (1.0 - gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    /// `Δ > δ`: the returned step size guarantees improvement.
    Improvement,
    /// `δ >= Δ`: no improvement can be guaranteed.
    NoGuarantee,
    /// `Δ <= 0`: the new policy is no better on the current states.
    NoReduction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalStep {
    pub beta: f64,
    pub bound: f64,
    pub status: StepStatus,
}

/// Step size minimizing [`theorem2_bound`] given the reduction `Δ`
/// and contraction penalty `δ`: `β = (Δ - δ) / (2Δ)` with bound
/// `-(Δ - δ)² / (2 (Δ + δ))`.
pub fn corollary2_beta(reduction: f64, penalty: f64) -> OptimalStep {
    if !(reduction > 0.0) {
        return OptimalStep {
            beta: BETA_MIN,
            bound: 0.0,
            status: StepStatus::NoReduction,
        };
    }
    if penalty >= reduction {
        return OptimalStep {
            beta: BETA_MIN,
            bound: 0.0,
            status: StepStatus::NoGuarantee,
        };
    }
    let gain = reduction - penalty;
    OptimalStep {
        beta: gain / (2.0 * reduction),
        bound: -gain * gain / (2.0 * (reduction + penalty)),
        status: StepStatus::Improvement,
    }
}

/// Finite-difference estimate of the Lipschitz constant of `policy` in its
/// action window.
///
/// For each state, `directions` random perturbations `u` with `‖u‖ = scale`
/// are applied to the action window and the largest
/// `‖π([x, a + u]) - π([x, a])‖ / ‖u‖` is returned.
pub fn estimate_gamma<P: Policy + ?Sized>(
    policy: &P,
    states: &[State],
    scale: f64,
    directions: usize,
    seed: u64,
) -> Result<f64> {
    if states.is_empty() {
        return Err(SimileError::Config(
            "gamma estimate needs at least one state".into(),
        ));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(SimileError::Config(format!(
            "perturbation must be > 0, got {scale}"
        )));
    }
    if directions == 0 {
        return Err(SimileError::Config(
            "need at least one perturbation direction".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for s in states {
        let window = s.action_window();
        if window.is_empty() {
            return Ok(0.0);
        }
        let base = policy.act(s)?;
        for _ in 0..directions {
            let mut u: Vec<f64> = (0..window.len())
                .map(|_| rng.sample(StandardNormal))
                .collect();
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            for v in &mut u {
                *v *= scale / norm;
            }
            let moved: Vec<f64> = window.iter().zip(&u).map(|(a, d)| a + d).collect();
            let out = policy.act(&s.with_action_window(&moved))?;
            let diff = out
                .iter()
                .zip(&base)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            let step = moved
                .iter()
                .zip(window)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            if step > 0.0 {
                best = best.max(diff / step);
            }
        }
    }
    Ok(best)
}

/// Per-iteration estimates of the quantities in the improvement bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryEstimates {
    pub gamma: f64,
    /// `max_t ‖π̂(s_t) - π(s_t)‖` over the current policy's roll-out states.
    pub epsilon: f64,
    /// `2 max_t ‖π(s_t) - a*_t‖`, the squared loss' Lipschitz constant on the
    /// range actually visited.
    pub lipschitz_l: f64,
    /// `Δ`: loss of the current policy minus loss of the new policy, both on
    /// the current policy's states.
    pub reduction: f64,
    /// `δ`; absent when `γ >= 1`.
    pub delta: Option<f64>,
    /// Absent when `γ >= 1`.
    pub theorem2_bound: Option<f64>,
    pub theorem1_bound: f64,
    pub corollary2: OptimalStep,
    /// Realized change in roll-out loss after interpolating.
    pub measured_improvement: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::AffinePolicy;

    #[test]
    fn theorem2_examples() {
        assert_eq!(theorem2_bound(0.3, 0.4, 0.0, 2.0, 0.0).unwrap(), 0.0);
        let b = theorem2_bound(0.5, 0.5, 1.0, 2.0, -1.0).unwrap();
        assert!((b - 1.5).abs() < 1e-12);
        assert_eq!(theorem2_bound(0.0, 0.5, 1.0, 2.0, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn theorem2_rejects_expansion() {
        assert!(matches!(
            theorem2_bound(0.5, 1.0, 1.0, 1.0, 0.0),
            Err(SimileError::ContractionViolated { .. })
        ));
        assert!(theorem2_bound(1.0, 0.5, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn theorem1_examples() {
        assert_eq!(theorem1_bound(0.2, 0.0, 2.0, 50, 0.0).unwrap(), 0.0);
        let t = 100;
        let b = theorem1_bound(1.0 / t as f64, 0.1, 2.0, t, -3.0).unwrap();
        assert!((b - (0.1 * 2.0 - 3.0 / t as f64)).abs() < 1e-12);
        let b = theorem1_bound(0.01, 0.1, 2.0, 100, -3.0).unwrap();
        assert!((b - 0.17).abs() < 1e-12);
    }

    #[test]
    fn corollary2_examples() {
        let at_boundary = corollary2_beta(1.0, 1.0);
        assert_eq!(at_boundary.beta, BETA_MIN);
        assert_eq!(at_boundary.bound, 0.0);
        assert_eq!(at_boundary.status, StepStatus::NoGuarantee);

        let free = corollary2_beta(0.8, 0.0);
        assert_eq!(free.beta, 0.5);
        assert!((free.bound + 0.4).abs() < 1e-12);

        let s = corollary2_beta(2.0, 1.0);
        assert_eq!(s.beta, 0.25);
        assert!((s.bound + 1.0 / 6.0).abs() < 1e-12);

        assert_eq!(corollary2_beta(-0.1, 0.0).status, StepStatus::NoReduction);
    }

    #[test]
    fn lemma1_square_instance() {
        let r = check_lemma1(|a| a * a, 2.0, &[(1.0, 0.0)], 1e-9);
        assert!(r.passed());
        assert_eq!(r.max_violation, 1.0 - 12.0);
    }

    #[test]
    fn lemma1_constant_function() {
        let pairs: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, -(i as f64))).collect();
        assert!(check_lemma1(|_| 3.0, 1.0, &pairs, 1e-9).passed());
    }

    #[test]
    fn lemma1_flags_degenerate_constant() {
        let r = check_lemma1(|a| a, 1e-12, &[(2.0, 1.0)], 1e-9);
        assert_eq!(r.violations, 1);
        let r = check_lemma1(|a| a, 0.0, &[(2.0, 1.0)], 1e-9);
        assert!(r.degenerate && !r.passed());
    }

    #[test]
    fn lemma1_flags_negative_values() {
        let r = check_lemma1(|a| a, 1.0, &[(-1.0, 1.0)], 1e-9);
        assert_eq!(r.negative_values, 1);
        assert!(!r.passed());
    }

    #[test]
    fn gamma_of_closed_form_policy() {
        let lambda = 3.0;
        let pi = AffinePolicy::scalar(0.2, 0.1, lambda, 100.0);
        let states: Vec<State> = (0..20)
            .map(|i| State::from_parts(&[i as f64 * 0.1], &[0.5 + i as f64 * 0.2]))
            .collect();
        let g = estimate_gamma(&pi, &states, 0.01, 4, 1).unwrap();
        assert!((g - lambda / (1.0 + lambda)).abs() < 1e-9);
    }

    #[test]
    fn gamma_of_action_free_policy_is_zero() {
        let pi = AffinePolicy::scalar(1.0, 0.0, 0.0, 1.0);
        let states = vec![State::from_parts(&[0.5], &[0.5])];
        assert_eq!(estimate_gamma(&pi, &states, 0.1, 8, 0).unwrap(), 0.0);
    }
}
