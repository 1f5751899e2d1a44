//! The iterative training loop: roll out, label with virtual feedback, refit
//! the regularizer, train a new forest, blend it in.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::autoregressor::{default_ridge, fit_autoregressor_segments, LinearAutoregressor};
use crate::error::{Result, SimileError};
use crate::forest::{train_forest, ForestConfig, SmoothForest};
use crate::metrics::imitation_loss;
use crate::policy::{interpolate, rollout_det, EnsemblePolicy, Policy};
use crate::theory::{
    contraction_penalty, corollary2_beta, estimate_gamma, theorem1_bound, theorem2_bound,
    TheoryEstimates, BETA_MAX, BETA_MIN,
};
use crate::trajectory::{State, StateLayout, Trajectory};

/// How the interpolation weight is chosen each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    /// `β = err(π) / (err(π̂) + err(π))`, clamped to `[BETA_MIN, BETA_MAX]`.
    Adaptive,
    Fixed(f64),
}

/// Mixing weight of the policy's own actions in the feedback targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSchedule {
    /// `σ_n = initial · decay^(n-1)`.
    Geometric {
        initial: f64,
        decay: f64,
    },
    Constant(f64),
    /// Raw expert labels every iteration.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub n_iterations: usize,
    pub lambda: f64,
    pub tau: usize,
    /// `None` means `1e-3` times the number of training steps.
    pub ridge: Option<f64>,
    pub p: usize,
    pub q: usize,
    pub beta_mode: BetaMode,
    pub sigma_schedule: SigmaSchedule,
    pub forest: ForestConfig,
    pub seed: u64,
    /// Size of the action-window perturbations used to estimate `γ`.
    pub gamma_scale: f64,
    pub gamma_directions: usize,
    /// Use this regularizer every iteration instead of refitting it.
    pub fixed_autoregressor: Option<LinearAutoregressor>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            n_iterations: 10,
            lambda: 1.0,
            tau: 1,
            ridge: None,
            p: 2,
            q: 2,
            beta_mode: BetaMode::Adaptive,
            sigma_schedule: SigmaSchedule::Geometric {
                initial: 0.8,
                decay: 0.5,
            },
            forest: ForestConfig::default(),
            seed: 0,
            gamma_scale: 0.05,
            gamma_directions: 4,
            fixed_autoregressor: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SimileError::Config(msg));
        if self.n_iterations == 0 {
            return bad("n_iterations must be >= 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if self.tau == 0 {
            return bad("tau must be >= 1".into());
        }
        if self.tau > self.q {
            return bad(format!(
                "tau = {} needs an action window of at least that length, q = {}",
                self.tau, self.q
            ));
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("ridge must be >= 0, got {r}"));
            }
        }
        if let BetaMode::Fixed(b) = self.beta_mode {
            if !(b > 0.0 && b <= 1.0) {
                return bad(format!("fixed beta must lie in (0, 1], got {b}"));
            }
        }
        match self.sigma_schedule {
            SigmaSchedule::Geometric { initial, decay } => {
                if !(0.0..=1.0).contains(&initial) {
                    return bad(format!("sigma0 must lie in [0, 1], got {initial}"));
                }
                if !(decay > 0.0 && decay < 1.0) {
                    return bad(format!("sigma decay must lie in (0, 1), got {decay}"));
                }
            }
            SigmaSchedule::Constant(s) => {
                if !(0.0..=1.0).contains(&s) {
                    return bad(format!("sigma must lie in [0, 1], got {s}"));
                }
            }
            SigmaSchedule::Zero => {}
        }
        if !(self.gamma_scale > 0.0 && self.gamma_scale.is_finite()) {
            return bad(format!("gamma_scale must be > 0, got {}", self.gamma_scale));
        }
        if self.gamma_directions == 0 {
            return bad("gamma_directions must be >= 1".into());
        }
        if let Some(h) = &self.fixed_autoregressor {
            if h.tau() > self.q {
                return bad("fixed autoregressor looks further back than the action window".into());
            }
        }
        self.forest.validate()
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub sigma: f64,
    pub beta: f64,
    /// Roll-out error of the newly trained forest on its own.
    pub error_new: f64,
    /// Roll-out error of the policy before this iteration.
    pub error_old: f64,
    /// Roll-out error of the blended policy.
    pub combined_error: f64,
    /// Mean first-order difference of the blended policy's roll-out.
    pub smoothness: f64,
    /// `(1/T) Σ ⟨a_t - a*_t, â_t - a_t⟩` for this iteration's targets.
    pub feedback_descent: f64,
    pub members: usize,
    pub theory: TheoryEstimates,
}

/// Feedback targets `â = σ a + (1 - σ) a*`, clamped to `[0, R]`.
///
/// Every `â_t - a_t` carries the sign of `a*_t - a_t`, including after
/// rounding.
pub fn gen_feedback(
    rolled: &[Vec<f64>],
    expert: &[Vec<f64>],
    sigma: f64,
    bound: f64,
) -> Result<Vec<Vec<f64>>> {
    if rolled.len() != expert.len() {
        return Err(SimileError::Dimension {
            what: "rolled-out sequence length",
            expected: expert.len(),
            got: rolled.len(),
        });
    }
    if !(0.0..=1.0).contains(&sigma) {
        return Err(SimileError::Config(format!(
            "sigma must lie in [0, 1], got {sigma}"
        )));
    }
    rolled
        .iter()
        .zip(expert)
        .map(|(a, e)| {
            if a.len() != e.len() {
                return Err(SimileError::Dimension {
                    what: "action vector",
                    expected: e.len(),
                    got: a.len(),
                });
            }
            Ok(a.iter()
                .zip(e)
                .map(|(&ai, &ei)| {
                    let v = if sigma == 0.0 {
                        ei
                    } else if sigma == 1.0 {
                        ai
                    } else {
                        ai + (1.0 - sigma) * (ei - ai)
                    };
                    v.clamp(0.0, bound)
                })
                .collect())
        })
        .collect()
}

/// `(1/T) Σ_t ⟨a_t - a*_t, â_t - a_t⟩`.
pub fn feedback_descent(rolled: &[Vec<f64>], expert: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
    let total: f64 = rolled
        .iter()
        .zip(expert)
        .zip(targets)
        .map(|((a, e), t)| {
            a.iter()
                .zip(e)
                .zip(t)
                .map(|((ai, ei), ti)| (ai - ei) * (ti - ai))
                .sum::<f64>()
        })
        .sum();
    total / rolled.len() as f64
}

/// `err_old / (err_new + err_old)`, clamped to `[BETA_MIN, BETA_MAX]`.
/// Returns `BETA_MIN` when both errors are zero.
pub fn adaptive_beta(error_new: f64, error_old: f64) -> Result<f64> {
    if !(error_new >= 0.0 && error_old >= 0.0) || !error_new.is_finite() || !error_old.is_finite() {
        return Err(SimileError::NonFinite(format!(
            "adaptive beta from errors {error_new}, {error_old}"
        )));
    }
    let total = error_new + error_old;
    if total == 0.0 {
        log::info!("both policies reproduce the expert exactly; using the minimum step");
        return Ok(BETA_MIN);
    }
    Ok((error_old / total).clamp(BETA_MIN, BETA_MAX))
}

/// `σ` for iteration `n >= 1`.
pub fn sigma_schedule_value(schedule: SigmaSchedule, n: usize) -> f64 {
    match schedule {
        SigmaSchedule::Geometric { initial, decay } => {
            initial * decay.powi(n.saturating_sub(1) as i32)
        }
        SigmaSchedule::Constant(s) => s,
        SigmaSchedule::Zero => 0.0,
    }
}

/// Deterministic per-iteration seed.
pub(crate) fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Roll-outs of one policy over every training trajectory.
#[derive(Debug, Clone)]
pub struct PooledRollout {
    /// Actions per trajectory.
    pub actions: Vec<Vec<Vec<f64>>>,
    /// Visited states per trajectory.
    pub states: Vec<Vec<State>>,
}

impl PooledRollout {
    pub fn run<P: Policy + ?Sized>(
        policy: &P,
        trajs: &[Trajectory],
        layout: StateLayout,
    ) -> Result<Self> {
        let mut actions = Vec::with_capacity(trajs.len());
        let mut states = Vec::with_capacity(trajs.len());
        for traj in trajs {
            let out = rollout_det(policy, traj.contexts(), &traj.actions()[0], layout, true)?;
            actions.push(out.actions);
            states.push(out.states.unwrap_or_default());
        }
        Ok(PooledRollout { actions, states })
    }

    /// Imitation loss pooled over all steps of all trajectories.
    pub fn error(&self, trajs: &[Trajectory]) -> Result<f64> {
        pooled_error(&self.actions, trajs)
    }

    /// Mean first-order difference pooled over all trajectories.
    pub fn smoothness(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for a in &self.actions {
            for w in a.windows(2) {
                total += w[1]
                    .iter()
                    .zip(&w[0])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }

    pub fn all_states(&self) -> Vec<State> {
        self.states.iter().flatten().cloned().collect()
    }
}

fn pooled_error(actions: &[Vec<Vec<f64>>], trajs: &[Trajectory]) -> Result<f64> {
    let mut total = 0.0;
    let mut steps = 0usize;
    for (a, traj) in actions.iter().zip(trajs) {
        total += imitation_loss(a, traj.actions())? * a.len() as f64;
        steps += a.len();
    }
    Ok(total / steps as f64)
}

fn fit_regularizer(segments: &[&[Vec<f64>]], cfg: &TrainingConfig) -> Result<LinearAutoregressor> {
    if let Some(h) = &cfg.fixed_autoregressor {
        return Ok(h.clone());
    }
    let steps: usize = segments.iter().map(|s| s.len()).sum();
    let ridge = cfg.ridge.unwrap_or_else(|| default_ridge(steps));
    fit_autoregressor_segments(segments, cfg.tau, ridge)
}

fn forest_cfg(cfg: &TrainingConfig, iteration: usize) -> ForestConfig {
    ForestConfig {
        seed: derive_seed(cfg.seed, iteration as u64),
        ..cfg.forest.clone()
    }
}

fn check_trajectories(trajs: &[Trajectory]) -> Result<(usize, usize, f64)> {
    let first = trajs
        .first()
        .ok_or_else(|| SimileError::Config("no training trajectories".into()))?;
    for t in trajs {
        if t.context_dim() != first.context_dim() || t.action_dim() != first.action_dim() {
            return Err(SimileError::Dimension {
                what: "training trajectory shape",
                expected: first.context_dim(),
                got: t.context_dim(),
            });
        }
        if t.action_bound() != first.action_bound() {
            return Err(SimileError::Config(
                "trajectories disagree on the action bound".into(),
            ));
        }
    }
    Ok((
        first.context_dim(),
        first.action_dim(),
        first.action_bound(),
    ))
}

/// Layout of the states the trained policy consumes.
pub fn training_layout(trajs: &[Trajectory], cfg: &TrainingConfig) -> Result<StateLayout> {
    let (m, k, _) = check_trajectories(trajs)?;
    Ok(StateLayout {
        context_dim: m,
        action_dim: k,
        p: cfg.p,
        q: cfg.q,
    })
}

/// The initial policy: a forest trained on expert states with expert
/// targets, regularized toward an autoregressor fitted on the expert actions.
pub fn initial_forest(trajs: &[Trajectory], cfg: &TrainingConfig) -> Result<SmoothForest> {
    cfg.validate()?;
    let (_, _, bound) = check_trajectories(trajs)?;
    let segments: Vec<&[Vec<f64>]> = trajs.iter().map(|t| t.actions()).collect();
    let h = fit_regularizer(&segments, cfg)?;
    let states: Vec<State> = trajs
        .iter()
        .flat_map(|t| t.expert_states(cfg.p, cfg.q))
        .collect();
    let targets: Vec<Vec<f64>> = trajs
        .iter()
        .flat_map(|t| t.actions().iter().cloned())
        .collect();
    train_forest(
        &states,
        &targets,
        &h,
        cfg.lambda,
        &forest_cfg(cfg, 0),
        bound,
    )
}

/// What an observer sees after each iteration.
pub struct IterationView<'a> {
    pub iteration: usize,
    pub previous: &'a EnsemblePolicy,
    pub candidate: &'a Arc<SmoothForest>,
    pub current: &'a EnsemblePolicy,
    /// Roll-out of `previous`, on whose states `candidate` was trained.
    pub previous_rollout: &'a PooledRollout,
    pub targets: &'a [Vec<Vec<f64>>],
    pub record: &'a IterationRecord,
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub policy: EnsemblePolicy,
    pub layout: StateLayout,
    pub records: Vec<IterationRecord>,
    /// Roll-out error of the initial policy.
    pub initial_error: f64,
}

impl TrainingOutcome {
    /// Roll-out errors `e_0, e_1, ..., e_N` of the successive policies.
    pub fn error_curve(&self) -> Vec<f64> {
        std::iter::once(self.initial_error)
            .chain(self.records.iter().map(|r| r.combined_error))
            .collect()
    }
}

/// Runs the full training loop on one demonstration.
pub fn simile_train(traj: &Trajectory, cfg: &TrainingConfig) -> Result<TrainingOutcome> {
    train_with(std::slice::from_ref(traj), cfg, None, &mut |_| Ok(()))
}

/// Training over several demonstrations sharing one policy, optionally from
/// a given initial policy, calling `observer` after every iteration.
pub fn train_with(
    trajs: &[Trajectory],
    cfg: &TrainingConfig,
    initial: Option<EnsemblePolicy>,
    observer: &mut dyn FnMut(&IterationView<'_>) -> Result<()>,
) -> Result<TrainingOutcome> {
    cfg.validate()?;
    let (_, _, bound) = check_trajectories(trajs)?;
    let layout = training_layout(trajs, cfg)?;
    let mut policy = match initial {
        Some(p) => {
            if p.state_dim() != layout.state_dim() {
                return Err(SimileError::Dimension {
                    what: "initial policy state",
                    expected: layout.state_dim(),
                    got: p.state_dim(),
                });
            }
            p
        }
        None => EnsemblePolicy::singleton(Arc::new(initial_forest(trajs, cfg)?)),
    };
    let horizon = trajs.iter().map(Trajectory::len).max().unwrap_or(0);

    let mut rolled = PooledRollout::run(&policy, trajs, layout)?;
    let initial_error = rolled.error(trajs)?;
    finite("initial roll-out error", 0, initial_error)?;
    let mut error_old = initial_error;
    let mut records = Vec::with_capacity(cfg.n_iterations);

    for n in 1..=cfg.n_iterations {
        let sigma = sigma_schedule_value(cfg.sigma_schedule, n);
        let targets = rolled
            .actions
            .iter()
            .zip(trajs)
            .map(|(a, t)| gen_feedback(a, t.actions(), sigma, bound))
            .collect::<Result<Vec<_>>>()?;
        let flat_rolled: Vec<Vec<f64>> = rolled.actions.iter().flatten().cloned().collect();
        let flat_expert: Vec<Vec<f64>> = trajs
            .iter()
            .flat_map(|t| t.actions().iter().cloned())
            .collect();
        let flat_targets: Vec<Vec<f64>> = targets.iter().flatten().cloned().collect();
        let descent = feedback_descent(&flat_rolled, &flat_expert, &flat_targets);

        let segments: Vec<&[Vec<f64>]> = targets.iter().map(Vec::as_slice).collect();
        let h = fit_regularizer(&segments, cfg)?;
        let states = rolled.all_states();
        let candidate = Arc::new(train_forest(
            &states,
            &flat_targets,
            &h,
            cfg.lambda,
            &forest_cfg(cfg, n),
            bound,
        )?);

        let error_new = PooledRollout::run(candidate.as_ref(), trajs, layout)?.error(trajs)?;
        finite("new policy roll-out error", n, error_new)?;
        let beta = match cfg.beta_mode {
            BetaMode::Adaptive => adaptive_beta(error_new, error_old)?,
            BetaMode::Fixed(b) => b,
        };
        let next = interpolate(&policy, Arc::clone(&candidate), beta)?;
        let next_rolled = PooledRollout::run(&next, trajs, layout)?;
        let combined_error = next_rolled.error(trajs)?;
        finite("combined roll-out error", n, combined_error)?;

        let theory = estimate_theory(
            &policy,
            candidate.as_ref(),
            &states,
            &flat_rolled,
            &flat_expert,
            beta,
            horizon,
            combined_error - error_old,
            cfg,
            n,
        )?;
        let record = IterationRecord {
            iteration: n,
            sigma,
            beta,
            error_new,
            error_old,
            combined_error,
            smoothness: next_rolled.smoothness(),
            feedback_descent: descent,
            members: next.len(),
            theory,
        };
        log::info!(
            "iteration {n}: sigma {sigma:.3} beta {beta:.3} err_new {error_new:.5} err_old {error_old:.5} combined {combined_error:.5}"
        );
        observer(&IterationView {
            iteration: n,
            previous: &policy,
            candidate: &candidate,
            current: &next,
            previous_rollout: &rolled,
            targets: &targets,
            record: &record,
        })?;
        records.push(record);
        policy = next;
        rolled = next_rolled;
        error_old = combined_error;
    }

    Ok(TrainingOutcome {
        policy,
        layout,
        records,
        initial_error,
    })
}

fn finite(what: &str, iteration: usize, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(SimileError::NonFinite(format!(
            "iteration {iteration}: {what} = {v}"
        )))
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[allow(clippy::too_many_arguments)]
fn estimate_theory(
    previous: &EnsemblePolicy,
    candidate: &SmoothForest,
    states: &[State],
    rolled: &[Vec<f64>],
    expert: &[Vec<f64>],
    beta: f64,
    horizon: usize,
    measured_improvement: f64,
    cfg: &TrainingConfig,
    n: usize,
) -> Result<TheoryEstimates> {
    let new_actions = states
        .iter()
        .map(|s| candidate.act(s))
        .collect::<Result<Vec<_>>>()?;
    let epsilon = new_actions
        .iter()
        .zip(rolled)
        .map(|(x, y)| dist(x, y))
        .fold(0.0, f64::max);
    let lipschitz_l = 2.0
        * rolled
            .iter()
            .zip(expert)
            .map(|(x, y)| dist(x, y))
            .fold(0.0, f64::max);
    let loss_old = imitation_loss(rolled, expert)?;
    let loss_new = imitation_loss(&new_actions, expert)?;
    let reduction = loss_old - loss_new;

    let seed = derive_seed(cfg.seed, 1_000_000 + n as u64);
    let gamma = estimate_gamma(
        previous,
        states,
        cfg.gamma_scale,
        cfg.gamma_directions,
        seed,
    )?
    .max(estimate_gamma(
        candidate,
        states,
        cfg.gamma_scale,
        cfg.gamma_directions,
        seed,
    )?);
    let delta = contraction_penalty(gamma, epsilon, lipschitz_l).ok();
    let theorem2 = if beta < 1.0 {
        theorem2_bound(beta, gamma, epsilon, lipschitz_l, -reduction).ok()
    } else {
        None
    };
    let theorem1 = theorem1_bound(beta, epsilon, lipschitz_l, horizon, -reduction)?;
    let corollary2 = corollary2_beta(reduction, delta.unwrap_or(f64::INFINITY));
    Ok(TheoryEstimates {
        gamma,
        epsilon,
        lipschitz_l,
        reduction,
        delta,
        theorem2_bound: theorem2,
        theorem1_bound: theorem1,
        corollary2,
        measured_improvement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{synth_expert, SynthConfig};

    fn seq(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn feedback_boundaries() {
        let a = seq(&[0.1, 0.9]);
        let e = seq(&[0.4, 0.2]);
        assert_eq!(gen_feedback(&a, &e, 0.0, 1.0).unwrap(), e);
        assert_eq!(gen_feedback(&a, &e, 1.0, 1.0).unwrap(), a);
        assert_eq!(
            gen_feedback(&seq(&[2.0]), &seq(&[4.0]), 0.5, 10.0).unwrap(),
            seq(&[3.0])
        );
    }

    #[test]
    fn feedback_rejects_length_mismatch() {
        assert!(gen_feedback(&seq(&[0.1]), &seq(&[0.1, 0.2]), 0.5, 1.0).is_err());
    }

    #[test]
    fn adaptive_beta_examples() {
        assert_eq!(adaptive_beta(0.3, 0.3).unwrap(), 0.5);
        assert_eq!(adaptive_beta(0.0, 0.3).unwrap(), BETA_MAX);
        assert!((adaptive_beta(0.1, 0.2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(adaptive_beta(0.0, 0.0).unwrap(), BETA_MIN);
    }

    #[test]
    fn sigma_schedule_examples() {
        let g = SigmaSchedule::Geometric {
            initial: 0.8,
            decay: 0.5,
        };
        assert_eq!(sigma_schedule_value(g, 1), 0.8);
        assert!((sigma_schedule_value(g, 3) - 0.2).abs() < 1e-15);
        assert_eq!(sigma_schedule_value(SigmaSchedule::Zero, 7), 0.0);
        assert_eq!(sigma_schedule_value(SigmaSchedule::Constant(0.3), 4), 0.3);
    }

    #[test]
    fn config_validation() {
        let bad = [
            TrainingConfig {
                n_iterations: 0,
                ..Default::default()
            },
            TrainingConfig {
                beta_mode: BetaMode::Fixed(0.0),
                ..Default::default()
            },
            TrainingConfig {
                sigma_schedule: SigmaSchedule::Geometric {
                    initial: 0.5,
                    decay: 1.0,
                },
                ..Default::default()
            },
            TrainingConfig {
                tau: 3,
                q: 2,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert!(TrainingConfig::default().validate().is_ok());
    }

    #[test]
    fn short_run_is_deterministic_and_descends() {
        let traj = synth_expert(&SynthConfig {
            horizon: 60,
            seed: 4,
            ..Default::default()
        })
        .unwrap();
        let cfg = TrainingConfig {
            n_iterations: 3,
            forest: ForestConfig {
                n_trees: 3,
                max_depth: 3,
                ..Default::default()
            },
            ..Default::default()
        };
        let a = simile_train(&traj, &cfg).unwrap();
        let b = simile_train(&traj, &cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.policy, b.policy);
        assert_eq!(a.records.len(), 3);
        assert!(a.records.iter().all(|r| r.feedback_descent <= 0.0));
        assert_eq!(a.records[0].error_old, a.initial_error);
    }
}
