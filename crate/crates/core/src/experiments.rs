//! Reference configurations and the comparison experiments run by the CLI
//! and the acceptance suite.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::autoregressor::LinearAutoregressor;
use crate::error::{Result, SimileError};
use crate::forest::{train_forest, ForestConfig, LeafMode, SmoothForest};
use crate::metrics::{feedback_gap, imitation_loss, smoothness};
use crate::policy::{rollout_det, rollout_sto, AffinePolicy, EnsemblePolicy, Policy};
use crate::simile::{
    derive_seed, train_with, BetaMode, SigmaSchedule, TrainingConfig, TrainingOutcome,
};
use crate::theory::{
    check_lemma1, estimate_gamma, theorem1_bound, theorem2_bound, Lemma1Report, StepStatus,
};
use crate::trajectory::{synth_expert, SynthConfig, Trajectory};

/// The synthetic demonstration used throughout the experiments.
pub fn reference_synth(seed: u64) -> SynthConfig {
    SynthConfig {
        seed,
        ..SynthConfig::default()
    }
}

pub fn reference_training(seed: u64) -> TrainingConfig {
    let mut cfg = TrainingConfig {
        seed,
        ..TrainingConfig::default()
    };
    cfg.forest.leaf_mode = LeafMode::Joint;
    cfg.forest.split_on_actions = false;
    cfg
}

/// [`reference_training`] with trees that may also split on past actions.
pub fn full_state_training(seed: u64) -> TrainingConfig {
    let mut cfg = reference_training(seed);
    cfg.forest.split_on_actions = true;
    cfg
}

/// Fraction of the action bound used as the constant starting policy in the
/// convergence, σ and feedback experiments.
pub const POOR_START: f64 = 0.5;

/// Constant policy at `POOR_START · R`.
pub fn poor_start(traj: &Trajectory, cfg: &TrainingConfig) -> Result<EnsemblePolicy> {
    constant_policy(traj, cfg, POOR_START * traj.action_bound())
}

/// Label for a β mode in tables: `adaptive` or the fixed value.
pub fn beta_label(mode: BetaMode) -> String {
    match mode {
        BetaMode::Adaptive => "adaptive".into(),
        BetaMode::Fixed(b) => format!("{b}"),
    }
}

/// Parses `adaptive` or a number in `(0, 1]`.
pub fn parse_beta(text: &str) -> Result<BetaMode> {
    if text.eq_ignore_ascii_case("adaptive") {
        return Ok(BetaMode::Adaptive);
    }
    let b: f64 = text.parse().map_err(|_| {
        SimileError::Config(format!("beta must be `adaptive` or a number, got {text:?}"))
    })?;
    if !(b > 0.0 && b <= 1.0) {
        return Err(SimileError::Config(format!(
            "fixed beta must lie in (0, 1], got {b}"
        )));
    }
    Ok(BetaMode::Fixed(b))
}

/// A policy that outputs `value` everywhere: one single-leaf tree, no
/// smoothing.
pub fn constant_policy(
    traj: &Trajectory,
    cfg: &TrainingConfig,
    value: f64,
) -> Result<EnsemblePolicy> {
    let states = traj.expert_states(cfg.p, cfg.q);
    let targets = vec![vec![value; traj.action_dim()]; states.len()];
    let forest_cfg = ForestConfig {
        n_trees: 1,
        max_depth: 0,
        min_samples_leaf: 1,
        bootstrap: false,
        ..cfg.forest.clone()
    };
    let h = LinearAutoregressor::identity(traj.action_dim());
    let forest = train_forest(&states, &targets, &h, 0.0, &forest_cfg, traj.action_bound())?;
    Ok(EnsemblePolicy::singleton(Arc::new(forest)))
}

/// First index `n` with `curve[n] <= (1 + tolerance) · curve.last()`.
pub fn iterations_to_converge(curve: &[f64], tolerance: f64) -> usize {
    let Some(&last) = curve.last() else { return 0 };
    curve
        .iter()
        .position(|&e| e <= (1.0 + tolerance) * last)
        .unwrap_or(curve.len() - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaRow {
    pub iteration: usize,
    pub beta_mode: String,
    pub combined_error: f64,
    pub feedback_descent: f64,
}

/// Trains once per β mode on the same data, seed and initial policy.
pub fn compare_beta(
    traj: &Trajectory,
    cfg: &TrainingConfig,
    modes: &[BetaMode],
    initial: Option<&EnsemblePolicy>,
) -> Result<Vec<BetaRow>> {
    if modes.is_empty() {
        return Err(SimileError::Config("empty beta grid".into()));
    }
    let runs = modes
        .par_iter()
        .map(|&mode| {
            let cfg = TrainingConfig {
                beta_mode: mode,
                ..cfg.clone()
            };
            train_with(
                std::slice::from_ref(traj),
                &cfg,
                initial.cloned(),
                &mut |_| Ok(()),
            )
            .map(|out| (mode, out))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<BetaRow> = runs
        .iter()
        .flat_map(|(mode, out)| {
            out.records.iter().map(move |r| BetaRow {
                iteration: r.iteration,
                beta_mode: beta_label(*mode),
                combined_error: r.combined_error,
                feedback_descent: r.feedback_descent,
            })
        })
        .collect();
    rows.sort_by(|a, b| {
        a.beta_mode
            .cmp(&b.beta_mode)
            .then(a.iteration.cmp(&b.iteration))
    });
    Ok(rows)
}

/// Convergence speed of adaptive versus fixed β on one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceComparison {
    pub seed: u64,
    pub adaptive_iterations: usize,
    pub fixed_iterations: usize,
    pub adaptive_final: f64,
    pub fixed_final: f64,
    /// Largest feedback descent term over both runs.
    pub max_feedback_descent: f64,
}

/// Trains with adaptive β and with `fixed` β on the reference task for
/// `seed`, both starting from [`poor_start`], and counts the iterations each
/// needs to come within `tolerance` of its own final error.
pub fn convergence_comparison(
    seed: u64,
    horizon: usize,
    iterations: usize,
    fixed: f64,
    tolerance: f64,
) -> Result<ConvergenceComparison> {
    let traj = synth_expert(&SynthConfig {
        horizon,
        ..reference_synth(seed)
    })?;
    let base = TrainingConfig {
        n_iterations: iterations,
        ..reference_training(seed)
    };
    let start = poor_start(&traj, &base)?;
    let run = |mode| -> Result<TrainingOutcome> {
        let cfg = TrainingConfig {
            beta_mode: mode,
            ..base.clone()
        };
        train_with(
            std::slice::from_ref(&traj),
            &cfg,
            Some(start.clone()),
            &mut |_| Ok(()),
        )
    };
    let (adaptive, fixed_run) =
        rayon::join(|| run(BetaMode::Adaptive), || run(BetaMode::Fixed(fixed)));
    let (adaptive, fixed_run) = (adaptive?, fixed_run?);
    let (a_curve, f_curve) = (adaptive.error_curve(), fixed_run.error_curve());
    Ok(ConvergenceComparison {
        seed,
        adaptive_iterations: iterations_to_converge(&a_curve, tolerance),
        fixed_iterations: iterations_to_converge(&f_curve, tolerance),
        adaptive_final: *a_curve.last().unwrap_or(&f64::NAN),
        fixed_final: *f_curve.last().unwrap_or(&f64::NAN),
        max_feedback_descent: adaptive
            .records
            .iter()
            .chain(&fixed_run.records)
            .map(|r| r.feedback_descent)
            .fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpRow {
    pub iteration: usize,
    pub deterministic_error: f64,
    pub mean_stochastic_error: f64,
    /// Standard error of the stochastic mean; `0` with a single sample.
    pub stderr: f64,
    /// Set when the standard error could not be estimated.
    pub degenerate: bool,
    pub feedback_descent: f64,
}

impl InterpRow {
    /// Deterministic error within three standard errors above the
    /// stochastic mean, or below it.
    pub fn deterministic_not_worse(&self) -> bool {
        self.deterministic_error <= self.mean_stochastic_error + 3.0 * self.stderr
    }
}

/// Mean and standard error of a sample.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let Some(&first) = values.first() else {
        return (f64::NAN, 0.0);
    };
    if values.iter().all(|&v| v == first) {
        return (first, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Deterministic versus stochastic interpolation with a fixed β.
///
/// Both arms share every iteration's training set and new forest; they
/// differ only in how the members are combined when rolling out.
pub fn compare_interp(
    traj: &Trajectory,
    cfg: &TrainingConfig,
    initial: Option<&EnsemblePolicy>,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<InterpRow>> {
    if n_samples == 0 {
        return Err(SimileError::Config("n_samples must be >= 1".into()));
    }
    if !matches!(cfg.beta_mode, BetaMode::Fixed(_)) {
        return Err(SimileError::Config(
            "interpolation comparison needs a fixed beta".into(),
        ));
    }
    let mut rows = Vec::new();
    let layout = traj.layout(cfg.p, cfg.q);
    train_with(
        std::slice::from_ref(traj),
        cfg,
        initial.cloned(),
        &mut |view| {
            let members = view.current.weighted_members();
            let errors = (0..n_samples)
                .into_par_iter()
                .map(|i| {
                    let s = derive_seed(seed, (view.iteration as u64) << 32 | i as u64);
                    let out =
                        rollout_sto(&members, traj.contexts(), &traj.actions()[0], layout, s)?;
                    imitation_loss(&out.actions, traj.actions())
                })
                .collect::<Result<Vec<_>>>()?;
            let (mean, stderr) = mean_stderr(&errors);
            rows.push(InterpRow {
                iteration: view.iteration,
                deterministic_error: view.record.combined_error,
                mean_stochastic_error: mean,
                stderr,
                degenerate: n_samples < 2,
                feedback_descent: view.record.feedback_descent,
            });
            Ok(())
        },
    )?;
    Ok(rows)
}

/// Imitation loss and smoothness of a first-iteration forest trained with a
/// given feedback mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub sigma: f64,
    pub imitation_loss: f64,
    pub smoothness: f64,
    pub feedback_descent: f64,
}

/// Runs one iteration per `σ` from the same initial policy and rolls out
/// the newly trained forest on its own.
pub fn sigma_sweep(
    traj: &Trajectory,
    cfg: &TrainingConfig,
    sigmas: &[f64],
    initial: Option<&EnsemblePolicy>,
) -> Result<Vec<SigmaRow>> {
    let layout = traj.layout(cfg.p, cfg.q);
    sigmas
        .par_iter()
        .map(|&sigma| {
            let cfg = TrainingConfig {
                n_iterations: 1,
                sigma_schedule: SigmaSchedule::Constant(sigma),
                ..cfg.clone()
            };
            let mut candidate: Option<Arc<SmoothForest>> = None;
            let mut descent = f64::NAN;
            train_with(
                std::slice::from_ref(traj),
                &cfg,
                initial.cloned(),
                &mut |view| {
                    candidate = Some(Arc::clone(view.candidate));
                    descent = view.record.feedback_descent;
                    Ok(())
                },
            )?;
            let forest = candidate.ok_or_else(|| SimileError::Config("no iteration ran".into()))?;
            let out = rollout_det(
                forest.as_ref(),
                traj.contexts(),
                &traj.actions()[0],
                layout,
                false,
            )?;
            Ok(SigmaRow {
                sigma,
                imitation_loss: imitation_loss(&out.actions, traj.actions())?,
                smoothness: smoothness(&out.actions)?,
                feedback_descent: descent,
            })
        })
        .collect()
}

/// Adjacent pairs in the sweep where smoothness loss goes up or imitation
/// loss goes down as `σ` grows.
pub fn sigma_inversions(rows: &[SigmaRow]) -> usize {
    rows.windows(2)
        .map(|w| {
            usize::from(w[1].smoothness > w[0].smoothness)
                + usize::from(w[1].imitation_loss < w[0].imitation_loss)
        })
        .sum()
}

/// Smoothness of first-iteration forests trained on raw expert labels versus
/// smoothed labels, starting from a poor constant policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackNecessity {
    /// `(1/T) Σ ‖a*_t - a_{t-1}‖` for the initial roll-out.
    pub gap: f64,
    pub expert_smoothness: f64,
    pub raw_feedback_smoothness: f64,
    pub smooth_feedback_smoothness: f64,
    pub smooth_sigma: f64,
    /// Larger of the two runs' feedback descent terms.
    pub max_feedback_descent: f64,
}

impl FeedbackNecessity {
    pub fn ratio(&self) -> f64 {
        self.raw_feedback_smoothness / self.smooth_feedback_smoothness
    }
}

pub fn feedback_necessity(
    traj: &Trajectory,
    cfg: &TrainingConfig,
    initial_value: f64,
    smooth_sigma: f64,
) -> Result<FeedbackNecessity> {
    let initial = constant_policy(traj, cfg, initial_value)?;
    let layout = traj.layout(cfg.p, cfg.q);
    let start = rollout_det(&initial, traj.contexts(), &traj.actions()[0], layout, false)?;
    let rows = sigma_sweep(traj, cfg, &[0.0, smooth_sigma], Some(&initial))?;
    Ok(FeedbackNecessity {
        gap: feedback_gap(&start.actions, traj.actions())?,
        expert_smoothness: smoothness(traj.actions())?,
        raw_feedback_smoothness: rows[0].smoothness,
        smooth_feedback_smoothness: rows[1].smoothness,
        smooth_sigma,
        max_feedback_descent: rows[0].feedback_descent.max(rows[1].feedback_descent),
    })
}

/// Monte Carlo comparison of per-step stochastic sampling against the
/// deterministic blend of two affine smooth policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureCheck {
    pub steps: usize,
    pub samples: usize,
    /// Steps whose Monte Carlo mean lies more than three standard errors
    /// from the deterministic action.
    pub steps_outside: usize,
    /// Largest `|mean - deterministic| / stderr` over steps.
    pub max_z: f64,
    pub deterministic_loss: f64,
    pub mean_stochastic_loss: f64,
    pub stochastic_loss_stderr: f64,
}

impl MixtureCheck {
    pub fn passed(&self) -> bool {
        self.steps_outside == 0
            && self.deterministic_loss
                <= self.mean_stochastic_loss + 3.0 * self.stochastic_loss_stderr
    }
}

/// The two affine members used for the mixture check.
pub fn affine_pair(bound: f64) -> (AffinePolicy, AffinePolicy) {
    (
        AffinePolicy::scalar(0.8, 0.1 * bound, 1.0, bound),
        AffinePolicy::scalar(0.4, 0.3 * bound, 3.0, bound),
    )
}

pub fn affine_mixture_check(
    traj: &Trajectory,
    weight: f64,
    samples: usize,
    seed: u64,
) -> Result<MixtureCheck> {
    if samples < 2 {
        return Err(SimileError::Config("need at least 2 samples".into()));
    }
    let (a, b) = affine_pair(traj.action_bound());
    let layout = a.layout;
    let ensemble = EnsemblePolicy::new(vec![
        (Arc::new(a.clone()), 1.0 - weight),
        (Arc::new(b.clone()), weight),
    ])?;
    let members: Vec<(&dyn Policy, f64)> = vec![(&a, 1.0 - weight), (&b, weight)];
    let initial = &traj.actions()[0];
    let det = rollout_det(&ensemble, traj.contexts(), initial, layout, false)?;
    let runs = (0..samples)
        .into_par_iter()
        .map(|i| {
            rollout_sto(
                &members,
                traj.contexts(),
                initial,
                layout,
                derive_seed(seed, i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let steps = traj.len();
    let mut outside = 0;
    let mut max_z = 0.0f64;
    for t in 0..steps {
        let column: Vec<f64> = runs.iter().map(|r| r.actions[t][0]).collect();
        let (mean, se) = mean_stderr(&column);
        let dev = (mean - det.actions[t][0]).abs();
        if dev > 3.0 * se + 1e-12 {
            outside += 1;
        }
        if se > 0.0 {
            max_z = max_z.max(dev / se);
        }
    }
    let losses = runs
        .iter()
        .map(|r| imitation_loss(&r.actions, traj.actions()))
        .collect::<Result<Vec<_>>>()?;
    let (mean_loss, loss_se) = mean_stderr(&losses);
    Ok(MixtureCheck {
        steps,
        samples,
        steps_outside: outside,
        max_z,
        deterministic_loss: imitation_loss(&det.actions, traj.actions())?,
        mean_stochastic_loss: mean_loss,
        stochastic_loss_stderr: loss_se,
    })
}

/// One named check of the theory suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    /// Reported-only checks never fail the suite.
    pub asserted: bool,
    pub passed: bool,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl TheoryReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !c.asserted || c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheorySuiteOptions {
    pub seed: u64,
    pub horizon: usize,
    pub iterations: usize,
    pub lemma1_pairs: usize,
    pub mixture_samples: usize,
    /// Adds a run whose regularizer `a_t = 1.2 a_{t-1}` dominates the policy,
    /// so the contraction condition fails.
    pub inject_expansion: bool,
}

impl Default for TheorySuiteOptions {
    fn default() -> Self {
        TheorySuiteOptions {
            seed: 0,
            horizon: 200,
            iterations: 10,
            lemma1_pairs: 10_000,
            mixture_samples: 500,
            inject_expansion: false,
        }
    }
}

/// Per-iteration outcome of the improvement-bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub iteration: usize,
    pub beta: f64,
    pub gamma: f64,
    pub measured: f64,
    /// `None` when the contraction condition failed.
    pub bound: Option<f64>,
    /// `None` when the bound is undefined.
    pub holds: Option<bool>,
}

/// Slack allowed on top of an estimated bound.
pub fn bound_slack(bound: f64) -> f64 {
    0.1 * bound.abs() + 1e-6
}

/// Checks the contraction-based improvement bound on every iteration of a
/// finished run.
pub fn theorem2_rows(out: &TrainingOutcome) -> Vec<BoundRow> {
    out.records
        .iter()
        .map(|r| {
            let t = &r.theory;
            let bound =
                theorem2_bound(r.beta, t.gamma, t.epsilon, t.lipschitz_l, -t.reduction).ok();
            BoundRow {
                iteration: r.iteration,
                beta: r.beta,
                gamma: t.gamma,
                measured: t.measured_improvement,
                bound,
                holds: bound.map(|b| t.measured_improvement <= b + bound_slack(b)),
            }
        })
        .collect()
}

/// Passes when every iteration satisfies the contraction condition and the
/// bound holds on all but at most a tenth of them.
pub fn theorem2_verdict(rows: &[BoundRow]) -> bool {
    let applicable: Vec<bool> = rows.iter().filter_map(|r| r.holds).collect();
    if applicable.len() != rows.len() || rows.is_empty() {
        return false;
    }
    let held = applicable.iter().filter(|&&h| h).count();
    10 * held >= 9 * applicable.len()
}

fn sample_pairs(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| (rng.random_range(lo..hi), rng.random_range(lo..hi)))
        .collect()
}

/// Self-bounding checks on three smooth non-negative functions
/// with known curvature bounds.
pub fn lemma1_suite(pairs: usize, seed: u64) -> Vec<(String, Lemma1Report)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let square = sample_pairs(&mut rng, pairs, -1.0, 1.0);
    let wave = sample_pairs(&mut rng, pairs, -3.0, 3.0);
    let soft = sample_pairs(&mut rng, pairs, -5.0, 5.0);
    vec![
        ("square".into(), check_lemma1(|a| a * a, 2.0, &square, 1e-9)),
        (
            "one_plus_sin_squared".into(),
            check_lemma1(|a| 1.0 + a.sin().powi(2), 2.0, &wave, 1e-9),
        ),
        (
            "softplus".into(),
            check_lemma1(|a: f64| a.exp().ln_1p(), 0.25, &soft, 1e-9),
        ),
    ]
}

fn monotone_bounds() -> bool {
    let grid = [0.0, 0.1, 0.5, 1.0, 2.0];
    let mut ok = true;
    for &beta in &[0.1, 0.5, 0.9] {
        for &gamma in &[0.0, 0.3, 0.8] {
            for &red in &[-1.0, 0.0, 0.5] {
                for w in grid.windows(2) {
                    let up_eps = theorem2_bound(beta, gamma, w[1], 1.0, red).unwrap_or(f64::NAN)
                        >= theorem2_bound(beta, gamma, w[0], 1.0, red).unwrap_or(f64::NAN);
                    let up_l = theorem2_bound(beta, gamma, 1.0, w[1], red).unwrap_or(f64::NAN)
                        >= theorem2_bound(beta, gamma, 1.0, w[0], red).unwrap_or(f64::NAN);
                    let up_eps1 = theorem1_bound(beta, w[1], 1.0, 50, red).unwrap_or(f64::NAN)
                        >= theorem1_bound(beta, w[0], 1.0, 50, red).unwrap_or(f64::NAN);
                    let up_l1 = theorem1_bound(beta, 1.0, w[1], 50, red).unwrap_or(f64::NAN)
                        >= theorem1_bound(beta, 1.0, w[0], 50, red).unwrap_or(f64::NAN);
                    ok &= up_eps && up_l && up_eps1 && up_l1;
                }
            }
        }
    }
    ok
}

/// Runs every theory check on the synthetic task.
pub fn run_theory_suite(opts: &TheorySuiteOptions) -> Result<TheoryReport> {
    let traj = synth_expert(&SynthConfig {
        horizon: opts.horizon,
        ..reference_synth(opts.seed)
    })?;
    let mixture = synth_expert(&SynthConfig {
        horizon: 100,
        ..reference_synth(opts.seed)
    })?;
    theory_suite(&traj, &mixture, opts)
}

/// Runs every theory check on a given demonstration. The affine checks see
/// only its first context coordinate and first 100 steps. `opts.horizon` is
/// ignored.
pub fn run_theory_suite_on(traj: &Trajectory, opts: &TheorySuiteOptions) -> Result<TheoryReport> {
    if traj.action_dim() != 1 {
        return Err(SimileError::Config(format!(
            "theory checks need one action coordinate, found {}",
            traj.action_dim()
        )));
    }
    let steps = traj.len().min(100);
    let mixture = Trajectory::new(
        traj.contexts()[..steps]
            .iter()
            .map(|x| vec![x[0]])
            .collect(),
        traj.actions()[..steps].to_vec(),
        traj.action_bound(),
    )?;
    theory_suite(traj, &mixture, opts)
}

fn theory_suite(
    traj: &Trajectory,
    mixture_traj: &Trajectory,
    opts: &TheorySuiteOptions,
) -> Result<TheoryReport> {
    let mut checks = Vec::new();

    for (name, report) in lemma1_suite(opts.lemma1_pairs, opts.seed) {
        checks.push(CheckOutcome {
            name: format!("lemma1/{name}"),
            asserted: true,
            passed: report.passed(),
            detail: serde_json::to_value(&report)?,
        });
    }

    checks.push(CheckOutcome {
        name: "bounds_monotone".into(),
        asserted: true,
        passed: monotone_bounds(),
        detail: json!({ "grid": "beta x gamma x reduction x {epsilon, L}" }),
    });

    let lambda = 2.0;
    let closed_form = AffinePolicy::scalar(0.7, 0.1, lambda, traj.action_bound());
    let layout = closed_form.layout;
    let states = rollout_det(
        &closed_form,
        mixture_traj.contexts(),
        &mixture_traj.actions()[0],
        layout,
        true,
    )?
    .states
    .unwrap_or_default();
    let gamma = estimate_gamma(&closed_form, &states, 1e-3, 4, opts.seed)?;
    let expected = lambda / (1.0 + lambda);
    checks.push(CheckOutcome {
        name: "gamma/closed_form".into(),
        asserted: true,
        passed: (gamma - expected).abs() <= 1e-9,
        detail: json!({ "estimate": gamma, "expected": expected }),
    });

    let mixture = affine_mixture_check(mixture_traj, 0.5, opts.mixture_samples, opts.seed)?;
    checks.push(CheckOutcome {
        name: "interpolation/affine_mixture".into(),
        asserted: true,
        passed: mixture.passed(),
        detail: serde_json::to_value(&mixture)?,
    });

    let mut descent = Vec::new();
    let mut corollary = Vec::new();
    let cfg = TrainingConfig {
        n_iterations: opts.iterations,
        ..reference_training(opts.seed)
    };
    let start = poor_start(traj, &cfg)?;
    let run = train_with(std::slice::from_ref(traj), &cfg, Some(start), &mut |view| {
        descent.push(view.record.feedback_descent);
        let step = view.record.theory.corollary2;
        if step.status == StepStatus::Improvement {
            let blended =
                crate::policy::interpolate(view.previous, Arc::clone(view.candidate), step.beta)?;
            let out = rollout_det(
                &blended,
                traj.contexts(),
                &traj.actions()[0],
                traj.layout(cfg.p, cfg.q),
                false,
            )?;
            let measured = imitation_loss(&out.actions, traj.actions())? - view.record.error_old;
            corollary.push(json!({
                "iteration": view.iteration,
                "beta": step.beta,
                "bound": step.bound,
                "measured": measured,
                "holds": measured <= bound_slack(step.bound),
            }));
        }
        Ok(())
    })?;
    let rows = theorem2_rows(&run);
    checks.push(CheckOutcome {
        name: "theorem2/contraction_run".into(),
        asserted: true,
        passed: theorem2_verdict(&rows),
        detail: serde_json::to_value(&rows)?,
    });

    let held = corollary
        .iter()
        .filter(|c| c["holds"] == json!(true))
        .count();
    checks.push(CheckOutcome {
        name: "corollary2/optimal_step".into(),
        asserted: true,
        passed: 10 * held >= 9 * corollary.len(),
        detail: json!({ "applicable": corollary.len(), "held": held, "iterations": corollary }),
    });

    let default_run = train_with(
        std::slice::from_ref(traj),
        &TrainingConfig {
            n_iterations: opts.iterations,
            ..full_state_training(opts.seed)
        },
        None,
        &mut |view| {
            descent.push(view.record.feedback_descent);
            Ok(())
        },
    )?;
    let full_rows = theorem2_rows(&default_run);
    checks.push(CheckOutcome {
        name: "theorem2/full_state_run".into(),
        asserted: false,
        passed: theorem2_verdict(&full_rows),
        detail: serde_json::to_value(&full_rows)?,
    });

    let forest_mix = compare_interp(
        traj,
        &TrainingConfig {
            n_iterations: opts.iterations,
            beta_mode: BetaMode::Fixed(0.5),
            ..reference_training(opts.seed)
        },
        None,
        50,
        opts.seed,
    )?;
    checks.push(CheckOutcome {
        name: "interpolation/forest_mixture".into(),
        asserted: true,
        passed: forest_mix.iter().all(InterpRow::deterministic_not_worse),
        detail: serde_json::to_value(&forest_mix)?,
    });
    descent.extend(forest_mix.iter().map(|r| r.feedback_descent));

    if opts.inject_expansion {
        let injected = TrainingConfig {
            n_iterations: 2,
            lambda: 1e6,
            tau: 1,
            fixed_autoregressor: Some(LinearAutoregressor::new(vec![vec![1.2]], 0.0)?),
            ..reference_training(opts.seed)
        };
        let out = train_with(std::slice::from_ref(traj), &injected, None, &mut |view| {
            descent.push(view.record.feedback_descent);
            Ok(())
        })?;
        let rows = theorem2_rows(&out);
        let violated = rows.iter().filter(|r| r.bound.is_none()).count();
        checks.push(CheckOutcome {
            name: "theorem2/injected_expansion".into(),
            asserted: false,
            passed: theorem2_verdict(&rows),
            detail: json!({
                "status": if violated > 0 { "contraction violated" } else { "contraction held" },
                "violated_iterations": violated,
                "iterations": rows,
            }),
        });
    }

    checks.push(CheckOutcome {
        name: "feedback_descent".into(),
        asserted: true,
        passed: descent.iter().all(|&d| d <= 0.0),
        detail: json!({ "iterations": descent.len(), "max": descent.iter().copied().fold(f64::NEG_INFINITY, f64::max) }),
    });

    Ok(TheoryReport {
        seed: opts.seed,
        checks,
    })
}
