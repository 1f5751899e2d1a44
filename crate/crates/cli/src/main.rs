//! `simile` command-line experiments.
//!
//! Exit status: 0 on success, 1 when a theory check fails, 2 on usage or
//! I/O errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use simile::experiments::{
    beta_label, compare_beta, compare_interp, parse_beta, poor_start, reference_training,
    run_theory_suite, run_theory_suite_on, TheorySuiteOptions,
};
use simile::forest::{ForestConfig, LeafMode};
use simile::metrics::{imitation_loss, smoothness, smoothness_report};
use simile::policy::{load_policy, policy_to_json, rollout_det, EnsemblePolicy};
use simile::simile::{train_with, BetaMode, SigmaSchedule, TrainingConfig};
use simile::trajectory::{
    load_trajectory, synth_expert, write_trajectory, LoadOptions, SynthConfig, Trajectory,
    TrajectoryFormat,
};

#[derive(Parser)]
#[command(
    name = "simile",
    version,
    about = "Smooth imitation learning experiments"
)]
struct Cli {
    /// Log progress to stderr; repeat for more detail.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic expert demonstration.
    Synth(SynthArgs),
    /// Train a policy; writes the policy and a JSON-lines iteration log.
    Train(TrainArgs),
    /// Roll out a saved policy and print its losses as JSON.
    Eval(EvalArgs),
    /// Combined error per iteration for each β mode, as long-format CSV.
    CompareBeta(CompareBetaArgs),
    /// Deterministic against stochastic interpolation per iteration, as CSV.
    CompareInterp(CompareInterpArgs),
    /// Run the theory checks and write a JSON report.
    CheckTheory(CheckTheoryArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    Csv,
    Jsonl,
}

impl From<FileFormat> for TrajectoryFormat {
    fn from(f: FileFormat) -> Self {
        match f {
            FileFormat::Csv => TrajectoryFormat::Csv,
            FileFormat::Jsonl => TrajectoryFormat::JsonLines,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long = "T", default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..))]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the extension of `--out`.
    #[arg(long, value_enum)]
    format: Option<FileFormat>,
    #[arg(long, default_value_t = SynthConfig::default().noise_std)]
    noise_std: f64,
    #[arg(long, default_value_t = SynthConfig::default().smoothing_halflife)]
    halflife: f64,
    #[arg(long, default_value_t = 1)]
    context_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    action_bound: f64,
}

#[derive(Args)]
struct DataArgs {
    /// Demonstration file (CSV or JSON lines). Without it a synthetic
    /// demonstration is generated from `--T` and `--seed`.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long = "T", default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..))]
    horizon: u64,
    #[arg(long, default_value_t = 1.0)]
    action_bound: f64,
    /// Number of context columns in a CSV without a header row.
    #[arg(long)]
    context_dim: Option<usize>,
}

impl DataArgs {
    fn load(&self, seed: u64) -> anyhow::Result<Trajectory> {
        match &self.data {
            Some(path) => {
                let opts = LoadOptions {
                    action_bound: self.action_bound,
                    context_dim: self.context_dim,
                };
                Ok(load_trajectory(
                    path,
                    TrajectoryFormat::from_path(path),
                    opts,
                )?)
            }
            None => Ok(synth_expert(&SynthConfig {
                horizon: self.horizon as usize,
                seed,
                action_bound: self.action_bound,
                ..SynthConfig::default()
            })?),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LeafArg {
    DistanceOnly,
    Joint,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    /// Contexts and past actions.
    Full,
    /// Contexts only.
    Context,
}

/// Overrides on top of a base configuration.
#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    ridge: Option<f64>,
    /// Past contexts in the state.
    #[arg(long = "p")]
    p: Option<usize>,
    /// Past actions in the state.
    #[arg(long = "q")]
    q: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    min_leaf: Option<usize>,
    #[arg(long)]
    feature_fraction: Option<f64>,
    #[arg(long)]
    no_bootstrap: bool,
    #[arg(long, value_enum)]
    leaf_mode: Option<LeafArg>,
    #[arg(long, value_enum)]
    splits: Option<SplitArg>,
    /// Constant feedback mix σ for every iteration.
    #[arg(long, conflicts_with_all = ["sigma_initial", "sigma_decay"])]
    sigma: Option<f64>,
    #[arg(long, visible_alias = "sigma0")]
    sigma_initial: Option<f64>,
    #[arg(long)]
    sigma_decay: Option<f64>,
}

impl ModelArgs {
    fn apply(&self, mut cfg: TrainingConfig) -> TrainingConfig {
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = self.ridge {
            cfg.ridge = Some(v);
        }
        if let Some(v) = self.p {
            cfg.p = v;
        }
        if let Some(v) = self.q {
            cfg.q = v;
        }
        let forest = &mut cfg.forest;
        if let Some(v) = self.trees {
            forest.n_trees = v;
        }
        if let Some(v) = self.depth {
            forest.max_depth = v;
        }
        if let Some(v) = self.min_leaf {
            forest.min_samples_leaf = v;
        }
        if let Some(v) = self.feature_fraction {
            forest.feature_fraction = v;
        }
        if self.no_bootstrap {
            forest.bootstrap = false;
        }
        match self.leaf_mode {
            Some(LeafArg::DistanceOnly) => forest.leaf_mode = LeafMode::DistanceOnly,
            Some(LeafArg::Joint) => forest.leaf_mode = LeafMode::Joint,
            None => {}
        }
        match self.splits {
            Some(SplitArg::Full) => forest.split_on_actions = true,
            Some(SplitArg::Context) => forest.split_on_actions = false,
            None => {}
        }
        if let Some(s) = self.sigma {
            cfg.sigma_schedule = SigmaSchedule::Constant(s);
        } else if self.sigma_initial.is_some() || self.sigma_decay.is_some() {
            let (mut initial, mut decay) = match cfg.sigma_schedule {
                SigmaSchedule::Geometric { initial, decay } => (initial, decay),
                _ => (0.8, 0.5),
            };
            initial = self.sigma_initial.unwrap_or(initial);
            decay = self.sigma_decay.unwrap_or(decay);
            cfg.sigma_schedule = SigmaSchedule::Geometric { initial, decay };
        }
        cfg
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Start {
    /// Forest fitted to the expert demonstration.
    Expert,
    /// Constant policy at half the action bound.
    Poor,
}

fn initial_policy(
    start: Start,
    traj: &Trajectory,
    cfg: &TrainingConfig,
) -> anyhow::Result<Option<EnsemblePolicy>> {
    Ok(match start {
        Start::Expert => None,
        Start::Poor => Some(poor_start(traj, cfg)?),
    })
}

fn beta_arg(text: &str) -> Result<BetaMode, String> {
    parse_beta(text).map_err(|e| e.to_string())
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// `adaptive` or a fixed value in (0, 1].
    #[arg(long, default_value = "adaptive", value_parser = beta_arg)]
    beta: BetaMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Start::Expert)]
    start: Start,
    /// Policy file to write.
    #[arg(long)]
    out: PathBuf,
    /// Iteration log; defaults to the policy path with a `.log.jsonl` suffix.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    policy: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the rolled-out trajectory here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareBetaArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_value = "adaptive,0.1,0.5", value_parser = beta_arg)]
    betas: Vec<BetaMode>,
    #[arg(long, default_value_t = 15)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Start::Poor)]
    start: Start,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareInterpArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Stochastic roll-outs per iteration.
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Start::Expert)]
    start: Start,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckTheoryArgs {
    /// Run on this demonstration instead of the synthetic task.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    action_bound: f64,
    #[arg(long = "T", default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..))]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Sampled pairs per test function in the smoothness inequality check.
    #[arg(long, default_value_t = 10_000)]
    pairs: usize,
    #[arg(long, default_value_t = 500)]
    mixture_samples: usize,
    /// Add a run whose regularizer is expansive, to exercise the
    /// contraction-violated path.
    #[arg(long)]
    inject: bool,
    /// Report file; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot write {}", path.display()))?;
    tmp.write_all(bytes)
        .with_context(|| format!("cannot write {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn csv_bytes<T: serde::Serialize>(rows: &[T]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().context("flushing csv")
}

fn cmd_synth(a: &SynthArgs) -> anyhow::Result<()> {
    let traj = synth_expert(&SynthConfig {
        horizon: a.horizon as usize,
        context_dim: a.context_dim,
        noise_std: a.noise_std,
        smoothing_halflife: a.halflife,
        seed: a.seed,
        action_bound: a.action_bound,
        ..SynthConfig::default()
    })?;
    let format = a
        .format
        .map_or_else(|| TrajectoryFormat::from_path(&a.out), Into::into);
    let mut bytes = Vec::new();
    write_trajectory(&traj, &mut bytes, format)?;
    write_atomic(&a.out, &bytes)?;
    println!(
        "wrote {} steps to {} (expert smoothness {:.6})",
        traj.len(),
        a.out.display(),
        smoothness(traj.actions())?
    );
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> anyhow::Result<()> {
    let traj = a.data.load(a.seed)?;
    let cfg = a.model.apply(TrainingConfig {
        n_iterations: a.iters,
        beta_mode: a.beta,
        seed: a.seed,
        ..TrainingConfig::default()
    });
    let start = initial_policy(a.start, &traj, &cfg)?;
    let out = train_with(std::slice::from_ref(&traj), &cfg, start, &mut |_| Ok(()))?;

    let mut log = Vec::new();
    for r in &out.records {
        serde_json::to_writer(&mut log, r)?;
        log.push(b'\n');
    }
    let log_path = a
        .log
        .clone()
        .unwrap_or_else(|| a.out.with_extension("log.jsonl"));
    write_atomic(&a.out, policy_to_json(&out.policy, out.layout)?.as_bytes())?;
    write_atomic(&log_path, &log)?;

    let curve = out.error_curve();
    println!(
        "trained {} iterations: error {:.6} -> {:.6}, {} members; policy {}, log {}",
        out.records.len(),
        curve[0],
        curve[curve.len() - 1],
        out.policy.len(),
        a.out.display(),
        log_path.display()
    );
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> anyhow::Result<()> {
    let (policy, layout) = load_policy(&a.policy)?;
    let traj = a.data.load(a.seed)?;
    if traj.layout(layout.p, layout.q) != layout {
        bail!(
            "{} expects {} context and {} action columns, data has {} and {}",
            a.policy.display(),
            layout.context_dim,
            layout.action_dim,
            traj.context_dim(),
            traj.action_dim()
        );
    }
    let rolled = rollout_det(&policy, traj.contexts(), &traj.actions()[0], layout, false)?;
    let forest_cfg = ForestConfig {
        seed: a.seed,
        ..ForestConfig::default()
    };
    let report = smoothness_report(&rolled.actions, &traj, layout.p, &forest_cfg)?;
    let summary = json!({
        "steps": traj.len(),
        "members": policy.len(),
        "imitation_loss": imitation_loss(&rolled.actions, traj.actions())?,
        "smoothness": report.mean_first_order_diff,
        "expert_smoothness": report.expert_reference,
        "context_only_error": report.naive_error,
        "feedback_gap": report.gap,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if let Some(path) = &a.out {
        let rolled_traj = Trajectory::new(
            traj.contexts().to_vec(),
            rolled.actions,
            traj.action_bound(),
        )?;
        let mut bytes = Vec::new();
        write_trajectory(&rolled_traj, &mut bytes, TrajectoryFormat::from_path(path))?;
        write_atomic(path, &bytes)?;
    }
    Ok(())
}

fn cmd_compare_beta(a: &CompareBetaArgs) -> anyhow::Result<()> {
    if a.betas.is_empty() {
        bail!("--betas needs at least one value");
    }
    let traj = a.data.load(a.seed)?;
    let cfg = a.model.apply(TrainingConfig {
        n_iterations: a.iters,
        ..reference_training(a.seed)
    });
    let start = initial_policy(a.start, &traj, &cfg)?;
    let rows = compare_beta(&traj, &cfg, &a.betas, start.as_ref())?;
    write_atomic(&a.out, &csv_bytes(&rows)?)?;
    for mode in &a.betas {
        let label = beta_label(*mode);
        if let Some(last) = rows.iter().rfind(|r| r.beta_mode == label) {
            println!(
                "beta {label}: final combined error {:.6}",
                last.combined_error
            );
        }
    }
    Ok(())
}

fn cmd_compare_interp(a: &CompareInterpArgs) -> anyhow::Result<()> {
    if !(a.beta > 0.0 && a.beta <= 1.0) {
        bail!("--beta must lie in (0, 1], got {}", a.beta);
    }
    let traj = a.data.load(a.seed)?;
    let cfg = a.model.apply(TrainingConfig {
        n_iterations: a.iters,
        beta_mode: BetaMode::Fixed(a.beta),
        ..reference_training(a.seed)
    });
    let start = initial_policy(a.start, &traj, &cfg)?;
    let rows = compare_interp(&traj, &cfg, start.as_ref(), a.samples, a.seed)?;
    write_atomic(&a.out, &csv_bytes(&rows)?)?;
    let within = rows.iter().filter(|r| r.deterministic_not_worse()).count();
    println!(
        "deterministic error within 3 standard errors of the stochastic mean at {within}/{} iterations",
        rows.len()
    );
    if rows.iter().any(|r| r.degenerate) {
        println!(
            "one roll-out per iteration: standard errors are not available and are written as 0"
        );
    }
    Ok(())
}

fn cmd_check_theory(a: &CheckTheoryArgs) -> anyhow::Result<bool> {
    let opts = TheorySuiteOptions {
        seed: a.seed,
        horizon: a.horizon as usize,
        iterations: a.iters,
        lemma1_pairs: a.pairs,
        mixture_samples: a.mixture_samples,
        inject_expansion: a.inject,
    };
    let report = match &a.data {
        Some(path) => {
            let opts_load = LoadOptions {
                action_bound: a.action_bound,
                context_dim: None,
            };
            let traj = load_trajectory(path, TrajectoryFormat::from_path(path), opts_load)?;
            run_theory_suite_on(&traj, &opts)?
        }
        None => run_theory_suite(&opts)?,
    };
    let text = serde_json::to_string_pretty(&report)?;
    match &a.out {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            for c in &report.checks {
                let verdict = match (c.asserted, c.passed) {
                    (_, true) => "pass",
                    (true, false) => "FAIL",
                    (false, false) => "note",
                };
                println!("{verdict:4} {}", c.name);
            }
        }
        None => println!("{text}"),
    }
    Ok(report.passed())
}

/// Error chain on one line, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a).map(|_| true),
        Command::Train(a) => cmd_train(a).map(|_| true),
        Command::Eval(a) => cmd_eval(a).map(|_| true),
        Command::CompareBeta(a) => cmd_compare_beta(a).map(|_| true),
        Command::CompareInterp(a) => cmd_compare_interp(a).map(|_| true),
        Command::CheckTheory(a) => cmd_check_theory(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}
