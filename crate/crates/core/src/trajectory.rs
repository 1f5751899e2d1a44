//! Context/action sequences, state construction, file I/O and the synthetic
//! expert generator.
//!
//! Time indices in the public API are one-based (`1 ..= T`) where they refer
//! to a step of a trajectory; slices and vectors are zero-based as usual.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimileError};

/// A paired context/action sequence with actions bounded in `[0, R]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    contexts: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    action_bound: f64,
}

impl Trajectory {
    pub fn new(contexts: Vec<Vec<f64>>, actions: Vec<Vec<f64>>, action_bound: f64) -> Result<Self> {
        if !(action_bound.is_finite() && action_bound > 0.0) {
            return Err(SimileError::Config(format!(
                "action bound must be positive and finite, got {action_bound}"
            )));
        }
        if contexts.len() != actions.len() {
            return Err(SimileError::Dimension {
                what: "trajectory length (actions vs contexts)",
                expected: contexts.len(),
                got: actions.len(),
            });
        }
        if contexts.len() < 2 {
            return Err(SimileError::Config(format!(
                "trajectory needs at least 2 steps, got {}",
                contexts.len()
            )));
        }
        let m = contexts[0].len();
        let k = actions[0].len();
        if m == 0 || k == 0 {
            return Err(SimileError::Config(
                "context and action dimensions must be at least 1".into(),
            ));
        }
        for (t, (x, a)) in contexts.iter().zip(&actions).enumerate() {
            if x.len() != m {
                return Err(SimileError::Dimension {
                    what: "context vector",
                    expected: m,
                    got: x.len(),
                });
            }
            if a.len() != k {
                return Err(SimileError::Dimension {
                    what: "action vector",
                    expected: k,
                    got: a.len(),
                });
            }
            if x.iter().chain(a).any(|v| !v.is_finite()) {
                return Err(SimileError::NonFinite(format!("step {}", t + 1)));
            }
            if let Some(v) = a.iter().find(|&&v| !(0.0..=action_bound).contains(&v)) {
                return Err(SimileError::Config(format!(
                    "action {v} at step {} outside [0, {action_bound}]",
                    t + 1
                )));
            }
        }
        Ok(Trajectory {
            contexts,
            actions,
            action_bound,
        })
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn context_dim(&self) -> usize {
        self.contexts[0].len()
    }

    pub fn action_dim(&self) -> usize {
        self.actions[0].len()
    }

    pub fn contexts(&self) -> &[Vec<f64>] {
        &self.contexts
    }

    pub fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }

    pub fn action_bound(&self) -> f64 {
        self.action_bound
    }

    /// Layout of states built from this trajectory with the given windows.
    pub fn layout(&self, p: usize, q: usize) -> StateLayout {
        StateLayout {
            context_dim: self.context_dim(),
            action_dim: self.action_dim(),
            p,
            q,
        }
    }

    /// All expert states `s_1 .. s_T`, using the recorded actions as history.
    pub fn expert_states(&self, p: usize, q: usize) -> Vec<State> {
        let layout = self.layout(p, q);
        (0..self.len())
            .map(|i| layout.build(&self.contexts, &self.actions, &self.actions[0], i))
            .collect()
    }
}

/// Builds `s_t = [x_t .. x_{t-p}, a_{t-1} .. a_{t-q}]` for trajectory step `t`
/// (one-based). History before the first step repeats `x_1` and `a_1`.
pub fn make_state(traj: &Trajectory, t: usize, p: usize, q: usize) -> Result<State> {
    if t == 0 || t > traj.len() {
        return Err(SimileError::Index { t, len: traj.len() });
    }
    let layout = traj.layout(p, q);
    Ok(layout.build(traj.contexts(), traj.actions(), &traj.actions()[0], t - 1))
}

/// Shape of a flattened state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLayout {
    pub context_dim: usize,
    pub action_dim: usize,
    pub p: usize,
    pub q: usize,
}

impl StateLayout {
    pub fn context_len(&self) -> usize {
        (self.p + 1) * self.context_dim
    }

    pub fn action_len(&self) -> usize {
        self.q * self.action_dim
    }

    pub fn state_dim(&self) -> usize {
        self.context_len() + self.action_len()
    }

    /// State at zero-based step `i`.
    ///
    /// `actions[j]` is the action taken at step `j`; only entries `j < i` are
    /// read. Negative history indices resolve to `contexts[0]` and `initial`.
    pub fn build(
        &self,
        contexts: &[Vec<f64>],
        actions: &[Vec<f64>],
        initial: &[f64],
        i: usize,
    ) -> State {
        let mut values = Vec::with_capacity(self.state_dim());
        for lag in 0..=self.p {
            values.extend_from_slice(&contexts[i.saturating_sub(lag)]);
        }
        for lag in 1..=self.q {
            if lag <= i {
                values.extend_from_slice(&actions[i - lag]);
            } else {
                values.extend_from_slice(initial);
            }
        }
        State {
            values,
            context_len: self.context_len(),
        }
    }
}

/// A flattened state: context window (newest first) followed by the action
/// window (newest first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    values: Vec<f64>,
    context_len: usize,
}

impl State {
    pub fn from_parts(context_window: &[f64], action_window: &[f64]) -> Self {
        let mut values = context_window.to_vec();
        values.extend_from_slice(action_window);
        State {
            values,
            context_len: context_window.len(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn context_window(&self) -> &[f64] {
        &self.values[..self.context_len]
    }

    pub fn action_window(&self) -> &[f64] {
        &self.values[self.context_len..]
    }

    /// Copy of this state with the action window replaced.
    pub fn with_action_window(&self, window: &[f64]) -> State {
        State::from_parts(self.context_window(), window)
    }
}

/// On-disk trajectory encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryFormat {
    Csv,
    JsonLines,
}

impl TrajectoryFormat {
    /// Guess from the file extension; anything but `.jsonl`, `.ndjson` or
    /// `.json` is treated as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson" | "json") => TrajectoryFormat::JsonLines,
            _ => TrajectoryFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    pub action_bound: f64,
    /// Needed only for header-less CSV; without it the last column is taken
    /// as the single action coordinate.
    pub context_dim: Option<usize>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            action_bound: 1.0,
            context_dim: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    x: Vec<f64>,
    a: Vec<f64>,
}

pub fn load_trajectory(
    path: &Path,
    format: TrajectoryFormat,
    opts: LoadOptions,
) -> Result<Trajectory> {
    let file = File::open(path).map_err(|e| SimileError::io(path, e))?;
    let shown = path.display().to_string();
    let (contexts, actions) = match format {
        TrajectoryFormat::Csv => read_csv(BufReader::new(file), &shown, opts)?,
        TrajectoryFormat::JsonLines => read_jsonl(BufReader::new(file), &shown, opts)?,
    };
    if contexts.is_empty() {
        return Err(SimileError::Empty { path: shown });
    }
    if contexts.len() < 2 {
        return Err(SimileError::Parse {
            path: shown,
            line: 1,
            msg: "a trajectory needs at least 2 rows".into(),
        });
    }
    Trajectory::new(contexts, actions, opts.action_bound)
}

type Columns = (Vec<Vec<f64>>, Vec<Vec<f64>>);

fn check_action(path: &str, line: usize, a: &[f64], bound: f64) -> Result<()> {
    match a.iter().find(|&&v| !(0.0..=bound).contains(&v)) {
        Some(v) => Err(SimileError::Parse {
            path: path.to_string(),
            line,
            msg: format!("action {v} outside [0, {bound}]"),
        }),
        None => Ok(()),
    }
}

fn read_csv<R: std::io::Read>(reader: R, path: &str, opts: LoadOptions) -> Result<Columns> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: usize, msg: String| SimileError::Parse {
        path: path.to_string(),
        line,
        msg,
    };

    let mut split: Option<(usize, usize)> = None;
    let mut contexts = Vec::new();
    let mut actions = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let more = rdr
            .read_record(&mut record)
            .map_err(|e| parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        if first {
            first = false;
            if parsed.is_err() {
                split = Some(parse_header(&record).map_err(|msg| parse_err(line, msg))?);
                continue;
            }
        }
        let row = parsed.map_err(|e| parse_err(line, format!("malformed number: {e}")))?;
        let (m, k) = match split {
            Some(s) => s,
            None => {
                let m = opts.context_dim.unwrap_or(row.len().saturating_sub(1));
                if m == 0 || m >= row.len() {
                    return Err(parse_err(
                        line,
                        format!(
                            "cannot split {} columns into contexts and actions",
                            row.len()
                        ),
                    ));
                }
                split = Some((m, row.len() - m));
                (m, row.len() - m)
            }
        };
        if row.len() != m + k {
            return Err(parse_err(
                line,
                format!("expected {} columns, found {}", m + k, row.len()),
            ));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(line, "non-finite value".into()));
        }
        let (x, a) = row.split_at(m);
        check_action(path, line, a, opts.action_bound)?;
        contexts.push(x.to_vec());
        actions.push(a.to_vec());
    }
    Ok((contexts, actions))
}

fn parse_header(record: &csv::StringRecord) -> std::result::Result<(usize, usize), String> {
    let m = record.iter().take_while(|c| c.starts_with("x_")).count();
    let k = record
        .iter()
        .skip(m)
        .take_while(|c| c.starts_with("a_"))
        .count();
    if m == 0 || k == 0 || m + k != record.len() {
        return Err(format!(
            "expected header x_1..x_m,a_1..a_k, found {:?}",
            record.iter().collect::<Vec<_>>()
        ));
    }
    Ok((m, k))
}

fn read_jsonl<R: BufRead>(reader: R, path: &str, opts: LoadOptions) -> Result<Columns> {
    let mut contexts: Vec<Vec<f64>> = Vec::new();
    let mut actions: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| SimileError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(&line).map_err(|e| SimileError::Parse {
            path: path.to_string(),
            line: lineno,
            msg: e.to_string(),
        })?;
        if let (Some(x0), Some(a0)) = (contexts.first(), actions.first()) {
            if row.x.len() != x0.len() || row.a.len() != a0.len() {
                return Err(SimileError::Parse {
                    path: path.to_string(),
                    line: lineno,
                    msg: format!(
                        "inconsistent dimensions: x has {}, a has {} (expected {}, {})",
                        row.x.len(),
                        row.a.len(),
                        x0.len(),
                        a0.len()
                    ),
                });
            }
        }
        check_action(path, lineno, &row.a, opts.action_bound)?;
        contexts.push(row.x);
        actions.push(row.a);
    }
    Ok((contexts, actions))
}

pub fn save_trajectory(traj: &Trajectory, path: &Path, format: TrajectoryFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| SimileError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_trajectory(traj, &mut out, format).map_err(|e| SimileError::io(path, e))?;
    out.flush().map_err(|e| SimileError::io(path, e))
}

pub fn write_trajectory<W: Write>(
    traj: &Trajectory,
    out: &mut W,
    format: TrajectoryFormat,
) -> std::io::Result<()> {
    match format {
        TrajectoryFormat::Csv => {
            let header: Vec<String> = (1..=traj.context_dim())
                .map(|j| format!("x_{j}"))
                .chain((1..=traj.action_dim()).map(|j| format!("a_{j}")))
                .collect();
            writeln!(out, "{}", header.join(","))?;
            for (x, a) in traj.contexts().iter().zip(traj.actions()) {
                let cells: Vec<String> = x.iter().chain(a).map(|v| v.to_string()).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        TrajectoryFormat::JsonLines => {
            for (x, a) in traj.contexts().iter().zip(traj.actions()) {
                let row = JsonRow {
                    x: x.clone(),
                    a: a.clone(),
                };
                writeln!(out, "{}", serde_json::to_string(&row)?)?;
            }
        }
    }
    Ok(())
}

/// Parameters of the synthetic tracking task.
///
/// A bounded random walk plays the role of the tracked target. Contexts are
/// noisy observations of the walk; the expert action is a zero-lag
/// (forward-backward) exponential smoothing of the clean walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub horizon: usize,
    pub context_dim: usize,
    pub noise_std: f64,
    /// Time constant of the expert smoother, in steps. `0` disables smoothing.
    pub smoothing_halflife: f64,
    pub seed: u64,
    pub action_bound: f64,
    /// Standard deviation of a single random-walk increment.
    pub walk_step: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            horizon: 200,
            context_dim: 1,
            noise_std: 0.02,
            smoothing_halflife: 5.0,
            seed: 0,
            action_bound: 1.0,
            walk_step: 0.03,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SimileError::Config(msg));
        if self.horizon < 2 {
            return bad(format!("horizon must be >= 2, got {}", self.horizon));
        }
        if self.context_dim == 0 {
            return bad("context_dim must be >= 1".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise_std must be >= 0, got {}", self.noise_std));
        }
        if !(self.smoothing_halflife >= 0.0 && self.smoothing_halflife.is_finite()) {
            return bad(format!(
                "smoothing_halflife must be >= 0, got {}",
                self.smoothing_halflife
            ));
        }
        if !(self.action_bound > 0.0 && self.action_bound.is_finite()) {
            return bad(format!(
                "action_bound must be > 0, got {}",
                self.action_bound
            ));
        }
        if !(self.walk_step >= 0.0 && self.walk_step.is_finite()) {
            return bad(format!("walk_step must be >= 0, got {}", self.walk_step));
        }
        Ok(())
    }
}

/// Generates a synthetic expert demonstration. Identical configs produce
/// bit-identical trajectories.
pub fn synth_expert(cfg: &SynthConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let bound = cfg.action_bound;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // The walk does not depend on noise_std.
    let mut walk = Vec::with_capacity(cfg.horizon);
    let mut pos = bound * rng.random_range(0.3..0.7);
    walk.push(pos);
    for _ in 1..cfg.horizon {
        let step: f64 = rng.sample(StandardNormal);
        pos = reflect(pos + cfg.walk_step * step, bound);
        walk.push(pos);
    }

    let contexts: Vec<Vec<f64>> = walk
        .iter()
        .map(|&w| {
            (0..cfg.context_dim)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    w + cfg.noise_std * z
                })
                .collect()
        })
        .collect();

    let actions = smooth_forward_backward(&walk, cfg.smoothing_halflife)
        .into_iter()
        .map(|v| vec![v.clamp(0.0, bound)])
        .collect();

    Trajectory::new(contexts, actions, bound)
}

fn reflect(mut v: f64, bound: f64) -> f64 {
    // A single increment never crosses more than one wall for sane steps,
    // but loop anyway for large walk_step.
    loop {
        if v < 0.0 {
            v = -v;
        } else if v > bound {
            v = 2.0 * bound - v;
        } else {
            return v;
        }
    }
}

/// Exponential smoothing run forward then backward, which cancels the lag of
/// a single causal pass.
pub fn smooth_forward_backward(series: &[f64], halflife: f64) -> Vec<f64> {
    let alpha = if halflife > 0.0 {
        1.0 - 0.5f64.powf(1.0 / halflife)
    } else {
        1.0
    };
    let mut fwd = Vec::with_capacity(series.len());
    let mut acc = series[0];
    for &v in series {
        acc = alpha * v + (1.0 - alpha) * acc;
        fwd.push(acc);
    }
    let mut out = fwd.clone();
    let mut acc = fwd[fwd.len() - 1];
    for i in (0..fwd.len()).rev() {
        acc = alpha * fwd[i] + (1.0 - alpha) * acc;
        out[i] = acc;
    }
    out
}
