//! Policies, deterministic and stochastic interpolation, and roll-outs.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autoregressor::LinearAutoregressor;
use crate::error::{Result, SimileError};
use crate::forest::SmoothForest;
use crate::trajectory::{State, StateLayout};

const POLICY_FORMAT: &str = "simile-policy";
const POLICY_VERSION: u32 = 1;

/// Weights below this are dropped from an ensemble.
pub const PRUNE_WEIGHT: f64 = 1e-12;
const SIMPLEX_TOL: f64 = 1e-12;

/// A map from states to actions in `[0, R]^k`.
pub trait Policy: Send + Sync {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn action_bound(&self) -> f64;
    fn act(&self, state: &State) -> Result<Vec<f64>>;
}

impl<P: Policy + ?Sized> Policy for &P {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn action_dim(&self) -> usize {
        (**self).action_dim()
    }
    fn action_bound(&self) -> f64 {
        (**self).action_bound()
    }
    fn act(&self, state: &State) -> Result<Vec<f64>> {
        (**self).act(state)
    }
}

impl<P: Policy + ?Sized> Policy for Arc<P> {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn action_dim(&self) -> usize {
        (**self).action_dim()
    }
    fn action_bound(&self) -> f64 {
        (**self).action_bound()
    }
    fn act(&self, state: &State) -> Result<Vec<f64>> {
        (**self).act(state)
    }
}

impl Policy for SmoothForest {
    fn state_dim(&self) -> usize {
        SmoothForest::state_dim(self)
    }
    fn action_dim(&self) -> usize {
        SmoothForest::action_dim(self)
    }
    fn action_bound(&self) -> f64 {
        SmoothForest::action_bound(self)
    }
    fn act(&self, state: &State) -> Result<Vec<f64>> {
        self.predict(state)
    }
}

/// Closed-form smooth policy with an affine base predictor:
/// `π([x, a]) = (W x + b + λ h(a)) / (1 + λ)`, clamped to `[0, R]`.
///
/// With `h(a) = a` this is the textbook `(f(x) + λ a) / (1 + λ)` policy whose
/// Lipschitz constant in the previous action is exactly `λ / (1 + λ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePolicy {
    /// `weights[j]` multiplies the context window for action coordinate `j`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub lambda: f64,
    pub autoregressor: LinearAutoregressor,
    pub layout: StateLayout,
    pub action_bound: f64,
}

impl AffinePolicy {
    /// Scalar policy `(slope * x_t + offset + λ a_{t-1}) / (1 + λ)` on states
    /// with one context and one action coordinate and no extra history.
    pub fn scalar(slope: f64, offset: f64, lambda: f64, action_bound: f64) -> Self {
        AffinePolicy {
            weights: vec![vec![slope]],
            bias: vec![offset],
            lambda,
            autoregressor: LinearAutoregressor::identity(1),
            layout: StateLayout {
                context_dim: 1,
                action_dim: 1,
                p: 0,
                q: 1,
            },
            action_bound,
        }
    }
}

impl Policy for AffinePolicy {
    fn state_dim(&self) -> usize {
        self.layout.state_dim()
    }
    fn action_dim(&self) -> usize {
        self.bias.len()
    }
    fn action_bound(&self) -> f64 {
        self.action_bound
    }
    fn act(&self, state: &State) -> Result<Vec<f64>> {
        if state.dim() != self.state_dim() {
            return Err(SimileError::Dimension {
                what: "state for affine policy",
                expected: self.state_dim(),
                got: state.dim(),
            });
        }
        let h = self.autoregressor.predict_window(state.action_window())?;
        let x = state.context_window();
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .zip(&h)
            .map(|((w, b), hv)| {
                let f: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
                ((f + self.lambda * hv) / (1.0 + self.lambda)).clamp(0.0, self.action_bound)
            })
            .collect())
    }
}

/// A convex combination of policies: `π(s) = Σ w_i π_i(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "P: Serialize", deserialize = "P: Deserialize<'de>"))]
pub struct EnsemblePolicy<P = SmoothForest> {
    members: Vec<Member<P>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "P: Serialize", deserialize = "P: Deserialize<'de>"))]
struct Member<P> {
    weight: f64,
    policy: Arc<P>,
}

impl<P: Policy> EnsemblePolicy<P> {
    pub fn singleton(policy: Arc<P>) -> Self {
        EnsemblePolicy {
            members: vec![Member {
                weight: 1.0,
                policy,
            }],
        }
    }

    /// Validates the weight simplex (non-negative, summing to one within
    /// `1e-12`) and member dimensions.
    pub fn new(members: Vec<(Arc<P>, f64)>) -> Result<Self> {
        let ensemble = EnsemblePolicy {
            members: members
                .into_iter()
                .map(|(policy, weight)| Member { weight, policy })
                .collect(),
        };
        ensemble.validate()?;
        Ok(ensemble)
    }

    fn validate(&self) -> Result<()> {
        let first = self
            .members
            .first()
            .ok_or_else(|| SimileError::Config("ensemble has no members".into()))?;
        if self.members.iter().any(|m| !(m.weight >= 0.0)) {
            return Err(SimileError::Config("ensemble weights must be >= 0".into()));
        }
        let total: f64 = self.members.iter().map(|m| m.weight).sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(SimileError::Config(format!(
                "ensemble weights sum to {total}, not 1"
            )));
        }
        for m in &self.members {
            if m.policy.state_dim() != first.policy.state_dim()
                || m.policy.action_dim() != first.policy.action_dim()
            {
                return Err(SimileError::Dimension {
                    what: "ensemble member state",
                    expected: first.policy.state_dim(),
                    got: m.policy.state_dim(),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.weight).collect()
    }

    pub fn members(&self) -> impl Iterator<Item = (&Arc<P>, f64)> {
        self.members.iter().map(|m| (&m.policy, m.weight))
    }

    /// Members as trait objects, for stochastic roll-outs.
    pub fn weighted_members(&self) -> Vec<(&dyn Policy, f64)> {
        self.members
            .iter()
            .map(|m| (m.policy.as_ref() as &dyn Policy, m.weight))
            .collect()
    }
}

impl<P: Policy> Policy for EnsemblePolicy<P> {
    fn state_dim(&self) -> usize {
        self.members[0].policy.state_dim()
    }
    fn action_dim(&self) -> usize {
        self.members[0].policy.action_dim()
    }
    fn action_bound(&self) -> f64 {
        self.members[0].policy.action_bound()
    }
    fn act(&self, state: &State) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.action_dim()];
        for m in &self.members {
            let a = m.policy.act(state)?;
            for (o, v) in out.iter_mut().zip(a) {
                *o += m.weight * v;
            }
        }
        let bound = self.action_bound();
        for v in &mut out {
            *v = v.clamp(0.0, bound);
        }
        Ok(out)
    }
}

/// `π_new = β π̂ + (1 - β) π_prev`, kept as an explicit weighted ensemble.
///
/// Previous weights are scaled by `1 - β` and the new member is appended with
/// weight `β`. Members whose weight drops below [`PRUNE_WEIGHT`] are removed
/// and, only in that case, the rest are renormalized.
pub fn interpolate<P: Policy>(
    prev: &EnsemblePolicy<P>,
    new_policy: Arc<P>,
    beta: f64,
) -> Result<EnsemblePolicy<P>> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(SimileError::Config(format!(
            "beta must lie in [0, 1], got {beta}"
        )));
    }
    let mut members: Vec<Member<P>> = prev
        .members
        .iter()
        .map(|m| Member {
            weight: m.weight * (1.0 - beta),
            policy: Arc::clone(&m.policy),
        })
        .collect();
    members.push(Member {
        weight: beta,
        policy: new_policy,
    });
    let before = members.len();
    members.retain(|m| m.weight >= PRUNE_WEIGHT);
    if members.len() != before {
        let total: f64 = members.iter().map(|m| m.weight).sum();
        for m in &mut members {
            m.weight /= total;
        }
    }
    let out = EnsemblePolicy { members };
    out.validate()?;
    Ok(out)
}

/// Actions of a roll-out, plus the visited states when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutResult {
    pub actions: Vec<Vec<f64>>,
    pub states: Option<Vec<State>>,
}

fn check_rollout_inputs<P: Policy + ?Sized>(
    policy: &P,
    contexts: &[Vec<f64>],
    initial: &[f64],
    layout: StateLayout,
) -> Result<()> {
    if contexts.is_empty() {
        return Err(SimileError::Config(
            "roll-out needs at least one context".into(),
        ));
    }
    if layout.state_dim() != policy.state_dim() {
        return Err(SimileError::Dimension {
            what: "state layout vs policy",
            expected: policy.state_dim(),
            got: layout.state_dim(),
        });
    }
    if initial.len() != layout.action_dim || policy.action_dim() != layout.action_dim {
        return Err(SimileError::Dimension {
            what: "initial action",
            expected: policy.action_dim(),
            got: initial.len(),
        });
    }
    if let Some(x) = contexts.iter().find(|x| x.len() != layout.context_dim) {
        return Err(SimileError::Dimension {
            what: "context vector",
            expected: layout.context_dim,
            got: x.len(),
        });
    }
    Ok(())
}

/// Runs `policy` along `contexts`, feeding its own actions back into the
/// state. History before the first step uses `initial` as the action.
pub fn rollout_det<P: Policy + ?Sized>(
    policy: &P,
    contexts: &[Vec<f64>],
    initial: &[f64],
    layout: StateLayout,
    keep_states: bool,
) -> Result<RolloutResult> {
    check_rollout_inputs(policy, contexts, initial, layout)?;
    let mut actions: Vec<Vec<f64>> = Vec::with_capacity(contexts.len());
    let mut states = keep_states.then(|| Vec::with_capacity(contexts.len()));
    for i in 0..contexts.len() {
        let s = layout.build(contexts, &actions, initial, i);
        let a = policy.act(&s)?;
        actions.push(a);
        if let Some(log) = states.as_mut() {
            log.push(s);
        }
    }
    Ok(RolloutResult { actions, states })
}

/// Stochastic interpolation: at every step one member is drawn with
/// probability equal to its weight and acts alone.
pub fn rollout_sto(
    members: &[(&dyn Policy, f64)],
    contexts: &[Vec<f64>],
    initial: &[f64],
    layout: StateLayout,
    seed: u64,
) -> Result<RolloutResult> {
    if members.is_empty() {
        return Err(SimileError::Config("no members to sample from".into()));
    }
    if members.iter().any(|(_, w)| !(*w >= 0.0)) {
        return Err(SimileError::Config("member weights must be >= 0".into()));
    }
    let total: f64 = members.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(SimileError::Config(format!(
            "member weights sum to {total}, not 1"
        )));
    }
    for (p, _) in members {
        check_rollout_inputs(*p, contexts, initial, layout)?;
    }
    let last_live = members
        .iter()
        .rposition(|(_, w)| *w > 0.0)
        .unwrap_or(members.len() - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut actions: Vec<Vec<f64>> = Vec::with_capacity(contexts.len());
    let mut states = Vec::with_capacity(contexts.len());
    for i in 0..contexts.len() {
        let s = layout.build(contexts, &actions, initial, i);
        let u: f64 = rng.random();
        let mut cum = 0.0;
        let mut pick = last_live;
        for (idx, (_, w)) in members.iter().enumerate() {
            cum += w;
            if u < cum {
                pick = idx;
                break;
            }
        }
        actions.push(members[pick].0.act(&s)?);
        states.push(s);
    }
    Ok(RolloutResult {
        actions,
        states: Some(states),
    })
}

#[derive(Serialize, Deserialize)]
struct PolicyDocument {
    format: String,
    version: u32,
    layout: StateLayout,
    policy: EnsemblePolicy<SmoothForest>,
}

/// Serializes a forest ensemble and the state layout it expects.
pub fn policy_to_json(
    policy: &EnsemblePolicy<SmoothForest>,
    layout: StateLayout,
) -> Result<String> {
    let doc = PolicyDocument {
        format: POLICY_FORMAT.into(),
        version: POLICY_VERSION,
        layout,
        policy: policy.clone(),
    };
    Ok(serde_json::to_string(&doc)?)
}

pub fn policy_from_json(text: &str) -> Result<(EnsemblePolicy<SmoothForest>, StateLayout)> {
    let doc: PolicyDocument = serde_json::from_str(text)?;
    if doc.format != POLICY_FORMAT || doc.version != POLICY_VERSION {
        return Err(SimileError::Format(format!(
            "expected {POLICY_FORMAT} v{POLICY_VERSION}, found {} v{}",
            doc.format, doc.version
        )));
    }
    doc.policy.validate()?;
    if doc.layout.state_dim() != doc.policy.state_dim() {
        return Err(SimileError::Dimension {
            what: "policy layout",
            expected: doc.policy.state_dim(),
            got: doc.layout.state_dim(),
        });
    }
    Ok((doc.policy, doc.layout))
}

pub fn save_policy(
    path: &Path,
    policy: &EnsemblePolicy<SmoothForest>,
    layout: StateLayout,
) -> Result<()> {
    let text = policy_to_json(policy, layout)?;
    fs::write(path, text).map_err(|e| SimileError::io(path, e))
}

pub fn load_policy(path: &Path) -> Result<(EnsemblePolicy<SmoothForest>, StateLayout)> {
    let text = fs::read_to_string(path).map_err(|e| SimileError::io(path, e))?;
    policy_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64) -> Arc<AffinePolicy> {
        Arc::new(AffinePolicy::scalar(0.0, v, 0.0, 1.0))
    }

    #[test]
    fn interpolate_zero_beta_is_noop() {
        let prev = EnsemblePolicy::singleton(constant(0.2));
        let next = interpolate(&prev, constant(0.8), 0.0).unwrap();
        assert_eq!(next, prev);
    }

    #[test]
    fn interpolate_unit_beta_replaces() {
        let prev = EnsemblePolicy::singleton(constant(0.2));
        let next = interpolate(&prev, constant(0.8), 1.0).unwrap();
        assert_eq!(next.weights(), vec![1.0]);
        let s = State::from_parts(&[0.0], &[0.0]);
        assert_eq!(next.act(&s).unwrap(), vec![0.8]);
    }

    #[test]
    fn interpolate_quarter() {
        let prev = EnsemblePolicy::singleton(constant(0.2));
        let next = interpolate(&prev, constant(0.8), 0.25).unwrap();
        assert_eq!(next.weights(), vec![0.75, 0.25]);
    }

    #[test]
    fn interpolate_rejects_bad_beta() {
        let prev = EnsemblePolicy::singleton(constant(0.2));
        assert!(interpolate(&prev, constant(0.8), 1.5).is_err());
        assert!(interpolate(&prev, constant(0.8), -0.1).is_err());
    }

    #[test]
    fn ensemble_rejects_non_simplex() {
        assert!(EnsemblePolicy::new(vec![(constant(0.1), 0.5), (constant(0.2), 0.6)]).is_err());
        assert!(EnsemblePolicy::new(vec![(constant(0.1), 1.5), (constant(0.2), -0.5)]).is_err());
        assert!(EnsemblePolicy::<AffinePolicy>::new(vec![]).is_err());
    }

    #[test]
    fn example_two_closed_form_rollout() {
        // (x + a) / 2
        let pi = AffinePolicy::scalar(1.0, 0.0, 1.0, 10.0);
        let layout = pi.layout;
        let contexts = vec![vec![2.0]; 3];
        let out = rollout_det(&pi, &contexts, &[0.0], layout, false).unwrap();
        assert_eq!(out.actions, vec![vec![1.0], vec![1.5], vec![1.75]]);
    }

    #[test]
    fn constant_leaf_policy_ignores_history() {
        let pi = constant(0.3);
        let layout = pi.layout;
        let contexts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let out = rollout_det(pi.as_ref(), &contexts, &[0.9], layout, true).unwrap();
        assert!(out.actions.iter().all(|a| a == &vec![0.3]));
        assert_eq!(out.states.unwrap().len(), 5);
    }

    #[test]
    fn rollout_rejects_layout_mismatch() {
        let pi = constant(0.3);
        let layout = StateLayout {
            context_dim: 1,
            action_dim: 1,
            p: 1,
            q: 1,
        };
        assert!(rollout_det(pi.as_ref(), &[vec![0.0]], &[0.0], layout, false).is_err());
    }

    #[test]
    fn single_member_stochastic_matches_deterministic() {
        let pi = AffinePolicy::scalar(0.6, 0.1, 2.0, 1.0);
        let layout = pi.layout;
        let contexts: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64 * 0.3).sin().abs()])
            .collect();
        let det = rollout_det(&pi, &contexts, &[0.5], layout, false).unwrap();
        let sto = rollout_sto(&[(&pi as &dyn Policy, 1.0)], &contexts, &[0.5], layout, 9).unwrap();
        assert_eq!(det.actions, sto.actions);
    }

    #[test]
    fn zero_weight_member_is_never_drawn() {
        let a = AffinePolicy::scalar(0.0, 0.2, 0.0, 1.0);
        let b = AffinePolicy::scalar(0.0, 0.9, 0.0, 1.0);
        let layout = a.layout;
        let contexts = vec![vec![0.0]; 50];
        let sto = rollout_sto(
            &[(&a as &dyn Policy, 1.0), (&b as &dyn Policy, 0.0)],
            &contexts,
            &[0.5],
            layout,
            1,
        )
        .unwrap();
        assert!(sto.actions.iter().all(|x| x == &vec![0.2]));
    }
}
