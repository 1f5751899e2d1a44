use std::sync::Arc;

use proptest::prelude::*;
use simile::experiments::{reference_synth, reference_training};
use simile::policy::{
    interpolate, load_policy, rollout_det, rollout_sto, save_policy, AffinePolicy, EnsemblePolicy,
    Policy,
};
use simile::simile::{simile_train, TrainingConfig};
use simile::trajectory::synth_expert;

fn affine(i: usize) -> Arc<AffinePolicy> {
    Arc::new(AffinePolicy::scalar(0.1 * i as f64, 0.05, 1.0, 1.0))
}

proptest! {
    #[test]
    fn weights_follow_the_closed_form(betas in prop::collection::vec(0.01f64..0.99, 1..12)) {
        let mut ensemble = EnsemblePolicy::singleton(affine(0));
        for (i, &b) in betas.iter().enumerate() {
            ensemble = interpolate(&ensemble, affine(i + 1), b).unwrap();
        }
        let weights = ensemble.weights();
        prop_assert_eq!(weights.len(), betas.len() + 1);
        for (j, w) in weights.iter().enumerate() {
            let mut want = if j == 0 { 1.0 } else { betas[j - 1] };
            for b in &betas[j..] {
                want *= 1.0 - b;
            }
            prop_assert_eq!(*w, want);
        }
        let total: f64 = weights.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn stochastic_rollout_is_reproducible(seed in any::<u64>(), w in 0.0f64..=1.0) {
        let (a, b) = (affine(2), affine(7));
        let members: Vec<(&dyn Policy, f64)> = vec![(a.as_ref(), w), (b.as_ref(), 1.0 - w)];
        let contexts: Vec<Vec<f64>> = (0..30).map(|t| vec![(t as f64 * 0.3).sin().abs()]).collect();
        let layout = simile::trajectory::StateLayout { context_dim: 1, action_dim: 1, p: 0, q: 1 };
        let first = rollout_sto(&members, &contexts, &[0.2], layout, seed).unwrap();
        let second = rollout_sto(&members, &contexts, &[0.2], layout, seed).unwrap();
        prop_assert_eq!(first, second);
    }
}

#[test]
fn zero_weight_mixture_is_the_previous_policy() {
    let (old, new) = (affine(3), affine(8));
    let contexts: Vec<Vec<f64>> = (0..25).map(|t| vec![t as f64 / 25.0]).collect();
    let layout = old.layout;
    let members: Vec<(&dyn Policy, f64)> = vec![(old.as_ref(), 1.0), (new.as_ref(), 0.0)];
    for seed in 0..5 {
        let sto = rollout_sto(&members, &contexts, &[0.0], layout, seed).unwrap();
        let det = rollout_det(old.as_ref(), &contexts, &[0.0], layout, false).unwrap();
        assert_eq!(sto.actions, det.actions);
    }
}

#[test]
fn rollout_det_stays_in_bounds_and_repeats() {
    let mut ensemble = EnsemblePolicy::singleton(affine(9));
    ensemble = interpolate(
        &ensemble,
        Arc::new(AffinePolicy::scalar(3.0, 0.5, 0.2, 1.0)),
        0.5,
    )
    .unwrap();
    let contexts: Vec<Vec<f64>> = (0..50)
        .map(|t| vec![(t as f64 * 0.7).cos() * 2.0])
        .collect();
    let layout = affine(0).layout;
    let a = rollout_det(&ensemble, &contexts, &[0.5], layout, true).unwrap();
    let b = rollout_det(&ensemble, &contexts, &[0.5], layout, true).unwrap();
    assert_eq!(a, b);
    assert!(a.actions.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    assert_eq!(a.states.unwrap().len(), 50);
}

#[test]
fn trained_policy_survives_a_file_round_trip() {
    let traj = synth_expert(&simile::trajectory::SynthConfig {
        horizon: 80,
        ..reference_synth(2)
    })
    .unwrap();
    let cfg = TrainingConfig {
        n_iterations: 3,
        ..reference_training(2)
    };
    let out = simile_train(&traj, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.json");
    save_policy(&path, &out.policy, out.layout).unwrap();
    let (back, layout) = load_policy(&path).unwrap();
    assert_eq!(layout, out.layout);
    assert_eq!(back, out.policy);
    let a = rollout_det(
        &out.policy,
        traj.contexts(),
        &traj.actions()[0],
        layout,
        false,
    )
    .unwrap();
    let b = rollout_det(&back, traj.contexts(), &traj.actions()[0], layout, false).unwrap();
    assert_eq!(a.actions, b.actions);
}

#[test]
fn corrupt_policy_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"format":"something-else","version":1}"#).unwrap();
    assert!(load_policy(&path).is_err());
}
