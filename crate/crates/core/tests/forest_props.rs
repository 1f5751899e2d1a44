use proptest::prelude::*;
use simile::autoregressor::LinearAutoregressor;
use simile::experiments::{reference_synth, reference_training};
use simile::forest::{train_forest, ForestConfig, SmoothForest};
use simile::metrics::smoothness;
use simile::policy::{rollout_det, EnsemblePolicy, Policy};
use simile::simile::{initial_forest, TrainingConfig};
use simile::trajectory::{synth_expert, State};
use std::sync::Arc;

fn single_leaf(lambda: f64, value: f64, coeffs: Vec<f64>) -> SmoothForest {
    let states: Vec<State> = (0..4)
        .map(|i| State::from_parts(&[i as f64 / 4.0], &vec![0.3; coeffs.len()]))
        .collect();
    let targets = vec![vec![value]; 4];
    let cfg = ForestConfig {
        n_trees: 1,
        max_depth: 0,
        min_samples_leaf: 1,
        bootstrap: false,
        leaf_mode: simile::forest::LeafMode::Joint,
        ..ForestConfig::default()
    };
    let h = LinearAutoregressor::new(vec![coeffs], 0.0).unwrap();
    train_forest(&states, &targets, &h, lambda, &cfg, 1.0).unwrap()
}

#[test]
fn huge_lambda_follows_the_autoregressor() {
    let forest = single_leaf(1e6, 0.9, vec![0.5, 0.4]);
    for a in [0.0, 0.2, 0.7, 1.0] {
        let s = State::from_parts(&[0.5], &[a, 0.6]);
        let want = 0.5 * a + 0.4 * 0.6;
        assert!((forest.predict(&s).unwrap()[0] - want).abs() < 1e-4);
    }
}

#[test]
fn zero_lambda_single_leaf_ignores_the_state() {
    let forest = single_leaf(0.0, 0.35, vec![1.0]);
    for x in [0.0, 0.5, 3.0] {
        let s = State::from_parts(&[x], &[x / 3.0]);
        assert_eq!(forest.predict(&s).unwrap(), vec![0.35]);
    }
}

proptest! {
    #[test]
    fn sensitivity_to_previous_action_is_lambda_share(
        lambda in 0.0f64..20.0,
        a in 0.05f64..0.95,
        b in 0.05f64..0.95,
    ) {
        prop_assume!((a - b).abs() > 1e-3);
        let forest = single_leaf(lambda, 0.5, vec![1.0]);
        let pa = forest.predict_unclamped(&State::from_parts(&[0.5], &[a])).unwrap()[0];
        let pb = forest.predict_unclamped(&State::from_parts(&[0.5], &[b])).unwrap()[0];
        let ratio = (pa - pb).abs() / (a - b).abs();
        prop_assert!((ratio - lambda / (1.0 + lambda)).abs() < 1e-9);
    }

    #[test]
    fn predictions_stay_in_the_action_box(x in -5.0f64..5.0, a in -3.0f64..3.0) {
        let forest = single_leaf(2.0, 0.9, vec![1.5]);
        let v = forest.predict(&State::from_parts(&[x], &[a])).unwrap()[0];
        prop_assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn json_round_trip_is_lossless() {
    let traj = synth_expert(&reference_synth(3)).unwrap();
    let cfg = reference_training(3);
    let forest = initial_forest(std::slice::from_ref(&traj), &cfg).unwrap();
    let back = SmoothForest::from_json(&forest.to_json().unwrap()).unwrap();
    assert_eq!(forest, back);
    for s in traj.expert_states(cfg.p, cfg.q) {
        assert_eq!(forest.predict(&s).unwrap(), back.predict(&s).unwrap());
    }
}

#[test]
fn training_is_bit_identical_across_runs() {
    let traj = synth_expert(&reference_synth(4)).unwrap();
    let cfg = TrainingConfig {
        seed: 9,
        ..TrainingConfig::default()
    };
    let a = initial_forest(std::slice::from_ref(&traj), &cfg).unwrap();
    let b = initial_forest(std::slice::from_ref(&traj), &cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn dimension_mismatch_is_rejected() {
    let forest = single_leaf(1.0, 0.5, vec![1.0]);
    assert!(forest
        .predict(&State::from_parts(&[0.5, 0.1], &[0.2]))
        .is_err());
}

#[test]
fn larger_lambda_gives_smoother_rollouts() {
    for seed in 0..5 {
        let traj = synth_expert(&reference_synth(seed)).unwrap();
        let mut last = f64::INFINITY;
        for lambda in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let cfg = TrainingConfig {
                lambda,
                ..reference_training(seed)
            };
            let forest = initial_forest(std::slice::from_ref(&traj), &cfg).unwrap();
            let policy = EnsemblePolicy::singleton(Arc::new(forest));
            let out = rollout_det(
                &policy,
                traj.contexts(),
                &traj.actions()[0],
                traj.layout(cfg.p, cfg.q),
                false,
            )
            .unwrap();
            let s = smoothness(&out.actions).unwrap();
            assert!(s <= last, "λ={lambda}: {s} > {last}");
            assert!(out
                .actions
                .iter()
                .flatten()
                .all(|v| (0.0..=policy.action_bound()).contains(v)));
            last = s;
        }
    }
}
