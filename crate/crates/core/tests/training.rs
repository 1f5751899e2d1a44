use proptest::prelude::*;
use simile::autoregressor::LinearAutoregressor;
use simile::experiments::{poor_start, reference_synth, reference_training};
use simile::simile::{
    feedback_descent, gen_feedback, train_with, BetaMode, SigmaSchedule, TrainingConfig,
};
use simile::trajectory::{synth_expert, SynthConfig};

fn short_task(seed: u64) -> simile::trajectory::Trajectory {
    synth_expert(&SynthConfig {
        horizon: 120,
        ..reference_synth(seed)
    })
    .unwrap()
}

proptest! {
    #[test]
    fn autoregressor_is_linear(
        c in prop::collection::vec(-2.0f64..2.0, 1..5),
        u in prop::collection::vec(-1.0f64..1.0, 5),
        v in prop::collection::vec(-1.0f64..1.0, 5),
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
    ) {
        let tau = c.len();
        let h = LinearAutoregressor::new(vec![c], 0.0).unwrap();
        let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| alpha * x + beta * y).collect();
        let lhs = h.predict_window(&mix[..tau]).unwrap()[0];
        let rhs = alpha * h.predict_window(&u[..tau]).unwrap()[0] + beta * h.predict_window(&v[..tau]).unwrap()[0];
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn feedback_never_points_away_from_the_expert(
        pairs in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..60),
        sigma in 0.0f64..=1.0,
    ) {
        let rolled: Vec<Vec<f64>> = pairs.iter().map(|p| vec![p.0]).collect();
        let expert: Vec<Vec<f64>> = pairs.iter().map(|p| vec![p.1]).collect();
        let targets = gen_feedback(&rolled, &expert, sigma, 1.0).unwrap();
        prop_assert!(feedback_descent(&rolled, &expert, &targets) <= 0.0);
    }
}

#[test]
fn every_iteration_descends() {
    for seed in 0..3 {
        let traj = short_task(seed);
        for schedule in [
            SigmaSchedule::Geometric {
                initial: 0.8,
                decay: 0.5,
            },
            SigmaSchedule::Constant(0.5),
            SigmaSchedule::Zero,
        ] {
            let cfg = TrainingConfig {
                n_iterations: 4,
                sigma_schedule: schedule,
                ..reference_training(seed)
            };
            let out = train_with(std::slice::from_ref(&traj), &cfg, None, &mut |_| Ok(())).unwrap();
            assert!(out.records.iter().all(|r| r.feedback_descent <= 0.0));
        }
    }
}

#[test]
fn runs_repeat_bit_for_bit() {
    let traj = short_task(7);
    let cfg = TrainingConfig {
        n_iterations: 4,
        ..reference_training(7)
    };
    let run = || {
        let start = poor_start(&traj, &cfg).unwrap();
        train_with(std::slice::from_ref(&traj), &cfg, Some(start), &mut |_| {
            Ok(())
        })
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.records, b.records);
    assert_eq!(a.policy, b.policy);
}

#[test]
fn error_bookkeeping_chains() {
    let traj = short_task(1);
    let cfg = TrainingConfig {
        n_iterations: 5,
        beta_mode: BetaMode::Fixed(0.3),
        ..reference_training(1)
    };
    let out = train_with(std::slice::from_ref(&traj), &cfg, None, &mut |_| Ok(())).unwrap();
    assert_eq!(out.records[0].error_old, out.initial_error);
    for w in out.records.windows(2) {
        assert_eq!(w[1].error_old, w[0].combined_error);
    }
    assert_eq!(out.records.last().unwrap().members, 6);
    let curve = out.error_curve();
    assert_eq!(curve.len(), 6);
}

#[test]
fn several_demonstrations_share_one_policy() {
    let trajs: Vec<_> = (0..3).map(short_task).collect();
    let cfg = TrainingConfig {
        n_iterations: 2,
        ..reference_training(0)
    };
    let out = train_with(&trajs, &cfg, None, &mut |_| Ok(())).unwrap();
    assert_eq!(out.records.len(), 2);
    assert!(out.records.iter().all(|r| r.combined_error.is_finite()));
}
