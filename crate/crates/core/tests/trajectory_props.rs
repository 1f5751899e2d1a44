use std::fs;

use simile::metrics::smoothness;
use simile::trajectory::{
    load_trajectory, save_trajectory, synth_expert, LoadOptions, SynthConfig, TrajectoryFormat,
};
use simile::SimileError;

#[test]
fn two_row_csv_without_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two.csv");
    fs::write(&path, "1,0.5\n2,0.6\n").unwrap();
    let traj = load_trajectory(&path, TrajectoryFormat::Csv, LoadOptions::default()).unwrap();
    assert_eq!(traj.len(), 2);
    assert_eq!(traj.contexts(), &[vec![1.0], vec![2.0]]);
    assert_eq!(traj.actions(), &[vec![0.5], vec![0.6]]);
}

#[test]
fn empty_file_reports_no_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    fs::write(&path, "").unwrap();
    let err = load_trajectory(&path, TrajectoryFormat::Csv, LoadOptions::default()).unwrap_err();
    assert!(matches!(err, SimileError::Empty { .. }));
    assert!(err.to_string().contains("no rows"));
}

#[test]
fn out_of_range_action_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "x_1,a_1\n0.1,0.5\n0.2,-1\n").unwrap();
    let err = load_trajectory(&path, TrajectoryFormat::Csv, LoadOptions::default()).unwrap_err();
    match err {
        SimileError::Parse { line, .. } => assert_eq!(line, 3),
        other => panic!("unexpected {other}"),
    }

    let jsonl = dir.path().join("bad.jsonl");
    fs::write(
        &jsonl,
        "{\"x\":[0.1],\"a\":[0.5]}\n{\"x\":[0.2],\"a\":[-1]}\n",
    )
    .unwrap();
    let err =
        load_trajectory(&jsonl, TrajectoryFormat::JsonLines, LoadOptions::default()).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn ragged_rows_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ragged.csv");
    fs::write(&path, "x_1,x_2,a_1\n0.1,0.2,0.5\n0.1,0.5\n").unwrap();
    let err = load_trajectory(&path, TrajectoryFormat::Csv, LoadOptions::default()).unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
}

#[test]
fn missing_file_names_the_path() {
    let err = load_trajectory(
        std::path::Path::new("/nonexistent/demo.csv"),
        TrajectoryFormat::Csv,
        LoadOptions::default(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("/nonexistent/demo.csv"));
}

#[test]
fn both_formats_round_trip() {
    let traj = synth_expert(&SynthConfig {
        horizon: 50,
        context_dim: 2,
        seed: 5,
        ..SynthConfig::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (name, format) in [
        ("t.csv", TrajectoryFormat::Csv),
        ("t.jsonl", TrajectoryFormat::JsonLines),
    ] {
        let path = dir.path().join(name);
        save_trajectory(&traj, &path, format).unwrap();
        assert_eq!(TrajectoryFormat::from_path(&path), format);
        let back = load_trajectory(&path, format, LoadOptions::default()).unwrap();
        assert_eq!(back, traj);
    }
}

#[test]
fn synthetic_trajectories_respect_invariants() {
    for seed in 0..120 {
        let cfg = SynthConfig {
            seed,
            horizon: 2 + (seed as usize * 7) % 150,
            noise_std: 0.01 * (seed % 5) as f64,
            smoothing_halflife: (seed % 9) as f64,
            action_bound: 0.5 + (seed % 3) as f64,
            ..SynthConfig::default()
        };
        let traj = synth_expert(&cfg).unwrap();
        assert_eq!(traj.len(), cfg.horizon);
        assert_eq!(traj.contexts().len(), traj.actions().len());
        for a in traj.actions().iter().flatten() {
            assert!((0.0..=cfg.action_bound).contains(a), "seed {seed}: {a}");
        }
        assert!(traj.contexts().iter().flatten().all(|v| v.is_finite()));
        assert_eq!(synth_expert(&cfg).unwrap(), traj);
    }
}

#[test]
fn longer_halflife_is_smoother() {
    for seed in 0..20 {
        let at = |halflife| {
            let traj = synth_expert(&SynthConfig {
                seed,
                smoothing_halflife: halflife,
                ..SynthConfig::default()
            })
            .unwrap();
            smoothness(traj.actions()).unwrap()
        };
        assert!(at(20.0) < at(1.0), "seed {seed}");
        let mut last = f64::INFINITY;
        for h in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0] {
            let s = at(h);
            assert!(s <= last, "seed {seed}, halflife {h}");
            last = s;
        }
    }
}
