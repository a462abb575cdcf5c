use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fleetsample::field::{format_field, gaussian_mixture_field, GaussianMixtureSpec};
use fleetsample_cli::commands::smooth_rows;
use fleetsample_cli::io::{self, TrajectoryRow};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fleetsample"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

/// Trains a small policy once per test into `dir/policy`.
fn policy(dir: &Path) -> PathBuf {
    let out = dir.join("policy");
    let o = run(&[
        "train", "--out", &s(&out), "--width", "15", "--height", "15", "--iterations", "5", "--rollouts", "4",
        "--horizon", "40", "--seed", "3",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out.join("params.txt")
}

fn simulate(dir: &Path, params: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "simulate".to_string(),
        "--out".into(),
        s(dir),
        "--params".into(),
        s(params),
        "--width".into(),
        "15".into(),
        "--height".into(),
        "15".into(),
    ];
    args.extend(extra.iter().map(|a| a.to_string()));
    bin().args(&args).output().unwrap()
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["simulate", "--help"])), 0);
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["launch"])), 1);
    assert_eq!(code(&run(&["simulate", "--policy", "oracle"])), 1);
    assert_eq!(code(&run(&["simulate", "--robots", "two"])), 1);
    let o = run(&["simulate", "--policy", "maxima", "--fail", "1-75"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("id:step"));
    // pg without a parameter file is a usage problem.
    assert_eq!(code(&run(&["simulate", "--trials", "1"])), 1);
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let o = run(&["simulate", "--params", &s(&missing), "--out", &s(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.txt"));
    let o = run(&["smooth", "--input", &s(&missing), "--out", &s(dir.path())]);
    assert_eq!(code(&o), 2);
}

#[test]
fn layout_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let params = policy(dir.path());
    let o = simulate(&dir.path().join("sim"), &params, &["--mode", "heading", "--trials", "1"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("mode=4conn") && err.contains("mode=heading"), "{err}");
}

#[test]
fn single_robot_ignores_communication() {
    let dir = tempfile::tempdir().unwrap();
    let params = policy(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, range) in [(&a, "0"), (&b, "1")] {
        let o = simulate(out, &params, &["--robots", "1", "--comm-range", range, "--trials", "3", "--seed", "5"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ta = std::fs::read(a.join("trajectories.csv")).unwrap();
    assert_eq!(ta, std::fs::read(b.join("trajectories.csv")).unwrap());
    assert!(!ta.is_empty());
}

#[test]
fn failed_robot_stops_at_its_step() {
    let dir = tempfile::tempdir().unwrap();
    let params = policy(dir.path());
    let out = dir.path().join("sim");
    let o = simulate(&out, &params, &["--robots", "2", "--horizon", "150", "--fail", "1:75", "--trials", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = io::read_trajectories(&out.join("trajectories.csv")).unwrap();
    assert!(rows.iter().filter(|r| r.robot == 1).all(|r| r.t < 75));
    assert!(rows.iter().any(|r| r.robot == 1 && r.t == 74));
    assert!(rows.iter().any(|r| r.robot == 0 && r.t == 150));
}

#[test]
fn outputs_round_trip_and_count_trials() {
    let dir = tempfile::tempdir().unwrap();
    let params = policy(dir.path());
    io::load_params(&params).unwrap();
    io::read_curve(&params.with_file_name("curve.csv")).unwrap();
    let out = dir.path().join("sim");
    let o = simulate(&out, &params, &["--trials", "7", "--starts", "corners", "--shaping", "distance"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = io::read_metrics(&out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.len(), 7);
    let rows = io::read_trajectories(&out.join("trajectories.csv")).unwrap();
    for m in &metrics {
        let collected: f64 = rows.iter().filter(|r| r.trial == m.trial).map(|r| r.reward).sum();
        assert!((collected - m.undiscounted_reward).abs() < 1e-9);
    }
    let o = run(&["smooth", "--input", &s(&out.join("trajectories.csv")), "--out", &s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let smooth = io::read_trajectories(&out.join("smoothed.csv")).unwrap();
    assert_eq!(smooth.len(), rows.len());
}

#[test]
fn config_file_and_field_file() {
    let dir = tempfile::tempdir().unwrap();
    let field = gaussian_mixture_field(
        12,
        10,
        &GaussianMixtureSpec::new(vec![GaussianMixtureSpec::isotropic([3.0, 4.0], 2.0, 1.0)]),
    )
    .unwrap();
    let field_path = dir.path().join("field.csv");
    std::fs::write(&field_path, format_field(&field)).unwrap();
    let out = dir.path().join("sweep");
    let config = dir.path().join("run.cfg");
    std::fs::write(
        &config,
        format!(
            "# darp sweep\nseed=4\ntrials=3\nout={}\nfield.source={}\nfleet.policy=darp_lite\nfleet.horizon=40\n\
             fleet.starts=corners\nsweep.comm_ranges=0,0.5\nsweep.team_sizes=1,3\n",
            s(&out),
            s(&field_path)
        ),
    )
    .unwrap();
    let o = run(&["sweep", "--config", &s(&config), "--trials", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = io::read_sweep(&out.join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.trials == 2 && r.policy == "darp_lite"));
    assert_eq!(io::read_metrics(&out.join("sweep_trials.csv")).unwrap().len(), 8);

    std::fs::write(&config, "fleet.robotz=2\n").unwrap();
    let o = run(&["sweep", "--config", &s(&config)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("fleet.robotz"));
}

fn path_rows(values: &[[f64; 2]]) -> Vec<TrajectoryRow> {
    values
        .iter()
        .enumerate()
        .map(|(t, p)| TrajectoryRow {
            trial: 0,
            robot: 0,
            t,
            row: p[0],
            col: p[1],
            action: "N".into(),
            reward: 0.0,
        })
        .collect()
}

fn smoothed(values: &[[f64; 2]]) -> Vec<[f64; 2]> {
    smooth_rows(&path_rows(values), 7, 3).unwrap().iter().map(|r| [r.row, r.col]).collect()
}

#[test]
fn smoothing_is_linear_and_composes_as_its_matrix() {
    let n = 15;
    let x: Vec<[f64; 2]> = (0..n).map(|i| [(i as f64 * 0.9).sin() * 4.0, (i * i % 7) as f64]).collect();
    let y: Vec<[f64; 2]> = (0..n).map(|i| [(i % 3) as f64, (i as f64).sqrt()]).collect();
    let (a, b) = (1.7, -0.4);
    let combo: Vec<[f64; 2]> = x.iter().zip(&y).map(|(p, q)| [a * p[0] + b * q[0], a * p[1] + b * q[1]]).collect();
    let (sx, sy, sc) = (smoothed(&x), smoothed(&y), smoothed(&combo));
    for i in 0..n {
        for d in 0..2 {
            assert!((sc[i][d] - (a * sx[i][d] + b * sy[i][d])).abs() < 1e-12);
        }
    }
    // Column j of the operator is the response to the unit impulse e_j.
    let matrix: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let impulse: Vec<[f64; 2]> = (0..n).map(|i| [if i == j { 1.0 } else { 0.0 }, 0.0]).collect();
            smoothed(&impulse).iter().map(|p| p[0]).collect()
        })
        .collect();
    let apply = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| matrix[j][i] * v[j]).sum()).collect() };
    let rows: Vec<f64> = x.iter().map(|p| p[0]).collect();
    let twice: Vec<f64> = smoothed(&smoothed(&x)).iter().map(|p| p[0]).collect();
    let squared = apply(&apply(&rows));
    for i in 0..n {
        assert!((twice[i] - squared[i]).abs() < 1e-10, "{i}: {} vs {}", twice[i], squared[i]);
    }
}

#[test]
fn straight_line_paths_are_unchanged() {
    let line: Vec<[f64; 2]> = (0..20).map(|t| [3.0 + 0.5 * t as f64, 10.0 - t as f64]).collect();
    for (p, q) in smoothed(&line).iter().zip(&line) {
        assert!((p[0] - q[0]).abs() < 1e-9 && (p[1] - q[1]).abs() < 1e-9);
    }
}
