//! The four subcommands. Each is a deterministic function of its
//! configuration: trials draw their seeds from `(seed, trial index)` and run
//! in parallel, but results are collected in trial order before writing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use fleetsample::analysis::{
    aggregate, path_overlap, savgol_smooth, team_discounted_reward, team_undiscounted_reward, MetricSummary,
};
use fleetsample::baselines::{coverage_team, maxima_search_team};
use fleetsample::features::FeatureLayout;
use fleetsample::fleet::simulate_team;
use fleetsample::learn::{train_with_progress, TrainOutcome};
use fleetsample::rng::{derive_seed, tag};
use fleetsample::{Error, FleetConfig, PolicyParams, TeamResult};
use rayon::prelude::*;

use crate::config::{usage, ExperimentConfig, PolicyKind};
use crate::fields::FieldGenerator;
use crate::io::{self, MetricsRow, SweepRow, TrajectoryRow};

pub const PARAMS_FILE: &str = "params.txt";
pub const CURVE_FILE: &str = "curve.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_TRIALS_FILE: &str = "sweep_trials.csv";
pub const SMOOTHED_FILE: &str = "smoothed.csv";

pub const DEFAULT_WINDOW: usize = 7;
pub const DEFAULT_ORDER: usize = 3;

pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(seed, &[tag::TRIAL, trial as u64])
}

fn resolved(config: &ExperimentConfig) -> ExperimentConfig {
    let mut c = config.clone();
    c.resolve();
    c
}

/// Trains from scratch and writes the parameter file and learning curve.
pub fn cmd_train(config: &ExperimentConfig) -> Result<TrainOutcome> {
    let config = resolved(config);
    config.validate_training()?;
    io::ensure_dir(&config.out)?;
    let every = (config.train.iterations / 20).max(1);
    let outcome = train_with_progress(&config.train, |i, mean| {
        if (i + 1) % every == 0 {
            log::info!("iteration {}/{}: mean return {mean:.4}", i + 1, config.train.iterations);
        }
    })?;
    io::save_params(&outcome.params, &config.out.join(PARAMS_FILE))?;
    io::write_curve(&config.out.join(CURVE_FILE), &outcome.curve)?;
    Ok(outcome)
}

/// Loads the policy for `pg` runs and checks it against the run's layout.
fn load_policy(config: &ExperimentConfig, width: usize, height: usize) -> Result<Option<PolicyParams>> {
    if config.policy != PolicyKind::Pg {
        return Ok(None);
    }
    let path = config
        .params
        .as_ref()
        .ok_or_else(|| usage("the pg policy needs a parameter file (--params)"))?;
    let params = io::load_params(path)?;
    let expected = FeatureLayout::for_grid(width, height, config.fleet.mode);
    if params.layout != expected {
        return Err(Error::Config(format!(
            "parameter file {} has layout [{}] but a {width}x{height} grid in this run needs [{}]",
            path.display(),
            io::describe_layout(&params.layout),
            io::describe_layout(&expected)
        ))
        .into());
    }
    Ok(Some(params))
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub metrics: MetricsRow,
    pub result: TeamResult,
}

/// Runs one trial of `fleet` with seeds derived from `(config.seed, trial)`.
pub fn run_trial(
    config: &ExperimentConfig,
    fields: &FieldGenerator,
    params: Option<&PolicyParams>,
    fleet: &FleetConfig,
    trial: usize,
) -> Result<TrialOutcome> {
    let seed = trial_seed(config.seed, trial);
    let truth = fields.generate(seed)?;
    let fleet = FleetConfig { seed, ..fleet.clone() };
    let result = match (config.policy, params) {
        (PolicyKind::Pg, Some(p)) => simulate_team(&truth, p, &fleet)?,
        (PolicyKind::Pg, None) => bail!("the pg policy needs parameters"),
        (PolicyKind::DarpLite, _) => {
            coverage_team(&truth, &fleet.start_cells(truth.width(), truth.height())?, fleet.horizon)?
        }
        (PolicyKind::Maxima, _) => {
            maxima_search_team(&truth, &fleet.start_cells(truth.width(), truth.height())?, fleet.horizon)?
        }
    };
    let overlap = path_overlap(&result);
    let metrics = MetricsRow {
        trial,
        policy: config.policy.label().to_string(),
        robots: fleet.robots,
        comm_range: fleet.comm_range,
        comm_period: fleet.comm_period,
        discounted_reward: team_discounted_reward(&result, config.kappa)?,
        undiscounted_reward: team_undiscounted_reward(&result),
        overlap_count: overlap.count,
        overlap_fraction: overlap.fraction,
        messages: result.total_messages(),
    };
    Ok(TrialOutcome { metrics, result })
}

/// Runs `config.trials` trials in parallel, returned in trial order.
pub fn run_trials(
    config: &ExperimentConfig,
    fields: &FieldGenerator,
    params: Option<&PolicyParams>,
    fleet: &FleetConfig,
) -> Result<Vec<TrialOutcome>> {
    (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, fields, params, fleet, trial).with_context(|| format!("trial {trial}")))
        .collect()
}

/// Simulates `config.trials` team runs and writes trajectories and metrics.
pub fn cmd_simulate(config: &ExperimentConfig) -> Result<Vec<TrialOutcome>> {
    let config = resolved(config);
    config.validate()?;
    let fields = FieldGenerator::new(&config)?;
    let (width, height) = fields.dimensions();
    let params = load_policy(&config, width, height)?;
    io::ensure_dir(&config.out)?;
    let outcomes = run_trials(&config, &fields, params.as_ref(), &config.fleet)?;
    let rows: Vec<TrajectoryRow> = outcomes
        .iter()
        .flat_map(|o| io::trajectory_rows(o.metrics.trial, &o.result))
        .collect();
    let metrics: Vec<MetricsRow> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    io::write_trajectories(&config.out.join(TRAJECTORIES_FILE), &rows)?;
    io::write_metrics(&config.out.join(METRICS_FILE), &metrics)?;
    Ok(outcomes)
}

pub fn summarize(metrics: &[MetricsRow]) -> Result<[MetricSummary; 5]> {
    let columns: Vec<[f64; 5]> = metrics.iter().map(MetricsRow::metric_values).collect();
    let summaries = (0..5)
        .map(|m| aggregate(&columns.iter().map(|c| c[m]).collect::<Vec<_>>()))
        .collect::<fleetsample::Result<Vec<_>>>()?;
    Ok(summaries.try_into().expect("five metrics"))
}

/// Runs every `(K, comm_range)` grid point and writes the aggregated table
/// plus the per-trial metrics behind it.
pub fn cmd_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let config = resolved(config);
    let mut base = config.clone();
    base.fleet.robots = *config.team_sizes.iter().max().unwrap_or(&1);
    base.validate()?;
    let fields = FieldGenerator::new(&config)?;
    let (width, height) = fields.dimensions();
    let params = load_policy(&config, width, height)?;
    io::ensure_dir(&config.out)?;
    let mut rows = Vec::new();
    let mut all = Vec::new();
    for &robots in &config.team_sizes {
        for &comm_range in &config.comm_ranges {
            let point = || format!("grid point K={robots}, comm_range={comm_range}");
            let fleet = FleetConfig {
                robots,
                comm_range,
                failures: config.fleet.failures.iter().copied().filter(|f| f.robot < robots).collect(),
                ..config.fleet.clone()
            };
            let metrics: Vec<MetricsRow> = run_trials(&config, &fields, params.as_ref(), &fleet)
                .with_context(point)?
                .into_iter()
                .map(|o| o.metrics)
                .collect();
            let summaries = summarize(&metrics).with_context(point)?;
            log::info!(
                "K={robots} comm_range={comm_range}: median discounted reward {:.4}, median overlap {}",
                summaries[0].median,
                summaries[2].median
            );
            rows.push(SweepRow::new(config.policy.label(), robots, comm_range, fleet.comm_period, &summaries));
            all.extend(metrics);
        }
    }
    io::write_sweep(&config.out.join(SWEEP_FILE), &rows)?;
    io::write_metrics(&config.out.join(SWEEP_TRIALS_FILE), &all)?;
    Ok(rows)
}

/// Largest odd window that fits a path of `len` points with polynomial `order`.
fn suggested_window(len: usize, order: usize) -> Option<usize> {
    let w = if len % 2 == 1 { len } else { len.saturating_sub(1) };
    (w > order).then_some(w)
}

/// Smooths every `(trial, robot)` path of `rows`; order and schema are kept.
pub fn smooth_rows(rows: &[TrajectoryRow], window: usize, order: usize) -> Result<Vec<TrajectoryRow>> {
    if window % 2 == 0 {
        return Err(usage(format!("smoothing window {window} must be odd")));
    }
    if order >= window {
        return Err(usage(format!("polynomial order {order} must be below the window {window}")));
    }
    let mut paths: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        paths.entry((r.trial, r.robot)).or_default().push(i);
    }
    let mut out = rows.to_vec();
    for ((trial, robot), mut indices) in paths {
        indices.sort_by_key(|&i| rows[i].t);
        if indices.len() < window {
            let hint = match suggested_window(indices.len(), order) {
                Some(w) => format!("; try --window {w}"),
                None => "; the path is too short to smooth at this order".to_string(),
            };
            bail!(
                "trial {trial} robot {robot}: path has {} points, shorter than the window {window}{hint}",
                indices.len()
            );
        }
        let path: Vec<[f64; 2]> = indices.iter().map(|&i| [rows[i].row, rows[i].col]).collect();
        let smooth = savgol_smooth(&path, window, order)?;
        for (&i, p) in indices.iter().zip(smooth) {
            out[i].row = p[0];
            out[i].col = p[1];
        }
    }
    Ok(out)
}

/// Smooths a trajectory file into `<out>/smoothed.csv`.
pub fn cmd_smooth(input: &Path, out: &Path, window: usize, order: usize) -> Result<PathBuf> {
    let rows = io::read_trajectories(input)?;
    if rows.is_empty() {
        return Err(anyhow!("{} has no trajectory rows", input.display()));
    }
    let smoothed = smooth_rows(&rows, window, order).with_context(|| format!("cannot smooth {}", input.display()))?;
    io::ensure_dir(out)?;
    let path = out.join(SMOOTHED_FILE);
    io::write_trajectories(&path, &smoothed)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{FieldSource, UsageError};
    use fleetsample::fleet::Failure;

    fn small(dir: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.apply_text(
            "field.width=9\nfield.height=9\nfleet.horizon=30\ntrials=3\ntrain.iterations=4\n\
             train.rollouts=3\ntrain.horizon=20\ntrain.learning_rate=0.5\n",
        )
        .unwrap();
        c.out = dir.to_path_buf();
        c
    }

    fn trained(dir: &Path) -> ExperimentConfig {
        let mut c = small(dir);
        cmd_train(&c).unwrap();
        c.params = Some(dir.join(PARAMS_FILE));
        c
    }

    #[test]
    fn train_writes_params_and_curve() {
        let dir = tempfile::tempdir().unwrap();
        let c = small(dir.path());
        let outcome = cmd_train(&c).unwrap();
        let params = io::load_params(&dir.path().join(PARAMS_FILE)).unwrap();
        assert_eq!(params, outcome.params);
        assert_eq!(io::read_curve(&dir.path().join(CURVE_FILE)).unwrap(), outcome.curve);
        assert_eq!(outcome.curve.len(), 4);
    }

    #[test]
    fn zero_learning_rate_writes_zero_theta() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(dir.path());
        c.train.learning_rate = 0.0;
        cmd_train(&c).unwrap();
        let params = io::load_params(&dir.path().join(PARAMS_FILE)).unwrap();
        assert!(params.theta.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn simulate_rows_and_failures() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = trained(dir.path());
        c.fleet.failures = vec![Failure { robot: 1, step: 12 }];
        let outcomes = cmd_simulate(&c).unwrap();
        assert_eq!(outcomes.len(), 3);
        let metrics = io::read_metrics(&dir.path().join(METRICS_FILE)).unwrap();
        assert_eq!(metrics.len(), 3);
        assert_eq!(metrics.iter().map(|m| m.trial).collect::<Vec<_>>(), vec![0, 1, 2]);
        let rows = io::read_trajectories(&dir.path().join(TRAJECTORIES_FILE)).unwrap();
        assert!(rows.iter().filter(|r| r.robot == 1).all(|r| r.t < 12));
        assert!(rows.iter().any(|r| r.robot == 0 && r.t == 30));
    }

    #[test]
    fn baselines_need_no_params() {
        let dir = tempfile::tempdir().unwrap();
        for policy in [PolicyKind::DarpLite, PolicyKind::Maxima] {
            let c = ExperimentConfig { policy, ..small(dir.path()) };
            let outcomes = cmd_simulate(&c).unwrap();
            assert!(outcomes.iter().all(|o| o.metrics.messages == 0 && o.metrics.policy == policy.label()));
        }
    }

    #[test]
    fn pg_without_params_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = cmd_simulate(&small(dir.path())).unwrap_err();
        assert!(e.downcast_ref::<UsageError>().is_some(), "{e:#}");
    }

    #[test]
    fn layout_mismatch_names_both_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = trained(dir.path());
        c.fleet.mode = fleetsample::ActionSpace::HeadingConstrained;
        let e = format!("{:#}", cmd_simulate(&c).unwrap_err());
        assert!(e.contains("mode=4conn") && e.contains("mode=heading"), "{e}");
        let mut c = trained(dir.path());
        c.width = 30;
        let e = format!("{:#}", cmd_simulate(&c).unwrap_err());
        assert!(e.contains("levels=2") && e.contains("levels=4"), "{e}");
    }

    #[test]
    fn sweep_shapes_and_single_robot_invariance() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = trained(dir.path());
        c.team_sizes = vec![1, 2];
        c.comm_ranges = vec![0.0, 0.5, 1.0];
        let rows = cmd_sweep(&c).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(io::read_sweep(&dir.path().join(SWEEP_FILE)).unwrap(), rows);
        assert_eq!(io::read_metrics(&dir.path().join(SWEEP_TRIALS_FILE)).unwrap().len(), 18);
        let single: Vec<&SweepRow> = rows.iter().filter(|r| r.robots == 1).collect();
        for r in &single[1..] {
            assert_eq!(r.mean, single[0].mean);
            assert_eq!(r.median, single[0].median);
        }
    }

    #[test]
    fn sweep_errors_carry_grid_point() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(dir.path());
        c.policy = PolicyKind::Maxima;
        c.field = Some(FieldSource::Gauss(1));
        c.team_sizes = vec![1, 400];
        c.comm_ranges = vec![0.2];
        let e = format!("{:#}", cmd_sweep(&c).unwrap_err());
        assert!(e.contains("K=400") && e.contains("comm_range=0.2"), "{e}");
    }

    fn line(trial: usize, robot: usize, n: usize) -> Vec<TrajectoryRow> {
        (0..n)
            .map(|t| TrajectoryRow {
                trial,
                robot,
                t,
                row: 2.0 + t as f64,
                col: 5.0 - 0.5 * t as f64,
                action: "S".into(),
                reward: 0.0,
            })
            .collect()
    }

    #[test]
    fn straight_lines_survive_smoothing() {
        let mut rows = line(0, 0, 12);
        rows.extend(line(0, 1, 9));
        let out = smooth_rows(&rows, 7, 3).unwrap();
        assert_eq!(out.len(), rows.len());
        for (a, b) in out.iter().zip(&rows) {
            assert!((a.row - b.row).abs() < 1e-9 && (a.col - b.col).abs() < 1e-9);
            assert_eq!((a.trial, a.robot, a.t), (b.trial, b.robot, b.t));
        }
    }

    #[test]
    fn short_paths_suggest_a_window() {
        let e = smooth_rows(&line(0, 0, 6), 7, 3).unwrap_err().to_string();
        assert!(e.contains("6 points") && e.contains("--window 5"), "{e}");
        let e = smooth_rows(&line(0, 0, 3), 7, 3).unwrap_err().to_string();
        assert!(e.contains("too short"), "{e}");
        assert!(smooth_rows(&line(0, 0, 9), 6, 3).unwrap_err().downcast_ref::<UsageError>().is_some());
        assert!(smooth_rows(&line(0, 0, 9), 5, 5).is_err());
    }

    #[test]
    fn suggestions() {
        assert_eq!(suggested_window(6, 3), Some(5));
        assert_eq!(suggested_window(5, 3), Some(5));
        assert_eq!(suggested_window(4, 3), None);
    }
}
