//! Output file formats and their readers.
//!
//! Numbers are written in the shortest decimal form that parses back to the
//! same `f64`, so every file round-trips exactly.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use fleetsample::analysis::MetricSummary;
use fleetsample::features::FeatureLayout;
use fleetsample::{ActionSpace, PolicyParams, TeamResult};

pub const TRAJECTORY_HEADER: [&str; 7] = ["trial", "robot", "t", "row", "col", "action", "reward"];
pub const METRICS_HEADER: [&str; 10] = [
    "trial",
    "policy",
    "K",
    "comm_range",
    "comm_period",
    "discounted_reward",
    "undiscounted_reward",
    "overlap_count",
    "overlap_fraction",
    "messages",
];
pub const CURVE_HEADER: [&str; 2] = ["iteration", "mean_return"];
/// Metric columns summarized in the sweep file, in order.
pub const SWEEP_METRICS: [&str; 5] = [
    "discounted_reward",
    "undiscounted_reward",
    "overlap_count",
    "overlap_fraction",
    "messages",
];
/// Label of the start scan in the trajectory `action` column.
pub const START_ACTION: &str = "start";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let context = || format!("cannot write {}", path.display());
    let mut w = csv::Writer::from_path(path).with_context(context)?;
    w.write_record(header).with_context(context)?;
    for row in rows {
        w.write_record(&row).with_context(context)?;
    }
    w.flush().with_context(context)?;
    Ok(())
}

fn read_csv(path: &Path, header: &[String]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let found = r.headers().with_context(|| format!("cannot read {}", path.display()))?;
    if found.iter().ne(header.iter().map(String::as_str)) {
        bail!(
            "{}: header '{}' does not match expected '{}'",
            path.display(),
            found.iter().collect::<Vec<_>>().join(","),
            header.join(",")
        );
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| rec.with_context(|| format!("{}: record {}", path.display(), i + 1)))
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, rec: &csv::StringRecord, col: usize, name: &str) -> Result<T> {
    let raw = rec.get(col).unwrap_or("");
    raw.parse()
        .map_err(|_| anyhow!("{}: record {line}: column '{name}' has invalid value '{raw}'", path.display()))
}

fn owned(header: &[&str]) -> Vec<String> {
    header.iter().map(|s| s.to_string()).collect()
}

// ---------------------------------------------------------------- parameters

pub fn format_params(params: &PolicyParams) -> String {
    let layout = params.layout;
    let mut out = String::new();
    writeln!(out, "levels={}", layout.levels).unwrap();
    writeln!(out, "actions={}", layout.action_count()).unwrap();
    writeln!(out, "k={}", layout.state_dim()).unwrap();
    writeln!(out, "mode={}", layout.mode.label()).unwrap();
    for t in &params.theta {
        writeln!(out, "{t}").unwrap();
    }
    out
}

/// Describes a layout the way the parameter header does.
pub fn describe_layout(layout: &FeatureLayout) -> String {
    format!(
        "levels={} actions={} k={} mode={}",
        layout.levels,
        layout.action_count(),
        layout.state_dim(),
        layout.mode.label()
    )
}

pub fn parse_params(text: &str) -> Result<PolicyParams> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut header = |key: &str| -> Result<String> {
        let (i, line) = lines.next().ok_or_else(|| anyhow!("missing header line '{key}='"))?;
        let value = line
            .trim()
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| anyhow!("line {}: expected '{key}=', found '{}'", i + 1, line.trim()))?;
        Ok(value.trim().to_string())
    };
    let levels: usize = header("levels")?.parse().context("levels is not an integer")?;
    let actions: usize = header("actions")?.parse().context("actions is not an integer")?;
    let k: usize = header("k")?.parse().context("k is not an integer")?;
    let mode_label = header("mode")?;
    let mode = ActionSpace::from_label(&mode_label).ok_or_else(|| anyhow!("unknown mode '{mode_label}'"))?;
    if levels == 0 {
        bail!("levels must be at least 1");
    }
    let layout = FeatureLayout::new(levels, mode);
    if actions != layout.action_count() || k != layout.state_dim() {
        bail!(
            "inconsistent header: actions={actions} k={k} but levels={levels} mode={} implies {}",
            mode.label(),
            describe_layout(&layout)
        );
    }
    let theta = lines
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("line {}: '{}' is not a number", i + 1, l.trim()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PolicyParams::new(theta, layout)?)
}

pub fn save_params(params: &PolicyParams, path: &Path) -> Result<()> {
    std::fs::write(path, format_params(params)).with_context(|| format!("cannot write {}", path.display()))
}

pub fn load_params(path: &Path) -> Result<PolicyParams> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_params(&text).with_context(|| format!("invalid parameter file {}", path.display()))
}

// ---------------------------------------------------------------- trajectories

/// One visit. Positions are integers for simulated runs and reals after smoothing.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub trial: usize,
    pub robot: usize,
    pub t: usize,
    pub row: f64,
    pub col: f64,
    pub action: String,
    pub reward: f64,
}

pub fn trajectory_rows(trial: usize, result: &TeamResult) -> Vec<TrajectoryRow> {
    result
        .trajectories
        .iter()
        .flat_map(|traj| {
            traj.visits.iter().map(move |v| TrajectoryRow {
                trial,
                robot: traj.robot,
                t: v.t,
                row: v.cell.row as f64,
                col: v.cell.col as f64,
                action: v.action.map_or(START_ACTION, |a| a.label()).to_string(),
                reward: v.reward,
            })
        })
        .collect()
}

pub fn write_trajectories(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    write_csv(
        path,
        &TRAJECTORY_HEADER,
        rows.iter().map(|r| {
            vec![
                r.trial.to_string(),
                r.robot.to_string(),
                r.t.to_string(),
                r.row.to_string(),
                r.col.to_string(),
                r.action.clone(),
                r.reward.to_string(),
            ]
        }),
    )
}

pub fn read_trajectories(path: &Path) -> Result<Vec<TrajectoryRow>> {
    read_csv(path, &owned(&TRAJECTORY_HEADER))?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let n = i + 1;
            Ok(TrajectoryRow {
                trial: field(path, n, rec, 0, "trial")?,
                robot: field(path, n, rec, 1, "robot")?,
                t: field(path, n, rec, 2, "t")?,
                row: field(path, n, rec, 3, "row")?,
                col: field(path, n, rec, 4, "col")?,
                action: rec.get(5).unwrap_or("").to_string(),
                reward: field(path, n, rec, 6, "reward")?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------- metrics

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub trial: usize,
    pub policy: String,
    pub robots: usize,
    pub comm_range: f64,
    pub comm_period: usize,
    pub discounted_reward: f64,
    pub undiscounted_reward: f64,
    pub overlap_count: usize,
    pub overlap_fraction: f64,
    pub messages: usize,
}

impl MetricsRow {
    /// The summarized metrics, in [`SWEEP_METRICS`] order.
    pub fn metric_values(&self) -> [f64; 5] {
        [
            self.discounted_reward,
            self.undiscounted_reward,
            self.overlap_count as f64,
            self.overlap_fraction,
            self.messages as f64,
        ]
    }
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    write_csv(
        path,
        &METRICS_HEADER,
        rows.iter().map(|r| {
            vec![
                r.trial.to_string(),
                r.policy.clone(),
                r.robots.to_string(),
                r.comm_range.to_string(),
                r.comm_period.to_string(),
                r.discounted_reward.to_string(),
                r.undiscounted_reward.to_string(),
                r.overlap_count.to_string(),
                r.overlap_fraction.to_string(),
                r.messages.to_string(),
            ]
        }),
    )
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    read_csv(path, &owned(&METRICS_HEADER))?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let n = i + 1;
            Ok(MetricsRow {
                trial: field(path, n, rec, 0, "trial")?,
                policy: rec.get(1).unwrap_or("").to_string(),
                robots: field(path, n, rec, 2, "K")?,
                comm_range: field(path, n, rec, 3, "comm_range")?,
                comm_period: field(path, n, rec, 4, "comm_period")?,
                discounted_reward: field(path, n, rec, 5, "discounted_reward")?,
                undiscounted_reward: field(path, n, rec, 6, "undiscounted_reward")?,
                overlap_count: field(path, n, rec, 7, "overlap_count")?,
                overlap_fraction: field(path, n, rec, 8, "overlap_fraction")?,
                messages: field(path, n, rec, 9, "messages")?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------- learning curve

pub fn write_curve(path: &Path, curve: &[f64]) -> Result<()> {
    write_csv(
        path,
        &CURVE_HEADER,
        curve.iter().enumerate().map(|(i, v)| vec![i.to_string(), v.to_string()]),
    )
}

pub fn read_curve(path: &Path) -> Result<Vec<f64>> {
    read_csv(path, &owned(&CURVE_HEADER))?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let iteration: usize = field(path, i + 1, rec, 0, "iteration")?;
            if iteration != i {
                bail!("{}: record {}: iteration {iteration} out of order", path.display(), i + 1);
            }
            field(path, i + 1, rec, 1, "mean_return")
        })
        .collect()
}

// ---------------------------------------------------------------- sweep summary

/// One aggregated grid point: mean, median and standard error of each
/// metric in [`SWEEP_METRICS`].
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub policy: String,
    pub robots: usize,
    pub comm_range: f64,
    pub comm_period: usize,
    pub trials: usize,
    pub mean: [f64; 5],
    pub median: [f64; 5],
    pub std_error: [f64; 5],
}

impl SweepRow {
    pub fn new(policy: &str, robots: usize, comm_range: f64, comm_period: usize, summaries: &[MetricSummary; 5]) -> Self {
        SweepRow {
            policy: policy.to_string(),
            robots,
            comm_range,
            comm_period,
            trials: summaries[0].values.len(),
            mean: summaries.each_ref().map(|s| s.mean),
            median: summaries.each_ref().map(|s| s.median),
            std_error: summaries.each_ref().map(|s| s.std_error),
        }
    }

    pub fn metric(&self, name: &str) -> Option<usize> {
        SWEEP_METRICS.iter().position(|m| *m == name)
    }
}

pub fn sweep_header() -> Vec<String> {
    let mut h = owned(&["policy", "K", "comm_range", "comm_period", "trials"]);
    for m in SWEEP_METRICS {
        for stat in ["mean", "median", "se"] {
            h.push(format!("{m}_{stat}"));
        }
    }
    h
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let header = sweep_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        path,
        &header,
        rows.iter().map(|r| {
            let mut out = vec![
                r.policy.clone(),
                r.robots.to_string(),
                r.comm_range.to_string(),
                r.comm_period.to_string(),
                r.trials.to_string(),
            ];
            for m in 0..SWEEP_METRICS.len() {
                out.extend([r.mean[m], r.median[m], r.std_error[m]].map(|v| v.to_string()));
            }
            out
        }),
    )
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRow>> {
    read_csv(path, &sweep_header())?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let n = i + 1;
            let mut row = SweepRow {
                policy: rec.get(0).unwrap_or("").to_string(),
                robots: field(path, n, rec, 1, "K")?,
                comm_range: field(path, n, rec, 2, "comm_range")?,
                comm_period: field(path, n, rec, 3, "comm_period")?,
                trials: field(path, n, rec, 4, "trials")?,
                mean: [0.0; 5],
                median: [0.0; 5],
                std_error: [0.0; 5],
            };
            for (m, name) in SWEEP_METRICS.iter().enumerate() {
                let base = 5 + 3 * m;
                row.mean[m] = field(path, n, rec, base, name)?;
                row.median[m] = field(path, n, rec, base + 1, name)?;
                row.std_error[m] = field(path, n, rec, base + 2, name)?;
            }
            Ok(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use fleetsample::analysis::aggregate;

    fn layout() -> FeatureLayout {
        FeatureLayout::new(2, ActionSpace::FourConnected)
    }

    #[test]
    fn params_round_trip_exactly() {
        let theta: Vec<f64> = (0..layout().total_dim())
            .map(|i| (i as f64 * 0.7310585786300049).sin() * 10f64.powi(i as i32 % 7 - 3))
            .collect();
        let p = PolicyParams::new(theta, layout()).unwrap();
        let text = format_params(&p);
        assert!(text.starts_with("levels=2\nactions=4\nk=17\nmode=4conn\n"));
        assert_eq!(parse_params(&text).unwrap(), p);
    }

    #[test]
    fn heading_header() {
        let p = PolicyParams::zeros(FeatureLayout::new(3, ActionSpace::HeadingConstrained));
        let text = format_params(&p);
        assert!(text.starts_with("levels=3\nactions=3\nk=33\nmode=heading\n"));
        assert_eq!(text.lines().count(), 4 + 99);
        assert_eq!(parse_params(&text).unwrap(), p);
    }

    #[test]
    fn params_errors() {
        let good = format_params(&PolicyParams::zeros(layout()));
        assert!(parse_params(&good.replace("k=17", "k=18")).unwrap_err().to_string().contains("inconsistent"));
        assert!(parse_params(&good.replace("mode=4conn", "mode=hex")).is_err());
        let short: String = good.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(parse_params(&short).is_err());
        let bad = good.replacen("\n0\n", "\nx\n", 1);
        assert!(parse_params(&bad).unwrap_err().to_string().contains("line 5"));
        assert!(parse_params("actions=4\n").is_err());
    }

    #[test]
    fn csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let traj = vec![
            TrajectoryRow { trial: 0, robot: 1, t: 0, row: 3.0, col: 4.0, action: START_ACTION.into(), reward: 0.1 },
            TrajectoryRow { trial: 0, robot: 1, t: 1, row: 3.25, col: 4.5, action: "N".into(), reward: 1.0 / 3.0 },
        ];
        let p = dir.path().join("t.csv");
        write_trajectories(&p, &traj).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("trial,robot,t,row,col,action,reward\n0,1,0,3,4,start,"));
        assert_eq!(read_trajectories(&p).unwrap(), traj);

        let metrics = vec![MetricsRow {
            trial: 2,
            policy: "pg".into(),
            robots: 2,
            comm_range: 0.15,
            comm_period: 20,
            discounted_reward: 1.2345678901234567,
            undiscounted_reward: 9.5,
            overlap_count: 3,
            overlap_fraction: 0.0625,
            messages: 14,
        }];
        let p = dir.path().join("m.csv");
        write_metrics(&p, &metrics).unwrap();
        assert_eq!(read_metrics(&p).unwrap(), metrics);

        let p = dir.path().join("c.csv");
        write_curve(&p, &[0.5, 0.25, 1e-300]).unwrap();
        assert_eq!(read_curve(&p).unwrap(), vec![0.5, 0.25, 1e-300]);

        let summary = aggregate(&[1.0, 2.0, 4.0]).unwrap();
        let summaries = [0, 1, 2, 3, 4].map(|_| summary.clone());
        let rows = vec![SweepRow::new("maxima", 3, 0.3, 10, &summaries)];
        let p = dir.path().join("s.csv");
        write_sweep(&p, &rows).unwrap();
        let back = read_sweep(&p).unwrap();
        assert_eq!(back, rows);
        assert_eq!(back[0].trials, 3);
        assert_eq!(back[0].metric("overlap_fraction"), Some(3));
    }

    #[test]
    fn reader_rejects_wrong_header_and_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "trial,robot\n1,2\n").unwrap();
        assert!(read_trajectories(&p).unwrap_err().to_string().contains("header"));
        std::fs::write(&p, "trial,robot,t,row,col,action,reward\n0,0,zero,1,1,N,0\n").unwrap();
        let e = read_trajectories(&p).unwrap_err().to_string();
        assert!(e.contains("'t'") && e.contains("record 1"), "{e}");
        assert!(read_metrics(&dir.path().join("missing.csv")).is_err());
    }
}
