use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fleetsample_cli::commands::{self, DEFAULT_ORDER, DEFAULT_WINDOW};
use fleetsample_cli::{ExperimentConfig, UsageError};

#[derive(Parser)]
#[command(name = "fleetsample", version, about = "Multi-robot policy-gradient sampling of 2-D score fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy on random Gaussian-mixture fields.
    Train(TrainArgs),
    /// Simulate team runs and write trajectories and per-trial metrics.
    Simulate(SimulateArgs),
    /// Run every (team size, communication range) grid point and aggregate.
    Sweep(SweepArgs),
    /// Smooth a trajectory file with a Savitzky-Golay filter.
    Smooth(SmoothArgs),
}

#[derive(Args)]
struct Common {
    /// Configuration file of key=value lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Field source: a field file, gauss:N or diffusion.
    #[arg(long, value_name = "path|gauss:N|diffusion")]
    field: Option<String>,
    /// Grid width for generated fields.
    #[arg(long)]
    width: Option<usize>,
    /// Grid height for generated fields.
    #[arg(long)]
    height: Option<usize>,
}

#[derive(Args)]
struct TeamArgs {
    /// Parameter file written by `train` (pg policy only).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Communication radius as a fraction of the grid diagonal.
    #[arg(long)]
    comm_range: Option<f64>,
    /// Steps between exchanges.
    #[arg(long)]
    comm_period: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_parser = ["pg", "darp_lite", "maxima"])]
    policy: Option<String>,
    #[arg(long, value_parser = ["off", "distance"])]
    shaping: Option<String>,
    /// Robot ID stops after STEP clock steps; repeatable.
    #[arg(long, value_name = "ID:STEP")]
    fail: Vec<String>,
    #[arg(long, value_parser = ["same", "corners", "random"])]
    starts: Option<String>,
    #[arg(long, value_parser = ["4conn", "heading"])]
    mode: Option<String>,
    /// Hyperbolic discount of the reported reward.
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    iterations: Option<usize>,
    /// Rollouts per iteration.
    #[arg(long)]
    rollouts: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, value_parser = ["reinforce", "gpomdp"])]
    estimator: Option<String>,
    #[arg(long, value_parser = ["4conn", "heading"])]
    mode: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    team: TeamArgs,
    #[arg(long)]
    robots: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    team: TeamArgs,
    /// Comma-separated communication ranges.
    #[arg(long)]
    ranges: Option<String>,
    /// Comma-separated team sizes.
    #[arg(long)]
    team_sizes: Option<String>,
}

#[derive(Args)]
struct SmoothArgs {
    /// Trajectory CSV written by `simulate`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    order: usize,
}

type Overrides = Vec<(&'static str, String)>;

fn push<T: ToString>(out: &mut Overrides, key: &'static str, value: &Option<T>) {
    if let Some(v) = value {
        out.push((key, v.to_string()));
    }
}

fn common_overrides(c: &Common, out: &mut Overrides) {
    push(out, "seed", &c.seed);
    push(out, "out", &c.out.as_ref().map(|p| p.display().to_string()));
    push(out, "field.source", &c.field);
    push(out, "field.width", &c.width);
    push(out, "field.height", &c.height);
}

fn team_overrides(t: &TeamArgs, out: &mut Overrides) {
    push(out, "fleet.params", &t.params.as_ref().map(|p| p.display().to_string()));
    push(out, "fleet.comm_range", &t.comm_range);
    push(out, "fleet.comm_period", &t.comm_period);
    push(out, "fleet.horizon", &t.horizon);
    push(out, "trials", &t.trials);
    push(out, "fleet.policy", &t.policy);
    push(out, "fleet.shaping", &t.shaping);
    push(out, "fleet.starts", &t.starts);
    push(out, "fleet.mode", &t.mode);
    push(out, "kappa", &t.kappa);
    if !t.fail.is_empty() {
        out.push(("fleet.fail", t.fail.join(",")));
    }
}

fn build(common: &Common, overrides: Overrides) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    for (key, value) in overrides {
        config.apply(key, &value)?;
    }
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(a) => {
            let mut o = Overrides::new();
            common_overrides(&a.common, &mut o);
            push(&mut o, "train.iterations", &a.iterations);
            push(&mut o, "train.rollouts", &a.rollouts);
            push(&mut o, "train.learning_rate", &a.learning_rate);
            push(&mut o, "train.gamma", &a.gamma);
            push(&mut o, "train.horizon", &a.horizon);
            push(&mut o, "train.estimator", &a.estimator);
            push(&mut o, "train.mode", &a.mode);
            let config = build(&a.common, o)?;
            let outcome = commands::cmd_train(&config)?;
            log::info!(
                "wrote {} and {} (final mean return {:.4})",
                config.out.join(commands::PARAMS_FILE).display(),
                config.out.join(commands::CURVE_FILE).display(),
                outcome.curve.last().copied().unwrap_or(0.0)
            );
        }
        Command::Simulate(a) => {
            let mut o = Overrides::new();
            common_overrides(&a.common, &mut o);
            team_overrides(&a.team, &mut o);
            push(&mut o, "fleet.robots", &a.robots);
            let config = build(&a.common, o)?;
            let outcomes = commands::cmd_simulate(&config)?;
            log::info!("simulated {} trials into {}", outcomes.len(), config.out.display());
        }
        Command::Sweep(a) => {
            let mut o = Overrides::new();
            common_overrides(&a.common, &mut o);
            team_overrides(&a.team, &mut o);
            push(&mut o, "sweep.comm_ranges", &a.ranges);
            push(&mut o, "sweep.team_sizes", &a.team_sizes);
            let config = build(&a.common, o)?;
            let rows = commands::cmd_sweep(&config)?;
            log::info!("aggregated {} grid points into {}", rows.len(), config.out.display());
        }
        Command::Smooth(a) => {
            let path = commands::cmd_smooth(&a.input, &a.out, a.window, a.order)?;
            log::info!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
