//! Experiment configuration: a flat `key=value` file whose keys carry a
//! section prefix (`field.`, `fleet.`, `train.`, `sweep.`), plus a few
//! unprefixed run-wide keys (`seed`, `out`, `trials`, `kappa`).
//!
//! Command-line flags are applied as further `key=value` pairs after the
//! file, so a flag always wins over the file.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use fleetsample::analysis::DEFAULT_KAPPA;
use fleetsample::field::MixtureSampler;
use fleetsample::fleet::{Failure, Shaping, StartPreset, Starts};
use fleetsample::learn::Estimator;
use fleetsample::{ActionSpace, FleetConfig, TrainConfig};

/// A bad flag, config key or value. Reported with exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldSource {
    /// A field file, used unchanged for every trial.
    File(PathBuf),
    /// A fresh random Gaussian mixture with this many components per trial.
    Gauss(usize),
    /// A fresh random diffusion field per trial.
    Diffusion,
}

impl FieldSource {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        if text == "diffusion" {
            return Ok(FieldSource::Diffusion);
        }
        if let Some(n) = text.strip_prefix("gauss:") {
            let n: usize = n
                .parse()
                .map_err(|_| usage(format!("'{text}': expected gauss:N with a component count N")))?;
            if n == 0 {
                return Err(usage("gauss:N needs at least one component"));
            }
            return Ok(FieldSource::Gauss(n));
        }
        Ok(FieldSource::File(PathBuf::from(text)))
    }
}

impl fmt::Display for FieldSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSource::File(p) => write!(f, "{}", p.display()),
            FieldSource::Gauss(n) => write!(f, "gauss:{n}"),
            FieldSource::Diffusion => f.write_str("diffusion"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PolicyKind {
    #[default]
    Pg,
    DarpLite,
    Maxima,
}

impl PolicyKind {
    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::Pg => "pg",
            PolicyKind::DarpLite => "darp_lite",
            PolicyKind::Maxima => "maxima",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "pg" => Some(PolicyKind::Pg),
            "darp_lite" => Some(PolicyKind::DarpLite),
            "maxima" => Some(PolicyKind::Maxima),
            _ => None,
        }
    }
}

/// Random point-source settings for `diffusion` fields.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionSettings {
    pub sources: usize,
    pub coeff: f64,
    pub steps: usize,
}

impl Default for DiffusionSettings {
    fn default() -> Self {
        DiffusionSettings {
            sources: 3,
            coeff: 0.25,
            steps: 150,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// `None` means the command's default: the training distribution for
    /// `train`, a two-component mixture otherwise.
    pub field: Option<FieldSource>,
    pub width: usize,
    pub height: usize,
    pub diffusion: DiffusionSettings,
    pub fleet: FleetConfig,
    pub policy: PolicyKind,
    pub params: Option<PathBuf>,
    pub train: TrainConfig,
    pub comm_ranges: Vec<f64>,
    pub team_sizes: Vec<usize>,
    pub trials: usize,
    pub kappa: f64,
    pub seed: u64,
    pub out: PathBuf,
}

pub const DEFAULT_COMM_RANGES: [f64; 10] = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.5, 0.75, 1.0];

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            field: None,
            width: 25,
            height: 25,
            diffusion: DiffusionSettings::default(),
            fleet: FleetConfig::default(),
            policy: PolicyKind::Pg,
            params: None,
            train: TrainConfig::default(),
            comm_ranges: DEFAULT_COMM_RANGES.to_vec(),
            team_sizes: vec![2],
            trials: 20,
            kappa: DEFAULT_KAPPA,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> anyhow::Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| usage(format!("{key}: cannot parse '{value}'")))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> anyhow::Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| number(key, s))
        .collect()
}

fn mode(key: &str, value: &str) -> anyhow::Result<ActionSpace> {
    ActionSpace::from_label(value).ok_or_else(|| usage(format!("{key}: unknown action mode '{value}' (4conn|heading)")))
}

/// Parses `id:step`.
pub fn parse_failure(text: &str) -> anyhow::Result<Failure> {
    let (id, step) = text
        .split_once(':')
        .ok_or_else(|| usage(format!("failure '{text}': expected <id:step>")))?;
    Ok(Failure {
        robot: number("failure robot", id)?,
        step: number("failure step", step)?,
    })
}

impl ExperimentConfig {
    /// Sets one key. Unknown keys and unparseable values are usage errors.
    pub fn apply(&mut self, key: &str, value: &str) -> anyhow::Result<()> {
        let value = value.trim();
        match key {
            "seed" => self.seed = number(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "trials" => self.trials = number(key, value)?,
            "kappa" => self.kappa = number(key, value)?,

            "field.source" => self.field = Some(FieldSource::parse(value)?),
            "field.width" => self.width = number(key, value)?,
            "field.height" => self.height = number(key, value)?,
            "field.diffusion_sources" => self.diffusion.sources = number(key, value)?,
            "field.diffusion_coeff" => self.diffusion.coeff = number(key, value)?,
            "field.diffusion_steps" => self.diffusion.steps = number(key, value)?,

            "fleet.robots" => self.fleet.robots = number(key, value)?,
            "fleet.comm_range" => self.fleet.comm_range = number(key, value)?,
            "fleet.comm_period" => self.fleet.comm_period = number(key, value)?,
            "fleet.horizon" => self.fleet.horizon = number(key, value)?,
            "fleet.mode" => self.fleet.mode = mode(key, value)?,
            "fleet.starts" => {
                let preset = StartPreset::from_label(value)
                    .ok_or_else(|| usage(format!("{key}: unknown preset '{value}' (same|corners|random)")))?;
                self.fleet.starts = Starts::Preset(preset);
            }
            "fleet.shaping" => {
                self.fleet.shaping = match value {
                    "off" => Shaping::Off,
                    "distance" => Shaping::DistanceWeighted,
                    _ => return Err(usage(format!("{key}: unknown shaping '{value}' (off|distance)"))),
                }
            }
            "fleet.fail" => {
                self.fleet.failures = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(parse_failure)
                    .collect::<anyhow::Result<_>>()?;
            }
            "fleet.policy" => {
                self.policy = PolicyKind::from_label(value)
                    .ok_or_else(|| usage(format!("{key}: unknown policy '{value}' (pg|darp_lite|maxima)")))?;
            }
            "fleet.params" => self.params = Some(PathBuf::from(value)),

            "train.iterations" => self.train.iterations = number(key, value)?,
            "train.rollouts" => self.train.rollouts = number(key, value)?,
            "train.learning_rate" => self.train.learning_rate = number(key, value)?,
            "train.gamma" => self.train.gamma = number(key, value)?,
            "train.horizon" => self.train.horizon = number(key, value)?,
            "train.mode" => self.train.mode = mode(key, value)?,
            "train.estimator" => {
                self.train.estimator = Estimator::from_label(value)
                    .ok_or_else(|| usage(format!("{key}: unknown estimator '{value}' (reinforce|gpomdp)")))?;
            }
            "train.components_min" => self.train.fields.min_components = number(key, value)?,
            "train.components_max" => self.train.fields.max_components = number(key, value)?,
            "train.sigma_min" => self.train.fields.sigma_fraction.0 = number(key, value)?,
            "train.sigma_max" => self.train.fields.sigma_fraction.1 = number(key, value)?,

            "sweep.comm_ranges" => self.comm_ranges = list(key, value)?,
            "sweep.team_sizes" => self.team_sizes = list(key, value)?,

            _ => return Err(usage(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Applies every `key=value` line of `text`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> anyhow::Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("line {}: expected key=value, found '{line}'", i + 1)))?;
            self.apply(key.trim(), value)
                .map_err(|e| usage(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))
            .map_err(|e| usage(format!("{e:#}")))?;
        let mut config = ExperimentConfig::default();
        config
            .apply_text(&text)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        Ok(config)
    }

    /// Copies the run-wide settings into the library configs.
    pub fn resolve(&mut self) {
        self.train.width = self.width;
        self.train.height = self.height;
        self.train.seed = self.seed;
        if let Some(FieldSource::Gauss(n)) = self.field {
            self.train.fields = MixtureSampler {
                min_components: n,
                max_components: n,
                ..self.train.fields.clone()
            };
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.trials == 0 {
            return Err(usage("trials must be at least 1"));
        }
        if self.comm_ranges.is_empty() {
            return Err(usage("sweep.comm_ranges must not be empty"));
        }
        if self.team_sizes.is_empty() || self.team_sizes.contains(&0) {
            return Err(usage("sweep.team_sizes must be non-empty and positive"));
        }
        if let Some(r) = self.comm_ranges.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(usage(format!("communication range {r} must lie in [0, 1]")));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(usage(format!("kappa {} must be non-negative", self.kappa)));
        }
        if self.policy != PolicyKind::Pg && !self.fleet.failures.is_empty() {
            return Err(usage(format!(
                "failures are only simulated for the pg policy, not {}",
                self.policy.label()
            )));
        }
        if self.diffusion.sources == 0 {
            return Err(usage("field.diffusion_sources must be at least 1"));
        }
        self.fleet.validate().map_err(|e| usage(e.to_string()))?;
        Ok(())
    }

    pub fn validate_training(&self) -> anyhow::Result<()> {
        match &self.field {
            None | Some(FieldSource::Gauss(_)) => {}
            Some(other) => {
                return Err(usage(format!(
                    "training draws Gaussian-mixture fields; field source '{other}' is not supported"
                )))
            }
        }
        self.train.validate().map_err(|e| usage(e.to_string()))
    }
}
