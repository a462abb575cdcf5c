//! Rollouts, likelihood-ratio gradient estimators and the gradient-ascent
//! training loop.
//!
//! Returns are measured on action rewards only: the action taken at step `t`
//! earns `gamma^t r_t`. The start-cell scan does not depend on the policy and
//! is left out of the learning objective (it still counts in team metrics).

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{state_features, FeatureLayout};
use crate::field::{gaussian_mixture_field, Cell, MixtureSampler, ScoreMap};
use crate::mdp::{feasible_actions, Action, ActionSpace, Decision, RobotState, Trajectory, Visit, WorldState};
use crate::policy::{accumulate_log_prob_gradient, action_probabilities, sample_action, PolicyParams};
use crate::rng::{self, tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Estimator {
    Reinforce,
    #[default]
    Gpomdp,
}

impl Estimator {
    pub fn label(self) -> &'static str {
        match self {
            Estimator::Reinforce => "reinforce",
            Estimator::Gpomdp => "gpomdp",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "reinforce" => Some(Estimator::Reinforce),
            "gpomdp" => Some(Estimator::Gpomdp),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub width: usize,
    pub height: usize,
    pub mode: ActionSpace,
    /// Distribution of training fields; a fresh field is drawn per iteration.
    pub fields: MixtureSampler,
    pub horizon: usize,
    /// Rollouts per iteration.
    pub rollouts: usize,
    pub iterations: usize,
    /// Base step size; iteration `i` (0-based) uses `learning_rate / sqrt(i + 1)`.
    pub learning_rate: f64,
    pub gamma: f64,
    pub estimator: Estimator,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            width: 25,
            height: 25,
            mode: ActionSpace::FourConnected,
            fields: MixtureSampler::default(),
            horizon: 150,
            rollouts: 10,
            iterations: 600,
            learning_rate: 0.1,
            gamma: 0.95,
            estimator: Estimator::Gpomdp,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.width == 0 || self.height == 0 {
            return fail(format!("grid {}x{} must be non-empty", self.width, self.height));
        }
        if self.width * self.height < 2 {
            return fail("grid must have at least two cells".into());
        }
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if self.rollouts == 0 {
            return fail("rollouts per iteration must be at least 1".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning rate {} must be non-negative", self.learning_rate));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail(format!("gamma {} must lie in [0, 1]", self.gamma));
        }
        let f = &self.fields;
        if f.min_components > f.max_components || f.sigma_fraction.0 <= 0.0 || f.sigma_fraction.0 > f.sigma_fraction.1 {
            return fail("invalid training field distribution".into());
        }
        Ok(())
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout::for_grid(self.width, self.height, self.mode)
    }

    /// The training field for iteration `iteration`.
    pub fn field(&self, iteration: usize) -> Result<ScoreMap> {
        let mut r = rng::stream(self.seed, &[tag::FIELD, iteration as u64]);
        let spec = self.fields.sample(self.width, self.height, &mut r);
        gaussian_mixture_field(self.width, self.height, &spec)
    }
}

/// Picks the next action for a robot planning on `view`.
///
/// Returns the action and, when the policy made the choice, the decision
/// record. A lone fallback turn is taken without consulting the policy.
pub fn choose_action<R: Rng + ?Sized>(
    view: &ScoreMap,
    state: &RobotState,
    params: &PolicyParams,
    step: usize,
    rng: &mut R,
) -> Result<(Action, Option<Decision>)> {
    let mode = params.layout.mode;
    let actions = feasible_actions(state, view.width(), view.height(), mode)?;
    if let [only] = actions.as_slice() {
        if only.policy_index().is_none() {
            return Ok((*only, None));
        }
    }
    let feasible: Vec<usize> = actions.iter().filter_map(|a| a.policy_index()).collect();
    let features = state_features(view, state.position, state.heading, &params.layout);
    let probs = action_probabilities(params, &features, &feasible)?;
    let pick = sample_action(&probs, rng);
    let decision = Decision {
        step,
        features,
        feasible: feasible.clone(),
        chosen: feasible[pick],
    };
    Ok((actions[pick], Some(decision)))
}

/// Runs the policy for `horizon` steps on a private copy of `map`.
///
/// With `start == None` the start cell is drawn uniformly from `rng`.
pub fn rollout<R: Rng + ?Sized>(
    map: &ScoreMap,
    params: &PolicyParams,
    horizon: usize,
    start: Option<Cell>,
    rng: &mut R,
) -> Result<Trajectory> {
    let start = start.unwrap_or_else(|| Cell::new(rng.gen_range(0..map.height()), rng.gen_range(0..map.width())));
    let mut world = WorldState::new(map.clone(), vec![RobotState::new(0, start)])?;
    let mut traj = Trajectory::new(0, horizon);
    let reward = world.scan(0)?;
    let robot = world.robots[0];
    traj.visits.push(Visit {
        t: 0,
        cell: robot.position,
        heading: robot.heading,
        action: None,
        reward,
    });
    for step in 0..horizon {
        let state = world.robots[0];
        let (action, decision) = choose_action(&world.truth, &state, params, step, rng)?;
        let reward = world.step(0, action, params.layout.mode)?;
        let robot = world.robots[0];
        traj.visits.push(Visit {
            t: step + 1,
            cell: robot.position,
            heading: robot.heading,
            action: Some(action),
            reward,
        });
        traj.decisions.extend(decision);
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    pub gradient: Vec<f64>,
    pub mean_return: f64,
    pub std_return: f64,
}

/// Reward-to-go `sum_{j >= t} gamma^j r_j` for every action step `t`.
fn rewards_to_go(traj: &Trajectory, gamma: f64) -> Vec<f64> {
    let rewards = traj.action_rewards();
    let mut weights = Vec::with_capacity(rewards.len());
    let mut w = 1.0;
    for _ in &rewards {
        weights.push(w);
        w *= gamma;
    }
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc += weights[t] * rewards[t];
        out[t] = acc;
    }
    out
}

/// Discounted return of the action rewards.
pub fn trajectory_return(traj: &Trajectory, gamma: f64) -> f64 {
    rewards_to_go(traj, gamma).first().copied().unwrap_or(0.0)
}

fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check_batch(trajectories: &[Trajectory], weights: &[f64], gamma: f64) -> Result<()> {
    if trajectories.is_empty() {
        return Err(Error::InvalidArgument("gradient needs at least one trajectory".into()));
    }
    if weights.len() != trajectories.len() {
        return Err(Error::InvalidArgument("one weight per trajectory is required".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("trajectory weights must form a distribution".into()));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} must lie in [0, 1]")));
    }
    Ok(())
}

fn return_stats(returns: &[f64], weights: &[f64]) -> (f64, f64) {
    let mean: f64 = returns.iter().zip(weights).map(|(r, w)| w * r).sum();
    let var: f64 = returns.iter().zip(weights).map(|(r, w)| w * (r - mean).powi(2)).sum();
    (mean, var.sqrt())
}

/// REINFORCE with the batch-mean return as baseline.
pub fn reinforce_gradient(trajectories: &[Trajectory], params: &PolicyParams, gamma: f64) -> Result<GradientEstimate> {
    reinforce_gradient_weighted(trajectories, &uniform_weights(trajectories.len()), params, gamma)
}

/// REINFORCE over a weighted batch. With weights equal to trajectory
/// probabilities over an enumerated support, this is the exact expectation
/// with the exact mean-return baseline.
pub fn reinforce_gradient_weighted(
    trajectories: &[Trajectory],
    weights: &[f64],
    params: &PolicyParams,
    gamma: f64,
) -> Result<GradientEstimate> {
    check_batch(trajectories, weights, gamma)?;
    let returns: Vec<f64> = trajectories.iter().map(|t| trajectory_return(t, gamma)).collect();
    let (mean, std) = return_stats(&returns, weights);
    let mut gradient = vec![0.0; params.layout.total_dim()];
    for ((traj, w), ret) in trajectories.iter().zip(weights).zip(&returns) {
        let advantage = w * (ret - mean);
        for d in &traj.decisions {
            accumulate_log_prob_gradient(params, &d.features, d.chosen, &d.feasible, advantage, &mut gradient)?;
        }
    }
    Ok(GradientEstimate {
        gradient,
        mean_return: mean,
        std_return: std,
    })
}

/// G(PO)MDP: each action is credited only with later rewards, baselined by
/// the batch-mean reward-to-go at the same step.
pub fn gpomdp_gradient(trajectories: &[Trajectory], params: &PolicyParams, gamma: f64) -> Result<GradientEstimate> {
    gpomdp_gradient_weighted(trajectories, &uniform_weights(trajectories.len()), params, gamma)
}

pub fn gpomdp_gradient_weighted(
    trajectories: &[Trajectory],
    weights: &[f64],
    params: &PolicyParams,
    gamma: f64,
) -> Result<GradientEstimate> {
    check_batch(trajectories, weights, gamma)?;
    let to_go: Vec<Vec<f64>> = trajectories.iter().map(|t| rewards_to_go(t, gamma)).collect();
    let steps = to_go.iter().map(Vec::len).max().unwrap_or(0);
    let mut baseline = vec![0.0; steps];
    for (rtg, w) in to_go.iter().zip(weights) {
        for (b, r) in baseline.iter_mut().zip(rtg) {
            *b += w * r;
        }
    }
    let returns: Vec<f64> = to_go.iter().map(|r| r.first().copied().unwrap_or(0.0)).collect();
    let (mean, std) = return_stats(&returns, weights);
    let mut gradient = vec![0.0; params.layout.total_dim()];
    for ((traj, rtg), w) in trajectories.iter().zip(&to_go).zip(weights) {
        for d in &traj.decisions {
            let later = rtg.get(d.step).copied().unwrap_or(0.0);
            let scale = w * (later - baseline[d.step]);
            accumulate_log_prob_gradient(params, &d.features, d.chosen, &d.feasible, scale, &mut gradient)?;
        }
    }
    Ok(GradientEstimate {
        gradient,
        mean_return: mean,
        std_return: std,
    })
}

pub fn estimate(
    estimator: Estimator,
    trajectories: &[Trajectory],
    params: &PolicyParams,
    gamma: f64,
) -> Result<GradientEstimate> {
    match estimator {
        Estimator::Reinforce => reinforce_gradient(trajectories, params, gamma),
        Estimator::Gpomdp => gpomdp_gradient(trajectories, params, gamma),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    /// Mean batch return per iteration.
    pub curve: Vec<f64>,
}

/// Largest tolerated parameter magnitude before training aborts.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Gradient ascent from `theta = 0`, one fresh random field per iteration.
pub fn train(config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(config, |_, _| {})
}

pub fn train_with_progress(config: &TrainConfig, mut progress: impl FnMut(usize, f64)) -> Result<TrainOutcome> {
    config.validate()?;
    if config.rollouts == 1 {
        log::warn!("one rollout per iteration: the mean-return baseline cancels every REINFORCE update");
    }
    let mut params = PolicyParams::zeros(config.layout());
    let mut curve = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        let field = config.field(iteration)?;
        let batch = (0..config.rollouts)
            .into_par_iter()
            .map(|j| {
                let mut r = rng::stream(config.seed, &[tag::ROLLOUT, iteration as u64, j as u64]);
                rollout(&field, &params, config.horizon, None, &mut r)
            })
            .collect::<Result<Vec<_>>>()?;
        let est = estimate(config.estimator, &batch, &params, config.gamma)?;
        let step = config.learning_rate / ((iteration + 1) as f64).sqrt();
        params
            .theta
            .iter_mut()
            .zip(&est.gradient)
            .for_each(|(t, g)| *t += step * g);
        let magnitude = params.max_abs();
        if !(magnitude <= DIVERGENCE_LIMIT) {
            return Err(Error::Divergence { iteration, magnitude });
        }
        curve.push(est.mean_return);
        progress(iteration, est.mean_return);
    }
    Ok(TrainOutcome { params, curve })
}

/// Discounted action returns of `episodes` single-robot evaluation runs.
///
/// Episode `e` uses its own field and stream, so two policies evaluated
/// with the same seed face identical fields and start cells.
pub fn evaluate(
    params: &PolicyParams,
    config: &TrainConfig,
    episodes: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut field_rng = rng::stream(seed, &[tag::EVAL, e as u64, tag::FIELD]);
            let spec = config.fields.sample(config.width, config.height, &mut field_rng);
            let field = gaussian_mixture_field(config.width, config.height, &spec)?;
            let mut r = rng::stream(seed, &[tag::EVAL, e as u64]);
            let start = Cell::new(r.gen_range(0..config.height), r.gen_range(0..config.width));
            let traj = rollout(&field, params, config.horizon, Some(start), &mut r)?;
            Ok(trajectory_return(&traj, config.gamma))
        })
        .collect()
}
