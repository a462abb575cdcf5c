//! Lock-step multi-robot simulation with range-limited state exchange.
//!
//! Every robot runs the same trained policy on its own local copy of the
//! scoremap. Rewards always come from one authoritative truth map, so a cell
//! is collected at most once no matter how stale a robot's view is.
//!
//! Exchanges happen every `comm_period` steps between every pair of live
//! robots within `comm_range * D_max` of each other. A message carries the
//! sender's current position and every cell it has visited since its last
//! successful exchange with that receiver; the receiver zeroes those cells
//! in its local map.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{Cell, ScoreMap};
use crate::learn::choose_action;
use crate::mdp::{ActionSpace, RobotState, Trajectory, Visit, WorldState};
use crate::policy::PolicyParams;
use crate::rng::{self, tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StartPreset {
    /// Every robot starts at cell (0, 0).
    #[default]
    Same,
    /// Robots take the corners in turn: top-left, bottom-right, top-right, bottom-left.
    Corners,
    /// Independent uniform cells drawn from the run seed.
    Random,
}

impl StartPreset {
    pub fn label(self) -> &'static str {
        match self {
            StartPreset::Same => "same",
            StartPreset::Corners => "corners",
            StartPreset::Random => "random",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "same" => Some(StartPreset::Same),
            "corners" => Some(StartPreset::Corners),
            "random" => Some(StartPreset::Random),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Starts {
    Preset(StartPreset),
    Explicit(Vec<Cell>),
}

impl Default for Starts {
    fn default() -> Self {
        Starts::Preset(StartPreset::Same)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Shaping {
    #[default]
    Off,
    /// Scales the local map by [`shaped_weight`] before feature extraction.
    DistanceWeighted,
}

/// Robot `robot` stops operating at clock `step`: it occupies clocks
/// `0..step` and is silent from then on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Failure {
    pub robot: usize,
    pub step: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FleetConfig {
    pub robots: usize,
    /// Communication radius as a fraction of the grid's `D_max`.
    pub comm_range: f64,
    pub comm_period: usize,
    pub horizon: usize,
    pub starts: Starts,
    pub shaping: Shaping,
    pub failures: Vec<Failure>,
    pub mode: ActionSpace,
    pub seed: u64,
}

impl Default for FleetConfig {
    fn default() -> Self {
        FleetConfig {
            robots: 2,
            comm_range: 0.3,
            comm_period: 20,
            horizon: 150,
            starts: Starts::default(),
            shaping: Shaping::Off,
            failures: Vec::new(),
            mode: ActionSpace::FourConnected,
            seed: 0,
        }
    }
}

impl FleetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.robots == 0 {
            return Err(Error::Config("a fleet needs at least one robot".into()));
        }
        if !(0.0..=1.0).contains(&self.comm_range) {
            return Err(Error::Config(format!(
                "communication range {} must lie in [0, 1]",
                self.comm_range
            )));
        }
        if self.comm_period == 0 {
            return Err(Error::Config("communication period must be at least 1".into()));
        }
        if let Some(f) = self.failures.iter().find(|f| f.robot >= self.robots) {
            return Err(Error::Config(format!(
                "failure names robot {} but the fleet has {} robots",
                f.robot, self.robots
            )));
        }
        if let Starts::Explicit(cells) = &self.starts {
            if cells.len() != self.robots {
                return Err(Error::Config(format!(
                    "{} start cells given for {} robots",
                    cells.len(),
                    self.robots
                )));
            }
        }
        Ok(())
    }

    /// First clock at which `robot` no longer operates.
    pub fn fail_step(&self, robot: usize) -> usize {
        self.failures
            .iter()
            .filter(|f| f.robot == robot)
            .map(|f| f.step)
            .min()
            .unwrap_or(usize::MAX)
    }

    /// Start cells for a `width` x `height` grid.
    pub fn start_cells(&self, width: usize, height: usize) -> Result<Vec<Cell>> {
        start_cells(&self.starts, self.robots, width, height, self.seed)
    }
}

pub fn start_cells(starts: &Starts, robots: usize, width: usize, height: usize, seed: u64) -> Result<Vec<Cell>> {
    let cells = match starts {
        Starts::Explicit(cells) => cells.clone(),
        Starts::Preset(StartPreset::Same) => vec![Cell::new(0, 0); robots],
        Starts::Preset(StartPreset::Corners) => {
            let corners = [
                Cell::new(0, 0),
                Cell::new(height - 1, width - 1),
                Cell::new(0, width - 1),
                Cell::new(height - 1, 0),
            ];
            (0..robots).map(|i| corners[i % 4]).collect()
        }
        Starts::Preset(StartPreset::Random) => {
            let mut r = rng::stream(seed, &[tag::STARTS]);
            (0..robots)
                .map(|_| Cell::new(r.gen_range(0..height), r.gen_range(0..width)))
                .collect()
        }
    };
    if let Some(c) = cells.iter().find(|c| c.row >= height || c.col >= width) {
        return Err(Error::Config(format!("start cell {c} is outside the {width}x{height} grid")));
    }
    Ok(cells)
}

/// What one robot knows.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalView {
    pub owner: usize,
    pub map: ScoreMap,
    /// Peer id to (last reported position, clock of the report).
    pub peers: BTreeMap<usize, (Cell, usize)>,
    /// Per-peer cells visited since the last successful exchange with that peer.
    pub outbox: Vec<Vec<Cell>>,
}

impl LocalView {
    pub fn new(owner: usize, prior: ScoreMap, robots: usize) -> Self {
        LocalView {
            owner,
            map: prior,
            peers: BTreeMap::new(),
            outbox: vec![Vec::new(); robots],
        }
    }

    /// Marks `cell` as sampled by the owner.
    pub fn record_visit(&mut self, cell: Cell) {
        self.map.take(cell);
        for (peer, log) in self.outbox.iter_mut().enumerate() {
            if peer != self.owner {
                log.push(cell);
            }
        }
    }

    pub fn peer_positions(&self) -> Vec<Cell> {
        self.peers.values().map(|(c, _)| *c).collect()
    }
}

/// Disk model: within `rho * dmax` (inclusive).
pub fn in_range(a: Cell, b: Cell, rho: f64, dmax: f64) -> bool {
    a.distance(b) <= rho * dmax
}

fn deliver(from: &mut LocalView, to: &mut LocalView, position: Cell, t: usize) {
    for cell in from.outbox[to.owner].drain(..) {
        to.map.take(cell);
    }
    to.peers.insert(from.owner, (position, t));
}

/// Runs the exchange for clock `t`; returns the number of messages sent.
///
/// `robots[i]` must describe the owner of `views[i]`.
pub fn exchange(
    views: &mut [LocalView],
    robots: &[RobotState],
    t: usize,
    comm_range: f64,
    comm_period: usize,
    dmax: f64,
) -> usize {
    if comm_period == 0 || t % comm_period != 0 {
        return 0;
    }
    let mut messages = 0;
    for j in 1..views.len() {
        for i in 0..j {
            let (a, b) = (&robots[i], &robots[j]);
            if !(a.alive && b.alive) || !in_range(a.position, b.position, comm_range, dmax) {
                continue;
            }
            let (head, tail) = views.split_at_mut(j);
            let (vi, vj) = (&mut head[i], &mut tail[0]);
            deliver(vi, vj, a.position, t);
            deliver(vj, vi, b.position, t);
            messages += 2;
        }
    }
    messages
}

/// Distance shaping weight for `cell`: mean distance from known peers over
/// the distance from the robot itself (clamped to at least 1).
pub fn shaped_weight(own: Cell, cell: Cell, peers: &[Cell]) -> f64 {
    if peers.is_empty() {
        return 1.0;
    }
    let mean_peer = peers.iter().map(|p| p.distance(cell)).sum::<f64>() / peers.len() as f64;
    mean_peer / own.distance(cell).max(1.0)
}

/// Outcome of one team run.
#[derive(Clone, Debug, PartialEq)]
pub struct TeamResult {
    /// One trajectory per robot, in id order.
    pub trajectories: Vec<Trajectory>,
    /// Messages sent at each exchange clock `0..horizon`.
    pub messages: Vec<usize>,
    pub initial: ScoreMap,
    pub remaining: ScoreMap,
}

impl TeamResult {
    pub fn total_messages(&self) -> usize {
        self.messages.iter().sum()
    }

    pub fn collected(&self) -> f64 {
        self.trajectories.iter().map(Trajectory::total_reward).sum()
    }
}

/// Simulates the fleet; see the module docs for the protocol.
pub fn simulate_team(truth: &ScoreMap, params: &PolicyParams, config: &FleetConfig) -> Result<TeamResult> {
    simulate_team_observed(truth, params, config, |_, _, _| {})
}

/// As [`simulate_team`], calling `observer(t, views, robots)` after every exchange.
pub fn simulate_team_observed(
    truth: &ScoreMap,
    params: &PolicyParams,
    config: &FleetConfig,
    mut observer: impl FnMut(usize, &[LocalView], &[RobotState]),
) -> Result<TeamResult> {
    config.validate()?;
    if params.layout.mode != config.mode {
        return Err(Error::Config(format!(
            "policy was trained for action mode '{}' but the fleet uses '{}'",
            params.layout.mode.label(),
            config.mode.label()
        )));
    }
    let k = config.robots;
    let starts = config.start_cells(truth.width(), truth.height())?;
    let fail: Vec<usize> = (0..k).map(|id| config.fail_step(id)).collect();
    let robots = starts
        .iter()
        .enumerate()
        .map(|(id, &c)| RobotState {
            alive: fail[id] > 0,
            ..RobotState::new(id, c)
        })
        .collect();
    let mut world = WorldState::new(truth.clone(), robots)?;
    let mut views: Vec<LocalView> = (0..k).map(|id| LocalView::new(id, truth.clone(), k)).collect();
    let mut streams: Vec<_> = (0..k).map(|id| rng::stream(config.seed, &[tag::ROBOT, id as u64])).collect();
    let mut trajectories: Vec<Trajectory> = (0..k).map(|id| Trajectory::new(id, config.horizon)).collect();
    let dmax = truth.d_max();

    for id in (0..k).filter(|&id| fail[id] > 0) {
        let reward = world.scan(id)?;
        let robot = world.robots[id];
        views[id].record_visit(robot.position);
        trajectories[id].visits.push(Visit {
            t: 0,
            cell: robot.position,
            heading: robot.heading,
            action: None,
            reward,
        });
    }

    let mut messages = Vec::with_capacity(config.horizon);
    for t in 0..config.horizon {
        for (id, robot) in world.robots.iter_mut().enumerate() {
            robot.alive = fail[id] > t;
        }
        messages.push(exchange(
            &mut views,
            &world.robots,
            t,
            config.comm_range,
            config.comm_period,
            dmax,
        ));
        observer(t, &views, &world.robots);

        for id in 0..k {
            if fail[id] <= t + 1 {
                continue;
            }
            let state = world.robots[id];
            let (action, decision) = match config.shaping {
                Shaping::Off => choose_action(&views[id].map, &state, params, t, &mut streams[id])?,
                Shaping::DistanceWeighted => {
                    let peers = views[id].peer_positions();
                    let shaped = views[id]
                        .map
                        .weighted(|c| shaped_weight(state.position, c, &peers));
                    choose_action(&shaped, &state, params, t, &mut streams[id])?
                }
            };
            let reward = world.step(id, action, config.mode)?;
            let robot = world.robots[id];
            views[id].record_visit(robot.position);
            trajectories[id].visits.push(Visit {
                t: t + 1,
                cell: robot.position,
                heading: robot.heading,
                action: Some(action),
                reward,
            });
            trajectories[id].decisions.extend(decision);
        }
    }
    Ok(TeamResult {
        trajectories,
        messages,
        initial: truth.clone(),
        remaining: world.truth,
    })
}
