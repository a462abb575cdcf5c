//! The sampling decision process: robot state, action spaces, transitions
//! that collect and zero cell scores, and return discounting.

use crate::error::{Error, Result};
use crate::field::{Cell, ScoreMap};

/// Compass heading, clockwise from North.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Heading {
    #[default]
    North,
    NorthEast,
    East,
    SouthEast,
    South,
    SouthWest,
    West,
    NorthWest,
}

impl Heading {
    pub const ALL: [Heading; 8] = [
        Heading::North,
        Heading::NorthEast,
        Heading::East,
        Heading::SouthEast,
        Heading::South,
        Heading::SouthWest,
        Heading::West,
        Heading::NorthWest,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// `(d_row, d_col)` of one step along the heading.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Heading::North => (-1, 0),
            Heading::NorthEast => (-1, 1),
            Heading::East => (0, 1),
            Heading::SouthEast => (1, 1),
            Heading::South => (1, 0),
            Heading::SouthWest => (1, -1),
            Heading::West => (0, -1),
            Heading::NorthWest => (-1, -1),
        }
    }

    /// Rotates clockwise by `eighths` multiples of 45 degrees (negative = counter-clockwise).
    pub fn rotate(self, eighths: isize) -> Heading {
        Heading::ALL[(self.index() as isize + eighths).rem_euclid(8) as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ActionSpace {
    #[default]
    FourConnected,
    HeadingConstrained,
}

impl ActionSpace {
    /// The policy actions of the space, in their fixed order.
    pub fn actions(self) -> &'static [Action] {
        match self {
            ActionSpace::FourConnected => &[Action::North, Action::East, Action::South, Action::West],
            ActionSpace::HeadingConstrained => &[Action::Left45, Action::Straight, Action::Right45],
        }
    }

    pub fn action_count(self) -> usize {
        self.actions().len()
    }

    pub fn label(self) -> &'static str {
        match self {
            ActionSpace::FourConnected => "4conn",
            ActionSpace::HeadingConstrained => "heading",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "4conn" => Some(ActionSpace::FourConnected),
            "heading" => Some(ActionSpace::HeadingConstrained),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    North,
    East,
    South,
    West,
    Left45,
    Straight,
    Right45,
    /// In-place quarter turn, used only when no forward move is possible.
    TurnRight90,
    /// Remain in place. Baseline planners only; never feasible in the MDP.
    Stay,
}

impl Action {
    /// Position of the action in its space's policy ordering.
    pub fn policy_index(self) -> Option<usize> {
        match self {
            Action::North | Action::Left45 => Some(0),
            Action::East | Action::Straight => Some(1),
            Action::South | Action::Right45 => Some(2),
            Action::West => Some(3),
            Action::TurnRight90 | Action::Stay => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Action::North => "N",
            Action::East => "E",
            Action::South => "S",
            Action::West => "W",
            Action::Left45 => "L45",
            Action::Straight => "F",
            Action::Right45 => "R45",
            Action::TurnRight90 => "R90",
            Action::Stay => "stay",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        [
            Action::North,
            Action::East,
            Action::South,
            Action::West,
            Action::Left45,
            Action::Straight,
            Action::Right45,
            Action::TurnRight90,
            Action::Stay,
        ]
        .into_iter()
        .find(|a| a.label() == label)
    }

    /// The compass move between two 4-adjacent cells.
    pub fn between(from: Cell, to: Cell) -> Option<Action> {
        match (
            to.row as isize - from.row as isize,
            to.col as isize - from.col as isize,
        ) {
            (-1, 0) => Some(Action::North),
            (0, 1) => Some(Action::East),
            (1, 0) => Some(Action::South),
            (0, -1) => Some(Action::West),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RobotState {
    pub id: usize,
    pub position: Cell,
    /// Only consulted in [`ActionSpace::HeadingConstrained`].
    pub heading: Heading,
    pub alive: bool,
}

impl RobotState {
    pub fn new(id: usize, position: Cell) -> Self {
        RobotState {
            id,
            position,
            heading: Heading::North,
            alive: true,
        }
    }

    pub fn with_heading(mut self, heading: Heading) -> Self {
        self.heading = heading;
        self
    }
}

fn offset_cell(cell: Cell, (dr, dc): (isize, isize), width: usize, height: usize) -> Option<Cell> {
    let row = cell.row.checked_add_signed(dr)?;
    let col = cell.col.checked_add_signed(dc)?;
    (row < height && col < width).then_some(Cell::new(row, col))
}

/// Where `action` takes the robot, or `None` if it would leave the grid.
pub fn destination(
    state: &RobotState,
    action: Action,
    width: usize,
    height: usize,
) -> Option<(Cell, Heading)> {
    let heading = match action {
        Action::North => Heading::North,
        Action::East => Heading::East,
        Action::South => Heading::South,
        Action::West => Heading::West,
        Action::Left45 => state.heading.rotate(-1),
        Action::Straight => state.heading,
        Action::Right45 => state.heading.rotate(1),
        Action::TurnRight90 => return Some((state.position, state.heading.rotate(2))),
        Action::Stay => return None,
    };
    offset_cell(state.position, heading.offset(), width, height).map(|c| (c, heading))
}

/// Actions whose destination lies inside the grid, in the space's fixed order.
///
/// In heading mode, when every forward move leaves the grid the only
/// feasible action is the in-place [`Action::TurnRight90`].
pub fn feasible_actions(
    state: &RobotState,
    width: usize,
    height: usize,
    mode: ActionSpace,
) -> Result<Vec<Action>> {
    if state.position.row >= height || state.position.col >= width {
        return Err(Error::Contract(format!(
            "robot {} at {} is outside the {width}x{height} grid",
            state.id, state.position
        )));
    }
    let actions: Vec<Action> = mode
        .actions()
        .iter()
        .copied()
        .filter(|&a| destination(state, a, width, height).is_some())
        .collect();
    if actions.is_empty() && mode == ActionSpace::HeadingConstrained {
        return Ok(vec![Action::TurnRight90]);
    }
    Ok(actions)
}

/// Authoritative world: remaining scores plus every robot's state.
#[derive(Clone, Debug)]
pub struct WorldState {
    pub truth: ScoreMap,
    pub robots: Vec<RobotState>,
    pub time: usize,
}

impl WorldState {
    pub fn new(truth: ScoreMap, robots: Vec<RobotState>) -> Result<Self> {
        for (i, r) in robots.iter().enumerate() {
            if !truth.contains(r.position) {
                return Err(Error::Contract(format!(
                    "robot {} starts at {} outside the grid",
                    r.id, r.position
                )));
            }
            if robots[..i].iter().any(|o| o.id == r.id) {
                return Err(Error::Contract(format!("duplicate robot id {}", r.id)));
            }
        }
        Ok(WorldState {
            truth,
            robots,
            time: 0,
        })
    }

    fn slot(&self, id: usize) -> Result<usize> {
        self.robots
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| Error::Contract(format!("no robot with id {id}")))
    }

    pub fn robot(&self, id: usize) -> Option<&RobotState> {
        self.robots.iter().find(|r| r.id == id)
    }

    /// Collects the score under the robot without moving it.
    pub fn scan(&mut self, id: usize) -> Result<f64> {
        let slot = self.slot(id)?;
        Ok(self.truth.take(self.robots[slot].position))
    }

    /// Applies a feasible action: moves the robot, collects and zeroes the
    /// destination score, and returns the undiscounted reward.
    pub fn step(&mut self, id: usize, action: Action, mode: ActionSpace) -> Result<f64> {
        let slot = self.slot(id)?;
        let state = self.robots[slot];
        let (w, h) = (self.truth.width(), self.truth.height());
        if !feasible_actions(&state, w, h, mode)?.contains(&action) {
            return Err(Error::Contract(format!(
                "action {} is infeasible for robot {id} at {}",
                action.label(),
                state.position
            )));
        }
        let (cell, heading) = destination(&state, action, w, h).expect("feasible action");
        let robot = &mut self.robots[slot];
        robot.position = cell;
        robot.heading = heading;
        if action == Action::TurnRight90 {
            return Ok(0.0);
        }
        Ok(self.truth.take(cell))
    }
}

/// `sum_t gamma^t r_t`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!(
            "discount {gamma} must lie in [0, 1]"
        )));
    }
    let mut weight = 1.0;
    let mut total = 0.0;
    for r in rewards {
        total += weight * r;
        weight *= gamma;
    }
    Ok(total)
}

/// `sum_t r_t / (1 + kappa t)`.
pub fn hyperbolic_return(rewards: &[f64], kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa {kappa} must be positive")));
    }
    Ok(rewards
        .iter()
        .enumerate()
        .map(|(t, r)| r / (1.0 + kappa * t as f64))
        .sum())
}

/// One occupied cell on a robot's timeline. Clock 0 is the start scan.
#[derive(Clone, Debug, PartialEq)]
pub struct Visit {
    pub t: usize,
    pub cell: Cell,
    pub heading: Heading,
    /// `None` for the start scan.
    pub action: Option<Action>,
    pub reward: f64,
}

/// A policy decision, kept for gradient estimation.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    /// Zero-based action step; its reward lands at clock `step + 1`.
    pub step: usize,
    /// State features the policy saw.
    pub features: Vec<f64>,
    /// Policy indices of the feasible actions.
    pub feasible: Vec<usize>,
    pub chosen: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub robot: usize,
    pub horizon: usize,
    pub visits: Vec<Visit>,
    pub decisions: Vec<Decision>,
}

impl Trajectory {
    pub fn new(robot: usize, horizon: usize) -> Self {
        Trajectory {
            robot,
            horizon,
            ..Default::default()
        }
    }

    /// Rewards indexed by clock time, including the start scan.
    pub fn clock_rewards(&self) -> Vec<f64> {
        let len = self.visits.last().map_or(0, |v| v.t + 1);
        let mut out = vec![0.0; len];
        for v in &self.visits {
            out[v.t] += v.reward;
        }
        out
    }

    /// Rewards earned by actions, indexed by action step (clock minus one).
    pub fn action_rewards(&self) -> Vec<f64> {
        let rewards = self.clock_rewards();
        rewards.get(1..).map(<[f64]>::to_vec).unwrap_or_default()
    }

    pub fn total_reward(&self) -> f64 {
        self.visits.iter().map(|v| v.reward).sum()
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.visits.iter().map(|v| v.cell)
    }
}
