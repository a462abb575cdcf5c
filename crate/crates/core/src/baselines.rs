//! Comparison planners.
//!
//! * `darp_lite`: equal-area division by balanced multi-source region growing,
//!   then a serpentine sweep of each region. An approximation of DARP that
//!   keeps its equal-area and complete-coverage properties without the
//!   iterative cyclic-coordinate optimization.
//! * `maxima`: each idle robot claims the highest-scoring unclaimed cell and
//!   drives there along an A* path, collecting on the way.
//!
//! Ties resolve to the lowest row-major index everywhere.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Error, Result};
use crate::field::{Cell, ScoreMap};
use crate::fleet::TeamResult;
use crate::mdp::{Action, ActionSpace, RobotState, Trajectory, Visit, WorldState};

fn neighbours(cell: Cell, width: usize, height: usize) -> impl Iterator<Item = Cell> {
    let Cell { row, col } = cell;
    [
        (row.wrapping_sub(1), col),
        (row, col + 1),
        (row + 1, col),
        (row, col.wrapping_sub(1)),
    ]
    .into_iter()
    .filter(move |&(r, c)| r < height && c < width)
    .map(|(r, c)| Cell::new(r, c))
}

/// Shortest 4-connected path through cells accepted by `passable`.
///
/// Unit step cost with the Manhattan heuristic. The path includes both ends.
pub fn astar_within(
    width: usize,
    height: usize,
    start: Cell,
    goal: Cell,
    passable: impl Fn(Cell) -> bool,
) -> Option<Vec<Cell>> {
    let index = |c: Cell| c.row * width + c.col;
    let mut g = vec![usize::MAX; width * height];
    let mut parent = vec![usize::MAX; width * height];
    let mut open = BinaryHeap::new();
    g[index(start)] = 0;
    // Ordered by f, then by h (deeper first), then row-major index.
    open.push(Reverse((start.manhattan(goal), start.manhattan(goal), index(start))));
    while let Some(Reverse((f, _, i))) = open.pop() {
        let cell = Cell::new(i / width, i % width);
        if cell == goal {
            let mut path = vec![cell];
            let mut at = i;
            while at != index(start) {
                at = parent[at];
                path.push(Cell::new(at / width, at % width));
            }
            path.reverse();
            return Some(path);
        }
        if f > g[i] + cell.manhattan(goal) {
            continue; // stale entry
        }
        for next in neighbours(cell, width, height) {
            if !passable(next) {
                continue;
            }
            let j = index(next);
            let cost = g[i] + 1;
            if cost < g[j] {
                g[j] = cost;
                parent[j] = i;
                let h = next.manhattan(goal);
                open.push(Reverse((cost + h, h, j)));
            }
        }
    }
    None
}

/// Obstacle-free A*.
pub fn astar(width: usize, height: usize, start: Cell, goal: Cell) -> Vec<Cell> {
    astar_within(width, height, start, goal, |_| true).expect("open grid is connected")
}

/// Owner of every cell plus per-robot cell counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionAssignment {
    pub width: usize,
    pub height: usize,
    pub owner: Vec<usize>,
    pub counts: Vec<usize>,
}

impl RegionAssignment {
    pub fn owner_of(&self, cell: Cell) -> usize {
        self.owner[cell.row * self.width + cell.col]
    }

    pub fn cells_of(&self, robot: usize) -> Vec<Cell> {
        (0..self.owner.len())
            .filter(|&i| self.owner[i] == robot)
            .map(|i| Cell::new(i / self.width, i % self.width))
            .collect()
    }

    /// Whether `robot`'s region is 4-connected (empty regions are not).
    pub fn is_connected(&self, robot: usize) -> bool {
        self.component_size(robot, None) == self.counts[robot] && self.counts[robot] > 0
    }

    /// Size of the component reachable from the region's first cell,
    /// optionally pretending `without` is not part of the region.
    fn component_size(&self, robot: usize, without: Option<usize>) -> usize {
        let member = |i: usize| self.owner[i] == robot && Some(i) != without;
        let Some(first) = (0..self.owner.len()).find(|&i| member(i)) else {
            return 0;
        };
        let mut seen = vec![false; self.owner.len()];
        let mut queue = VecDeque::from([first]);
        seen[first] = true;
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let cell = Cell::new(i / self.width, i % self.width);
            for n in neighbours(cell, self.width, self.height) {
                let j = n.row * self.width + n.col;
                if member(j) && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        size
    }
}

/// Equal-area partition grown from the robots' start cells.
///
/// Regions are grown round-robin from the start cells (see [`grow`]), then
/// rebalanced by moving boundary cells (with anything they would cut off)
/// toward smaller neighbours, possibly through a chain of regions. Both
/// growth orders are tried and the better balanced result is kept.
///
/// Regions are always connected and contain their own start. A spread of at
/// most `K` cells is reached whenever starts are not packed together; a start
/// boxed in by other starts can make that impossible.
pub fn divide_areas(width: usize, height: usize, starts: &[Cell]) -> Result<RegionAssignment> {
    let k = starts.len();
    let n = width * height;
    if k == 0 {
        return Err(Error::InvalidArgument("at least one robot is required".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("{k} robots exceed the {n} grid cells")));
    }
    for (i, s) in starts.iter().enumerate() {
        if s.row >= height || s.col >= width {
            return Err(Error::InvalidArgument(format!("start {s} is outside the grid")));
        }
        if starts[..i].contains(s) {
            return Err(Error::InvalidArgument(format!("start {s} is shared by two robots")));
        }
    }
    let spread = |a: &RegionAssignment| {
        let max = a.counts.iter().max().unwrap();
        let min = a.counts.iter().min().unwrap();
        (max - min, a.counts.iter().map(|c| c * c).sum::<usize>())
    };
    let best = [false, true]
        .into_iter()
        .map(|compact| {
            let mut a = grow(width, height, starts, compact);
            rebalance(&mut a, starts);
            a
        })
        .min_by_key(|a| spread(a))
        .unwrap();
    Ok(best)
}

/// Round-robin region growth. Each round every robot claims one free cell
/// bordering its region: the oldest queued neighbour (breadth-first), or
/// with `compact` the cell with the most neighbours already in the region.
fn grow(width: usize, height: usize, starts: &[Cell], compact: bool) -> RegionAssignment {
    const FREE: usize = usize::MAX;
    let k = starts.len();
    let n = width * height;
    let index = |c: Cell| c.row * width + c.col;
    let mut owner = vec![FREE; n];
    let mut counts = vec![1; k];
    let mut frontier: Vec<VecDeque<Cell>> = vec![VecDeque::new(); k];
    for (r, &s) in starts.iter().enumerate() {
        owner[index(s)] = r;
        frontier[r].extend(neighbours(s, width, height));
    }
    let mut owned = k;
    while owned < n {
        let mut progressed = false;
        for r in 0..k {
            let pick = if compact {
                (0..n)
                    .filter(|&i| owner[i] == FREE)
                    .filter_map(|i| {
                        let cell = Cell::new(i / width, i % width);
                        let own = neighbours(cell, width, height).filter(|&c| owner[index(c)] == r).count();
                        (own > 0).then(|| (std::cmp::Reverse(own), cell.manhattan(starts[r]), i))
                    })
                    .min()
                    .map(|(_, _, i)| i)
            } else {
                std::iter::from_fn(|| frontier[r].pop_front()).map(index).find(|&i| owner[i] == FREE)
            };
            if let Some(i) = pick {
                owner[i] = r;
                counts[r] += 1;
                owned += 1;
                progressed = true;
                let cell = Cell::new(i / width, i % width);
                frontier[r].extend(neighbours(cell, width, height).filter(|c| owner[index(*c)] == FREE));
            }
        }
        debug_assert!(progressed, "a connected grid always has a free frontier cell");
        if !progressed {
            break;
        }
    }
    RegionAssignment {
        width,
        height,
        owner,
        counts,
    }
}

fn rebalance(a: &mut RegionAssignment, starts: &[Cell]) {
    let mut is_start = vec![false; a.owner.len()];
    for s in starts {
        is_start[s.row * a.width + s.col] = true;
    }
    while chunk_move(a, starts) || chain_move(a, &is_start) {}
}

/// Non-start cell of `donor` bordering `to` whose removal keeps `donor`
/// connected.
fn movable_cell(a: &RegionAssignment, is_start: &[bool], donor: usize, to: usize) -> Option<usize> {
    (0..a.owner.len()).find(|&i| {
        a.owner[i] == donor
            && !is_start[i]
            && neighbours(Cell::new(i / a.width, i % a.width), a.width, a.height)
                .any(|c| a.owner[c.row * a.width + c.col] == to)
            && a.component_size(donor, Some(i)) == a.counts[donor] - 1
    })
}

fn transfer(a: &mut RegionAssignment, i: usize, to: usize) {
    let from = a.owner[i];
    a.owner[i] = to;
    a.counts[from] -= 1;
    a.counts[to] += 1;
}

/// Cells of `robot`'s region reachable from `start` without passing `cut`.
fn reachable(a: &RegionAssignment, robot: usize, start: Cell, cut: usize) -> Vec<bool> {
    let mut seen = vec![false; a.owner.len()];
    let first = start.row * a.width + start.col;
    seen[first] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for n in neighbours(c, a.width, a.height) {
            let j = n.row * a.width + n.col;
            if j != cut && a.owner[j] == robot && !seen[j] {
                seen[j] = true;
                queue.push_back(n);
            }
        }
    }
    seen
}

/// Gives a boundary cell, plus whatever its removal would cut off from the
/// donor's start, to a neighbour when that narrows the pair's gap.
fn chunk_move(a: &mut RegionAssignment, starts: &[Cell]) -> bool {
    let width = a.width;
    let mut best: Option<(usize, usize, usize, Vec<bool>)> = None;
    for i in 0..a.owner.len() {
        let donor = a.owner[i];
        let cell = Cell::new(i / width, i % width);
        if starts[donor] == cell {
            continue;
        }
        let receiver = neighbours(cell, width, a.height)
            .map(|c| a.owner[c.row * width + c.col])
            .filter(|&o| o != donor && a.counts[donor] >= a.counts[o] + 2)
            .min_by_key(|&o| (a.counts[o], o));
        let Some(to) = receiver else { continue };
        let kept = reachable(a, donor, starts[donor], i);
        let size = a.counts[donor] - kept.iter().filter(|&&k| k).count();
        if size < a.counts[donor] - a.counts[to] && best.as_ref().map_or(true, |b| size < b.2) {
            best = Some((i, to, size, kept));
            if size == 1 {
                break;
            }
        }
    }
    let Some((i, to, size, kept)) = best else {
        return false;
    };
    let donor = a.owner[i];
    for j in 0..a.owner.len() {
        if a.owner[j] == donor && !kept[j] {
            a.owner[j] = to;
        }
    }
    a.counts[donor] -= size;
    a.counts[to] += size;
    true
}

/// Shifts one cell along a chain of regions `s -> ... -> t` with
/// `count(s) >= count(t) + 2`, leaving intermediate counts unchanged.
fn chain_move(a: &mut RegionAssignment, is_start: &[bool]) -> bool {
    let k = a.counts.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&r| (a.counts[r], r));
    for &target in &order {
        // Breadth-first search backwards from the target over "can give to" edges.
        let mut next = vec![usize::MAX; k];
        let mut seen = vec![false; k];
        seen[target] = true;
        let mut queue = VecDeque::from([target]);
        let mut source = None;
        while let Some(v) = queue.pop_front() {
            for u in 0..k {
                if seen[u] || movable_cell(a, is_start, u, v).is_none() {
                    continue;
                }
                seen[u] = true;
                next[u] = v;
                if a.counts[u] >= a.counts[target] + 2 {
                    source = Some(u);
                    break;
                }
                queue.push_back(u);
            }
            if source.is_some() {
                break;
            }
        }
        let Some(source) = source else { continue };
        let mut path = vec![source];
        while *path.last().unwrap() != target {
            path.push(next[*path.last().unwrap()]);
        }
        let saved = (a.owner.clone(), a.counts.clone());
        let mut ok = true;
        for hop in path.windows(2).rev() {
            match movable_cell(a, is_start, hop[0], hop[1]) {
                Some(i) => transfer(a, i, hop[1]),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return true;
        }
        (a.owner, a.counts) = saved;
    }
    false
}

/// Serpentine sweep of `robot`'s region starting at `start`.
///
/// The region is cut into straight runs of unvisited cells, which are swept
/// end to end; gaps between runs are bridged by A* through the region.
/// Candidate run orders are a plain top-down or bottom-up row sweep and
/// nearest-run walks with a short lookahead over rows or columns; the
/// shortest walk is returned.
pub fn boustrophedon_path(assignment: &RegionAssignment, robot: usize, start: Cell) -> Result<Vec<Cell>> {
    let (w, h) = (assignment.width, assignment.height);
    if start.row >= h || start.col >= w || assignment.owner_of(start) != robot {
        return Err(Error::Contract(format!("start {start} is not in robot {robot}'s region")));
    }
    if !assignment.is_connected(robot) {
        return Err(Error::Contract(format!("robot {robot}'s region is disconnected")));
    }
    let mut best = Sweep::new(assignment, robot, start, false).ordered_rows();
    for columns in [false, true] {
        for dead_ends_first in [false, true] {
            let path = Sweep::new(assignment, robot, start, columns).lookahead(dead_ends_first, LOOKAHEAD);
            if path.len() < best.len() {
                best = path;
            }
        }
    }
    Ok(best)
}

/// Runs tried per step by the sweep's lookahead.
const LOOKAHEAD: usize = 3;

#[derive(Clone)]
struct Sweep<'a> {
    assignment: &'a RegionAssignment,
    robot: usize,
    /// Runs follow columns instead of rows.
    columns: bool,
    visited: Vec<bool>,
    path: Vec<Cell>,
}

impl<'a> Sweep<'a> {
    fn new(assignment: &'a RegionAssignment, robot: usize, start: Cell, columns: bool) -> Self {
        let mut visited = vec![false; assignment.owner.len()];
        visited[start.row * assignment.width + start.col] = true;
        Sweep {
            assignment,
            robot,
            columns,
            visited,
            path: vec![start],
        }
    }

    fn inside(&self, c: Cell) -> bool {
        self.assignment.owner_of(c) == self.robot
    }

    fn is_visited(&self, c: Cell) -> bool {
        self.visited[c.row * self.assignment.width + c.col]
    }

    fn lines(&self) -> usize {
        if self.columns {
            self.assignment.width
        } else {
            self.assignment.height
        }
    }

    fn line_len(&self) -> usize {
        if self.columns {
            self.assignment.height
        } else {
            self.assignment.width
        }
    }

    fn cell(&self, line: usize, pos: usize) -> Cell {
        if self.columns {
            Cell::new(pos, line)
        } else {
            Cell::new(line, pos)
        }
    }

    /// Maximal runs of unvisited region cells along `line`.
    fn pending_runs(&self, line: usize) -> Vec<(usize, usize)> {
        let mut runs: Vec<(usize, usize)> = Vec::new();
        for pos in 0..self.line_len() {
            let c = self.cell(line, pos);
            if self.inside(c) && !self.is_visited(c) {
                match runs.last_mut() {
                    Some((_, end)) if *end + 1 == pos => *end = pos,
                    _ => runs.push((pos, pos)),
                }
            }
        }
        runs
    }

    fn push(&mut self, cell: Cell) {
        if *self.path.last().unwrap() != cell {
            self.path.push(cell);
            self.visited[cell.row * self.assignment.width + cell.col] = true;
        }
    }

    /// Walks to `line[from]` and sweeps through to `line[to]`.
    fn sweep_run(&mut self, line: usize, from: usize, to: usize) {
        let here = *self.path.last().unwrap();
        let (w, h) = (self.assignment.width, self.assignment.height);
        let bridge = astar_within(w, h, here, self.cell(line, from), |c| self.inside(c)).expect("region is connected");
        for c in bridge {
            self.push(c);
        }
        let positions: Vec<usize> = if from <= to {
            (from..=to).collect()
        } else {
            (to..=from).rev().collect()
        };
        for pos in positions {
            self.push(self.cell(line, pos));
        }
    }

    fn run_entry(&self, here: Cell, line: usize, (a, b): (usize, usize)) -> (usize, usize, usize) {
        let (da, db) = (here.manhattan(self.cell(line, a)), here.manhattan(self.cell(line, b)));
        if da <= db {
            (da, a, b)
        } else {
            (db, b, a)
        }
    }

    /// Lines in order away from the region edge nearer the start; within a
    /// line, the nearest pending run first.
    fn ordered_rows(mut self) -> Vec<Cell> {
        let start = self.path[0];
        let cells = self.assignment.cells_of(self.robot);
        let top = cells.iter().map(|c| c.row).min().unwrap();
        let bottom = cells.iter().map(|c| c.row).max().unwrap();
        let rows: Vec<usize> = if start.row - top <= bottom - start.row {
            (top..=bottom).collect()
        } else {
            (top..=bottom).rev().collect()
        };
        for row in rows {
            loop {
                let here = *self.path.last().unwrap();
                let next = self.pending_runs(row).into_iter().map(|run| self.run_entry(here, row, run)).min();
                let Some((_, from, to)) = next else { break };
                self.sweep_run(row, from, to);
            }
        }
        self.path
    }

    /// Pending runs, best first: nearest entry by in-region distance, then
    /// (with `dead_ends_first`) runs whose far end leads nowhere new, then
    /// shorter runs. Each entry is `(line, entry, exit)`.
    fn ranked_runs(&self, dead_ends_first: bool) -> Vec<(usize, usize, usize)> {
        let here = *self.path.last().unwrap();
        let distance = self.distances_from(here);
        let width = self.assignment.width;
        let mut runs: Vec<_> = (0..self.lines())
            .flat_map(|line| self.pending_runs(line).into_iter().map(move |run| (line, run)))
            .map(|(line, (a, b))| {
                let (ca, cb) = (self.cell(line, a), self.cell(line, b));
                let (da, db) = (distance[ca.row * width + ca.col], distance[cb.row * width + cb.col]);
                let (d, from, to) = if da <= db { (da, a, b) } else { (db, b, a) };
                let exits = if dead_ends_first { self.open_neighbours(line, from, to) } else { 0 };
                (d, exits, b - a, line, from, to)
            })
            .collect();
        runs.sort_unstable();
        runs.into_iter().map(|(_, _, _, line, from, to)| (line, from, to)).collect()
    }

    /// Always sweeps the best-ranked run next.
    fn greedy(mut self, dead_ends_first: bool) -> Vec<Cell> {
        while let Some(&(line, from, to)) = self.ranked_runs(dead_ends_first).first() {
            self.sweep_run(line, from, to);
        }
        self.path
    }

    /// Greedy walk with one step of lookahead: each of the `width`
    /// best-ranked runs is tried by finishing greedily, and the run giving
    /// the shortest finished walk is taken.
    fn lookahead(mut self, dead_ends_first: bool, width: usize) -> Vec<Cell> {
        loop {
            let ranked = self.ranked_runs(dead_ends_first);
            let choice = match ranked.len() {
                0 => break,
                1 => ranked[0],
                _ => *ranked
                    .iter()
                    .take(width)
                    .min_by_key(|&&(line, from, to)| {
                        let mut trial = self.clone();
                        trial.sweep_run(line, from, to);
                        trial.greedy(dead_ends_first).len()
                    })
                    .unwrap(),
            };
            self.sweep_run(choice.0, choice.1, choice.2);
        }
        self.path
    }

    /// Unvisited region cells next to `line[to]`, other than the run itself.
    fn open_neighbours(&self, line: usize, from: usize, to: usize) -> usize {
        let (w, h) = (self.assignment.width, self.assignment.height);
        let (lo, hi) = (from.min(to), from.max(to));
        let run = |c: Cell| {
            let (l, p) = if self.columns { (c.col, c.row) } else { (c.row, c.col) };
            l == line && (lo..=hi).contains(&p)
        };
        neighbours(self.cell(line, to), w, h)
            .filter(|&c| self.inside(c) && !self.is_visited(c) && !run(c))
            .count()
    }

    /// Breadth-first step counts inside the region.
    fn distances_from(&self, from: Cell) -> Vec<usize> {
        let (w, h) = (self.assignment.width, self.assignment.height);
        let mut dist = vec![usize::MAX; w * h];
        dist[from.row * w + from.col] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            let d = dist[c.row * w + c.col];
            for n in neighbours(c, w, h) {
                let j = n.row * w + n.col;
                if self.inside(n) && dist[j] == usize::MAX {
                    dist[j] = d + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }
}

fn record(traj: &mut Trajectory, t: usize, cell: Cell, action: Option<Action>, reward: f64) {
    traj.visits.push(Visit {
        t,
        cell,
        heading: Default::default(),
        action,
        reward,
    });
}

fn check_team(starts: &[Cell], width: usize, height: usize) -> Result<()> {
    if starts.is_empty() {
        return Err(Error::InvalidArgument("at least one robot is required".into()));
    }
    if starts.len() > width * height {
        return Err(Error::InvalidArgument(format!(
            "{} robots do not fit on a {width}x{height} grid",
            starts.len()
        )));
    }
    Ok(())
}

fn start_world(truth: &ScoreMap, starts: &[Cell], horizon: usize) -> Result<(WorldState, Vec<Trajectory>)> {
    check_team(starts, truth.width(), truth.height())?;
    let robots = starts.iter().enumerate().map(|(i, &c)| RobotState::new(i, c)).collect();
    let mut world = WorldState::new(truth.clone(), robots)?;
    let mut trajs: Vec<Trajectory> = (0..starts.len()).map(|i| Trajectory::new(i, horizon)).collect();
    for (id, traj) in trajs.iter_mut().enumerate() {
        let reward = world.scan(id)?;
        record(traj, 0, starts[id], None, reward);
    }
    Ok((world, trajs))
}

/// Moves robot `id` one cell along a 4-connected path and records the visit.
fn advance(world: &mut WorldState, traj: &mut Trajectory, id: usize, next: Cell, t: usize) -> Result<()> {
    let here = world.robots[id].position;
    let action = Action::between(here, next)
        .ok_or_else(|| Error::Contract(format!("{here} -> {next} is not a single move")))?;
    let reward = world.step(id, action, ActionSpace::FourConnected)?;
    record(traj, t, next, Some(action), reward);
    Ok(())
}

/// Greedy multi-robot maxima search.
pub fn maxima_search_team(truth: &ScoreMap, starts: &[Cell], horizon: usize) -> Result<TeamResult> {
    let (mut world, mut trajs) = start_world(truth, starts, horizon)?;
    let (w, h) = (truth.width(), truth.height());
    let k = starts.len();
    let mut claims: Vec<Option<usize>> = vec![None; k];
    let mut routes: Vec<VecDeque<Cell>> = vec![VecDeque::new(); k];
    for t in 0..horizon {
        for id in 0..k {
            if routes[id].is_empty() {
                claims[id] = None;
                let scores = world.truth.scores();
                let target = (0..scores.len())
                    .filter(|i| !claims.contains(&Some(*i)))
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if scores[b] >= scores[i] => Some(b),
                        _ => Some(i),
                    })
                    .expect("more cells than robots");
                claims[id] = Some(target);
                let here = world.robots[id].position;
                routes[id] = astar(w, h, here, world.truth.cell_at(target)).into_iter().skip(1).collect();
            }
            match routes[id].pop_front() {
                Some(next) => advance(&mut world, &mut trajs[id], id, next, t + 1)?,
                None => {
                    let reward = world.scan(id)?;
                    let here = world.robots[id].position;
                    record(&mut trajs[id], t + 1, here, Some(Action::Stay), reward);
                }
            }
        }
    }
    Ok(TeamResult {
        trajectories: trajs,
        messages: vec![0; horizon],
        initial: truth.clone(),
        remaining: world.truth,
    })
}

/// Region seeds: each robot's start, or for a shared start the nearest
/// cell not already taken (BFS order).
fn distinct_seeds(starts: &[Cell], width: usize, height: usize) -> Vec<Cell> {
    let mut seeds: Vec<Cell> = Vec::with_capacity(starts.len());
    for &s in starts {
        if !seeds.contains(&s) {
            seeds.push(s);
            continue;
        }
        let mut seen = vec![false; width * height];
        let mut queue = VecDeque::from([s]);
        seen[s.row * width + s.col] = true;
        while let Some(c) = queue.pop_front() {
            if !seeds.contains(&c) {
                seeds.push(c);
                break;
            }
            for n in neighbours(c, width, height) {
                if !std::mem::replace(&mut seen[n.row * width + n.col], true) {
                    queue.push_back(n);
                }
            }
        }
    }
    seeds
}

/// Plans the full coverage route of every robot (start cell first).
pub fn coverage_plans(width: usize, height: usize, starts: &[Cell]) -> Result<Vec<Vec<Cell>>> {
    check_team(starts, width, height)?;
    let seeds = distinct_seeds(starts, width, height);
    let regions = divide_areas(width, height, &seeds)?;
    starts
        .iter()
        .zip(&seeds)
        .enumerate()
        .map(|(id, (&start, &seed))| {
            let mut plan = astar(width, height, start, seed);
            plan.extend(boustrophedon_path(&regions, id, seed)?.into_iter().skip(1));
            Ok(plan)
        })
        .collect()
}

/// Equal-area coverage team, truncated at `horizon` steps.
pub fn coverage_team(truth: &ScoreMap, starts: &[Cell], horizon: usize) -> Result<TeamResult> {
    let plans = coverage_plans(truth.width(), truth.height(), starts)?;
    let (mut world, mut trajs) = start_world(truth, starts, horizon)?;
    for t in 0..horizon {
        for (id, plan) in plans.iter().enumerate() {
            if let Some(&next) = plan.get(t + 1) {
                advance(&mut world, &mut trajs[id], id, next, t + 1)?;
            }
        }
    }
    Ok(TeamResult {
        trajectories: trajs,
        messages: vec![0; horizon],
        initial: truth.clone(),
        remaining: world.truth,
    })
}
