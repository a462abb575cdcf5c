//! Brute-force model of a single robot on a 2x2 grid, written without the
//! library so it can serve as an independent reference.
//!
//! Cells are row-major `[a b; c d]`. The robot starts at (0, 0) and scans
//! it, then takes `horizon` four-connected moves. Features are the level-0
//! ring (8 neighbours, share of remaining total) plus a bias.

pub const SIDE: usize = 2;
pub const K: usize = 9;
pub const ACTIONS: usize = 4;

/// N, E, S, W.
const MOVES: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];
/// Ring offsets clockwise from North.
const RING: [(isize, isize); 8] = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];

fn shift(pos: (usize, usize), (dr, dc): (isize, isize)) -> Option<(usize, usize)> {
    let r = pos.0 as isize + dr;
    let c = pos.1 as isize + dc;
    let inside = |v: isize| (0..SIDE as isize).contains(&v);
    (inside(r) && inside(c)).then_some((r as usize, c as usize))
}

pub fn features(map: &[f64; 4], pos: (usize, usize)) -> [f64; K] {
    let total: f64 = map.iter().sum();
    let mut phi = [0.0; K];
    if total > 0.0 {
        for (j, &off) in RING.iter().enumerate() {
            if let Some((r, c)) = shift(pos, off) {
                phi[j] = map[r * SIDE + c] / total;
            }
        }
    }
    phi[8] = 1.0;
    phi
}

pub fn feasible(pos: (usize, usize)) -> Vec<usize> {
    (0..ACTIONS).filter(|&a| shift(pos, MOVES[a]).is_some()).collect()
}

/// Probabilities over `feasible`, computed the long way.
pub fn probabilities(theta: &[f64], phi: &[f64; K], feasible: &[usize]) -> Vec<f64> {
    let logits: Vec<f64> = feasible
        .iter()
        .map(|&a| (0..K).map(|i| theta[a * K + i] * phi[i]).sum())
        .collect();
    let weights: Vec<f64> = logits.iter().map(|l| l.exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.iter().map(|w| w / z).collect()
}

/// One enumerated trajectory.
#[derive(Clone, Debug)]
pub struct Path {
    /// Chosen action per step.
    pub actions: Vec<usize>,
    pub probability: f64,
    /// Discounted action rewards, start scan excluded.
    pub ret: f64,
    /// `sum_t grad log pi(a_t | s_t)`.
    pub score: Vec<f64>,
}

pub fn enumerate(theta: &[f64], map: [f64; 4], horizon: usize, gamma: f64) -> Vec<Path> {
    let mut map = map;
    map[0] = 0.0; // start scan
    let mut out = Vec::new();
    let root = Path {
        actions: Vec::new(),
        probability: 1.0,
        ret: 0.0,
        score: vec![0.0; ACTIONS * K],
    };
    expand(theta, map, (0, 0), horizon, gamma, root, &mut out);
    out
}

fn expand(
    theta: &[f64],
    map: [f64; 4],
    pos: (usize, usize),
    horizon: usize,
    gamma: f64,
    path: Path,
    out: &mut Vec<Path>,
) {
    let t = path.actions.len();
    if t == horizon {
        out.push(path);
        return;
    }
    let phi = features(&map, pos);
    let acts = feasible(pos);
    let probs = probabilities(theta, &phi, &acts);
    for (i, &a) in acts.iter().enumerate() {
        let next = shift(pos, MOVES[a]).unwrap();
        let mut m = map;
        let reward = std::mem::take(&mut m[next.0 * SIDE + next.1]);
        let mut child = path.clone();
        child.actions.push(a);
        child.probability *= probs[i];
        child.ret += gamma.powi(t as i32) * reward;
        for (j, &b) in acts.iter().enumerate() {
            let coef = if b == a { 1.0 } else { 0.0 } - probs[j];
            for f in 0..K {
                child.score[b * K + f] += coef * phi[f];
            }
        }
        expand(theta, m, next, horizon, gamma, child, out);
    }
}

/// Expected discounted return.
pub fn objective(theta: &[f64], map: [f64; 4], horizon: usize, gamma: f64) -> f64 {
    enumerate(theta, map, horizon, gamma).iter().map(|p| p.probability * p.ret).sum()
}

/// `sum_tau p(tau) R(tau) grad log p(tau)`.
pub fn gradient(theta: &[f64], map: [f64; 4], horizon: usize, gamma: f64) -> Vec<f64> {
    let mut g = vec![0.0; theta.len()];
    for p in enumerate(theta, map, horizon, gamma) {
        for (gi, s) in g.iter_mut().zip(&p.score) {
            *gi += p.probability * p.ret * s;
        }
    }
    g
}

/// Central differences of [`objective`].
pub fn finite_difference_gradient(theta: &[f64], map: [f64; 4], horizon: usize, gamma: f64, h: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|i| {
            let mut up = theta.to_vec();
            let mut down = theta.to_vec();
            up[i] += h;
            down[i] -= h;
            (objective(&up, map, horizon, gamma) - objective(&down, map, horizon, gamma)) / (2.0 * h)
        })
        .collect()
}
