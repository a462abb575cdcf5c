//! Multi-resolution state features.
//!
//! Around the robot, level `l` lays out a 3x3 arrangement of square
//! super-cells with side `3^l`. The eight outer super-cells each yield one
//! feature: their in-bounds score mass divided by the map's total remaining
//! score. Level `l + 1`'s center super-cell is exactly level `l`'s whole
//! arrangement, so resolution falls off with distance and the feature count
//! grows with the logarithm of the map size.
//!
//! Layout of the state vector `phi_s` (length `k`):
//!
//! ```text
//! [ level 0: N NE E SE S SW W NW | level 1: ... | ... | bias | heading one-hot (heading mode) ]
//! ```

use crate::error::{Error, Result};
use crate::field::{Cell, ScoreMap};
use crate::mdp::{ActionSpace, Heading};

/// Ring offsets `(d_row, d_col)` in super-cell units, clockwise from North.
const RING: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

/// Smallest `L` with `3^L >= max(width, height)` (at least 1).
pub fn feature_levels(width: usize, height: usize) -> usize {
    let target = width.max(height).max(1);
    let mut levels = 1;
    let mut span = 3;
    while span < target {
        span *= 3;
        levels += 1;
    }
    levels
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureLayout {
    pub levels: usize,
    pub mode: ActionSpace,
}

impl FeatureLayout {
    pub fn new(levels: usize, mode: ActionSpace) -> Self {
        assert!(levels >= 1, "at least one feature level is required");
        FeatureLayout { levels, mode }
    }

    pub fn for_grid(width: usize, height: usize, mode: ActionSpace) -> Self {
        FeatureLayout::new(feature_levels(width, height), mode)
    }

    /// Length `k` of the state feature vector.
    pub fn state_dim(&self) -> usize {
        let heading = match self.mode {
            ActionSpace::FourConnected => 0,
            ActionSpace::HeadingConstrained => 8,
        };
        8 * self.levels + 1 + heading
    }

    pub fn action_count(&self) -> usize {
        self.mode.action_count()
    }

    pub fn total_dim(&self) -> usize {
        self.action_count() * self.state_dim()
    }

    /// Largest grid side fully spanned by the outermost level.
    pub fn coverage(&self) -> usize {
        3usize.pow(self.levels as u32)
    }

    fn bias_index(&self) -> usize {
        8 * self.levels
    }
}

fn block_sum(map: &ScoreMap, row0: isize, col0: isize, side: isize) -> f64 {
    let h = map.height() as isize;
    let w = map.width() as isize;
    let r0 = row0.max(0);
    let r1 = (row0 + side).min(h);
    let c0 = col0.max(0);
    let c1 = (col0 + side).min(w);
    if r0 >= r1 || c0 >= c1 {
        return 0.0;
    }
    let scores = map.scores();
    (r0..r1)
        .map(|r| {
            let start = (r * w + c0) as usize;
            let end = (r * w + c1) as usize;
            scores[start..end].iter().sum::<f64>()
        })
        .sum()
}

/// Computes `phi_s` for a robot at `cell`. `heading` is used only in heading mode.
pub fn state_features(map: &ScoreMap, cell: Cell, heading: Heading, layout: &FeatureLayout) -> Vec<f64> {
    debug_assert!(map.contains(cell));
    let mut phi = vec![0.0; layout.state_dim()];
    let total = map.total();
    if total > 0.0 {
        let (row, col) = (cell.row as isize, cell.col as isize);
        let mut side = 1isize;
        for level in 0..layout.levels {
            let half = (side - 1) / 2;
            for (j, (dr, dc)) in RING.iter().enumerate() {
                let row0 = row + dr * side - half;
                let col0 = col + dc * side - half;
                let mass = block_sum(map, row0, col0, side);
                phi[8 * level + j] = (mass / total).clamp(0.0, 1.0);
            }
            side *= 3;
        }
    }
    phi[layout.bias_index()] = 1.0;
    if layout.mode == ActionSpace::HeadingConstrained {
        phi[layout.bias_index() + 1 + heading.index()] = 1.0;
    }
    phi
}

/// Places `phi_s` in block `action` of an otherwise zero `|A| * k` vector.
pub fn action_features(phi_s: &[f64], action: usize, layout: &FeatureLayout) -> Result<Vec<f64>> {
    let k = phi_s.len();
    if action >= layout.action_count() {
        return Err(Error::InvalidArgument(format!(
            "action index {action} out of range for {} actions",
            layout.action_count()
        )));
    }
    let mut out = vec![0.0; layout.action_count() * k];
    out[action * k..(action + 1) * k].copy_from_slice(phi_s);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn four(levels: usize) -> FeatureLayout {
        FeatureLayout::new(levels, ActionSpace::FourConnected)
    }

    #[test]
    fn levels_examples() {
        assert_eq!(feature_levels(25, 25), 3);
        assert_eq!(feature_levels(3, 3), 1);
        assert_eq!(feature_levels(100, 40), 5);
        assert_eq!(feature_levels(1, 1), 1);
        assert_eq!(feature_levels(28, 2), 4);
    }

    #[test]
    fn layout_dimensions() {
        let l = FeatureLayout::for_grid(25, 25, ActionSpace::FourConnected);
        assert_eq!((l.state_dim(), l.total_dim()), (25, 100));
        let h = FeatureLayout::for_grid(25, 25, ActionSpace::HeadingConstrained);
        assert_eq!((h.state_dim(), h.total_dim()), (33, 99));
        for n in 1..=81 {
            let l = FeatureLayout::for_grid(n, n, ActionSpace::FourConnected);
            assert!(l.coverage() >= n);
        }
    }

    #[test]
    fn zero_map_only_bias() {
        let map = ScoreMap::zeros(9, 9);
        let phi = state_features(&map, Cell::new(4, 4), Heading::North, &four(2));
        assert_eq!(phi[16], 1.0);
        assert!(phi[..16].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_map_level_zero() {
        let map = ScoreMap::new(9, 9, vec![1.0; 81]).unwrap();
        let phi = state_features(&map, Cell::new(4, 4), Heading::North, &four(2));
        for v in &phi[..8] {
            assert_eq!(*v, 1.0 / 81.0);
        }
        // Level 1 ring blocks are 3x3 and fully inside the 9x9 map.
        for v in &phi[8..16] {
            assert_eq!(*v, 9.0 / 81.0);
        }
    }

    #[test]
    fn ring_order_is_clockwise_from_north() {
        let mut map = ScoreMap::zeros(3, 3);
        let mut scores = map.scores().to_vec();
        // N, E, S, W neighbours carry distinct masses.
        scores[1] = 1.0;
        scores[5] = 2.0;
        scores[7] = 3.0;
        scores[3] = 4.0;
        map = ScoreMap::new(3, 3, scores).unwrap();
        let phi = state_features(&map, Cell::new(1, 1), Heading::North, &four(1));
        assert_eq!(&phi[..8], &[0.1, 0.0, 0.2, 0.0, 0.3, 0.0, 0.4, 0.0]);
    }

    #[test]
    fn heading_one_hot_appended() {
        let layout = FeatureLayout::new(1, ActionSpace::HeadingConstrained);
        let map = ScoreMap::new(3, 3, vec![1.0; 9]).unwrap();
        let phi = state_features(&map, Cell::new(1, 1), Heading::SouthWest, &layout);
        assert_eq!(phi.len(), 17);
        assert_eq!(phi[8], 1.0);
        let one_hot = &phi[9..];
        assert_eq!(one_hot.iter().sum::<f64>(), 1.0);
        assert_eq!(one_hot[Heading::SouthWest.index()], 1.0);
    }

    #[test]
    fn action_feature_blocks() {
        let layout = four(1);
        let phi = [1.0, 2.0];
        let out = action_features(&phi, 0, &layout).unwrap();
        assert_eq!(out, vec![1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let last = action_features(&phi, 3, &layout).unwrap();
        assert!(last[..6].iter().all(|&v| v == 0.0));
        assert_eq!(&last[6..], &phi);
        assert!(action_features(&phi, 4, &layout).is_err());
    }

    #[test]
    fn block_dot_product_matches_full_dot_product() {
        let layout = four(2);
        let mut rng = rng::stream(11, &[]);
        let k = layout.state_dim();
        for _ in 0..20 {
            let phi: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
            let theta: Vec<f64> = (0..layout.total_dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            for a in 0..4 {
                let full = action_features(&phi, a, &layout).unwrap();
                let dot: f64 = theta.iter().zip(&full).map(|(t, f)| t * f).sum();
                let block: f64 = theta[a * k..(a + 1) * k].iter().zip(&phi).map(|(t, f)| t * f).sum();
                assert!((dot - block).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn translation_consistent_on_uniform_interior() {
        let map = ScoreMap::new(21, 21, vec![1.0; 441]).unwrap();
        let layout = four(2); // footprint 9x9, so centers 4..=16 stay in bounds
        let reference = state_features(&map, Cell::new(4, 4), Heading::North, &layout);
        for r in 4..=16 {
            for c in 4..=16 {
                assert_eq!(state_features(&map, Cell::new(r, c), Heading::North, &layout), reference);
            }
        }
    }

    proptest! {
        #[test]
        fn features_bounded(seed in any::<u64>(), w in 1usize..12, h in 1usize..12) {
            let mut rng = rng::stream(seed, &[]);
            let scores: Vec<f64> = (0..w * h).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) }).collect();
            let map = ScoreMap::new(w, h, scores).unwrap();
            let layout = FeatureLayout::for_grid(w, h, ActionSpace::FourConnected);
            let cell = Cell::new(rng.gen_range(0..h), rng.gen_range(0..w));
            let phi = state_features(&map, cell, Heading::North, &layout);
            prop_assert_eq!(phi.len(), layout.state_dim());
            prop_assert!(phi.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(phi[..8].iter().sum::<f64>() <= 1.0 + 1e-12);
            let ring_total: f64 = phi[..8 * layout.levels].iter().sum();
            prop_assert!(ring_total <= 1.0 + 1e-12);
        }

        #[test]
        fn scale_invariant(seed in any::<u64>(), scale in 0.01f64..100.0) {
            let mut rng = rng::stream(seed, &[]);
            let scores: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..1.0)).collect();
            let map = ScoreMap::new(8, 8, scores).unwrap();
            let scaled = map.weighted(|_| scale);
            let layout = four(2);
            let cell = Cell::new(rng.gen_range(0..8), rng.gen_range(0..8));
            let a = state_features(&map, cell, Heading::North, &layout);
            let b = state_features(&scaled, cell, Heading::North, &layout);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
