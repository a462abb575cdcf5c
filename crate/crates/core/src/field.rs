//! Score fields: dense 2-D grids of non-negative sampling utility.
//!
//! Row 0 is the top of the grid. Generators return maps normalized so that
//! the largest score is 1 (all-zero maps are left untouched).

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// A grid cell addressed by `(row, col)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    /// Euclidean distance in cell units.
    pub fn distance(self, other: Cell) -> f64 {
        let dr = self.row as f64 - other.row as f64;
        let dc = self.col as f64 - other.col as f64;
        dr.hypot(dc)
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Dense row-major grid of non-negative scores.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMap {
    width: usize,
    height: usize,
    scores: Vec<f64>,
}

impl ScoreMap {
    /// Builds a map from row-major scores, checking the map invariants.
    pub fn new(width: usize, height: usize, scores: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "map dimensions must be positive, got {width}x{height}"
            )));
        }
        if scores.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "expected {} scores for a {width}x{height} map, got {}",
                width * height,
                scores.len()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "score at {} is {}; scores must be finite and non-negative",
                Cell::new(i / width, i % width),
                scores[i]
            )));
        }
        Ok(ScoreMap {
            width,
            height,
            scores,
        })
    }

    /// An all-zero map. Panics on zero dimensions.
    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "map dimensions must be positive");
        ScoreMap {
            width,
            height,
            scores: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    /// Row-major index of `cell`.
    pub fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.contains(cell));
        cell.row * self.width + cell.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.width, index % self.width)
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.scores[self.index(cell)]
    }

    /// Zeroes `cell`, returning the score it held.
    pub fn take(&mut self, cell: Cell) -> f64 {
        let i = self.index(cell);
        std::mem::take(&mut self.scores[i])
    }

    /// Multiplies every score by the matching non-negative weight.
    pub fn weighted(&self, weight: impl Fn(Cell) -> f64) -> ScoreMap {
        let scores = self
            .scores
            .iter()
            .enumerate()
            .map(|(i, s)| s * weight(self.cell_at(i)))
            .collect();
        ScoreMap { scores, ..*self }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.scores.len()).map(|i| self.cell_at(i))
    }

    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.scores.iter().copied().fold(0.0, f64::max)
    }

    /// Divides by the maximum score. All-zero maps pass through unchanged.
    pub fn normalize(&mut self) {
        let max = self.max();
        if max > 0.0 {
            self.scores.iter_mut().for_each(|s| *s /= max);
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// Largest Euclidean distance between two cells of the grid.
    pub fn d_max(&self) -> f64 {
        d_max(self.width, self.height)
    }
}

/// Largest Euclidean distance between cells of a `width` x `height` grid.
pub fn d_max(width: usize, height: usize) -> f64 {
    let w = width.saturating_sub(1) as f64;
    let h = height.saturating_sub(1) as f64;
    w.hypot(h)
}

/// One weighted bivariate Gaussian, in `(row, col)` cell coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianComponent {
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GaussianMixtureSpec {
    pub components: Vec<GaussianComponent>,
}

impl GaussianMixtureSpec {
    pub fn new(components: Vec<GaussianComponent>) -> Self {
        GaussianMixtureSpec { components }
    }

    /// An axis-aligned isotropic component helper.
    pub fn isotropic(mean: [f64; 2], sigma: f64, weight: f64) -> GaussianComponent {
        let var = sigma * sigma;
        GaussianComponent {
            mean,
            covariance: [[var, 0.0], [0.0, var]],
            weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.components.iter().enumerate() {
            let [[a, b], [b2, d]] = c.covariance;
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "component {i}: weight {} must be positive",
                    c.weight
                )));
            }
            if b != b2 {
                return Err(Error::InvalidSpec(format!(
                    "component {i}: covariance is not symmetric"
                )));
            }
            if !(a > 0.0 && a * d - b * b > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "component {i}: covariance is not positive-definite"
                )));
            }
        }
        Ok(())
    }
}

/// Evaluates the mixture at cell centers and normalizes to max 1.
pub fn gaussian_mixture_field(
    width: usize,
    height: usize,
    spec: &GaussianMixtureSpec,
) -> Result<ScoreMap> {
    spec.validate()?;
    let mut map = ScoreMap::new(width, height, vec![0.0; width * height])?;
    // Precision matrices.
    let inverses: Vec<[[f64; 2]; 2]> = spec
        .components
        .iter()
        .map(|c| {
            let [[a, b], [_, d]] = c.covariance;
            let det = a * d - b * b;
            [[d / det, -b / det], [-b / det, a / det]]
        })
        .collect();
    for (i, score) in map.scores.iter_mut().enumerate() {
        let y = (i / width) as f64 + 0.5;
        let x = (i % width) as f64 + 0.5;
        *score = spec
            .components
            .iter()
            .zip(&inverses)
            .map(|(c, p)| {
                let dy = y - c.mean[0];
                let dx = x - c.mean[1];
                let q = dy * (p[0][0] * dy + p[0][1] * dx) + dx * (p[1][0] * dy + p[1][1] * dx);
                c.weight * (-0.5 * q).exp()
            })
            .sum();
    }
    Ok(map.normalized())
}

/// Ranges for drawing random Gaussian-mixture specs.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSampler {
    pub min_components: usize,
    pub max_components: usize,
    /// Standard deviations are drawn in this range, as a fraction of the
    /// larger grid dimension.
    pub sigma_fraction: (f64, f64),
    pub weight: (f64, f64),
}

impl Default for MixtureSampler {
    fn default() -> Self {
        MixtureSampler {
            min_components: 1,
            max_components: 3,
            sigma_fraction: (0.08, 0.25),
            weight: (0.5, 1.0),
        }
    }
}

impl MixtureSampler {
    pub fn with_components(n: usize) -> Self {
        MixtureSampler {
            min_components: n,
            max_components: n,
            ..Default::default()
        }
    }

    /// Draws a spec with random means, anisotropic rotated covariances and weights.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        width: usize,
        height: usize,
        rng: &mut R,
    ) -> GaussianMixtureSpec {
        let n = rng.gen_range(self.min_components..=self.max_components);
        let scale = width.max(height) as f64;
        let components = (0..n)
            .map(|_| {
                let mean = [
                    rng.gen_range(0.0..height as f64),
                    rng.gen_range(0.0..width as f64),
                ];
                let (lo, hi) = self.sigma_fraction;
                let s1 = rng.gen_range(lo..=hi) * scale;
                let s2 = rng.gen_range(lo..=hi) * scale;
                let angle = rng.gen_range(0.0..std::f64::consts::PI);
                let (sin, cos) = angle.sin_cos();
                let (v1, v2) = (s1 * s1, s2 * s2);
                let a = cos * cos * v1 + sin * sin * v2;
                let d = sin * sin * v1 + cos * cos * v2;
                let b = sin * cos * (v1 - v2);
                GaussianComponent {
                    mean,
                    covariance: [[a, b], [b, d]],
                    weight: rng.gen_range(self.weight.0..=self.weight.1),
                }
            })
            .collect();
        GaussianMixtureSpec { components }
    }
}

/// Explicit 5-point diffusion of point sources with zero-flux boundaries.
///
/// The raw (un-normalized) field is returned by [`diffuse`]; this wrapper
/// normalizes it to max 1.
pub fn diffusion_field(
    width: usize,
    height: usize,
    sources: &[(Cell, f64)],
    diffusion_coeff: f64,
    steps: usize,
) -> Result<ScoreMap> {
    Ok(diffuse(width, height, sources, diffusion_coeff, steps)?.normalized())
}

/// Un-normalized diffusion; total mass equals the sum of source strengths.
pub fn diffuse(
    width: usize,
    height: usize,
    sources: &[(Cell, f64)],
    diffusion_coeff: f64,
    steps: usize,
) -> Result<ScoreMap> {
    if diffusion_coeff > 0.25 {
        return Err(Error::Unstable(diffusion_coeff));
    }
    if !(diffusion_coeff >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "diffusion coefficient {diffusion_coeff} must be non-negative"
        )));
    }
    let mut map = ScoreMap::new(width, height, vec![0.0; width * height])?;
    for &(cell, strength) in sources {
        if !map.contains(cell) {
            return Err(Error::InvalidArgument(format!("source {cell} outside grid")));
        }
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "source strength {strength} must be non-negative"
            )));
        }
        let i = map.index(cell);
        map.scores[i] += strength;
    }
    let mut next = map.scores.clone();
    for _ in 0..steps {
        for r in 0..height {
            for c in 0..width {
                let i = r * width + c;
                let u = map.scores[i];
                // Reflecting boundary: a missing neighbour mirrors the cell itself.
                let n = if r > 0 { map.scores[i - width] } else { u };
                let s = if r + 1 < height { map.scores[i + width] } else { u };
                let w = if c > 0 { map.scores[i - 1] } else { u };
                let e = if c + 1 < width { map.scores[i + 1] } else { u };
                next[i] = u + diffusion_coeff * ((n - u) + (s - u) + (w - u) + (e - u));
            }
        }
        std::mem::swap(&mut map.scores, &mut next);
    }
    Ok(map)
}

/// Parses the CSV grid format: one row per line, `#` comment lines allowed.
pub fn parse_field(text: &str) -> Result<ScoreMap> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut width = None;
    let mut scores = Vec::new();
    let mut height = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row,
            col: 0,
            msg: e.to_string(),
        })?;
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Parse {
                row,
                col: record.len().min(expected),
                msg: format!("row has {} values, expected {expected}", record.len()),
            });
        }
        for (col, token) in record.iter().enumerate() {
            let value: f64 = token.parse().map_err(|_| Error::Parse {
                row,
                col,
                msg: format!("'{token}' is not a number"),
            })?;
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::Parse {
                    row,
                    col,
                    msg: format!("score {value} must be finite and non-negative"),
                });
            }
            scores.push(value);
        }
        height += 1;
    }
    let width = width.ok_or(Error::Parse {
        row: 0,
        col: 0,
        msg: "no data rows".into(),
    })?;
    ScoreMap::new(width, height, scores)
}

/// Renders the CSV grid format. Values use the shortest exact decimal form.
pub fn format_field(map: &ScoreMap) -> String {
    let mut out = String::with_capacity(map.len() * 8);
    for row in map.scores.chunks(map.width) {
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn load_field(path: impl AsRef<Path>) -> Result<ScoreMap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_field(&text)
}

pub fn save_field(map: &ScoreMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_field(map)).map_err(|e| Error::io(path, e))
}
