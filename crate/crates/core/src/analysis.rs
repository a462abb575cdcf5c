//! Team metrics, trial aggregation and Savitzky-Golay path smoothing.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::Cell;
use crate::fleet::TeamResult;

/// Default hyperbolic discount rate for evaluation.
pub const DEFAULT_KAPPA: f64 = 1.0;

/// `sum_k sum_t r_{k,t} / (1 + kappa t)` on the shared team clock.
pub fn team_discounted_reward(result: &TeamResult, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa {kappa} must be positive")));
    }
    Ok(result
        .trajectories
        .iter()
        .flat_map(|t| &t.visits)
        .map(|v| v.reward / (1.0 + kappa * v.t as f64))
        .sum())
}

pub fn team_undiscounted_reward(result: &TeamResult) -> f64 {
    result.collected()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Overlap {
    /// `sum_c max(0, distinct visitors of c - 1)`.
    pub count: usize,
    /// `count` over the number of cells visited by anyone.
    pub fraction: f64,
}

/// Wasted coverage: extra distinct robots per visited cell. Revisits by the
/// same robot do not count.
pub fn path_overlap(result: &TeamResult) -> Overlap {
    let mut visitors: HashMap<Cell, Vec<usize>> = HashMap::new();
    for traj in &result.trajectories {
        for v in &traj.visits {
            let who = visitors.entry(v.cell).or_default();
            if !who.contains(&traj.robot) {
                who.push(traj.robot);
            }
        }
    }
    let count = visitors.values().map(|w| w.len() - 1).sum();
    let fraction = if visitors.is_empty() {
        0.0
    } else {
        count as f64 / visitors.len() as f64
    };
    Overlap { count, fraction }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation over `sqrt(n)`; zero for a single trial.
    pub std_error: f64,
}

pub fn aggregate(values: &[f64]) -> Result<MetricSummary> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot aggregate zero trials".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    let std_error = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        var.sqrt() / n.sqrt()
    };
    Ok(MetricSummary {
        values: values.to_vec(),
        mean,
        median,
        std_error,
    })
}

fn check_window(window: usize, order: usize) -> Result<()> {
    if window % 2 == 0 || window == 0 {
        return Err(Error::InvalidArgument(format!("window {window} must be odd")));
    }
    if order >= window {
        return Err(Error::InvalidArgument(format!(
            "polynomial order {order} must be below the window {window}"
        )));
    }
    Ok(())
}

/// Least-squares weights that evaluate, at window position `at`, the degree
/// `order` polynomial fitted to a window of `window` equally spaced samples.
pub fn savgol_coefficients(window: usize, order: usize, at: usize) -> Result<Vec<f64>> {
    check_window(window, order)?;
    if at >= window {
        return Err(Error::InvalidArgument(format!("position {at} outside window {window}")));
    }
    let half = (window / 2) as f64;
    // Vandermonde matrix on centered abscissae keeps the normal equations well scaled.
    let design = DMatrix::from_fn(window, order + 1, |i, j| (i as f64 - half).powi(j as i32));
    let gram = design.transpose() * &design;
    let x0 = at as f64 - half;
    let basis = DVector::from_fn(order + 1, |j, _| x0.powi(j as i32));
    let solved = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("singular Savitzky-Golay system".into()))?
        .solve(&basis);
    Ok((design * solved).iter().copied().collect())
}

/// Smooths one signal. Interior points use the centered window; points
/// within half a window of either end use the polynomial fitted to the
/// first or last full window.
pub fn savgol_filter(signal: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    check_window(window, order)?;
    let n = signal.len();
    if n < window {
        return Err(Error::InvalidArgument(format!(
            "signal of length {n} is shorter than the window {window}"
        )));
    }
    let half = window / 2;
    let table: Vec<Vec<f64>> = (0..window)
        .map(|at| savgol_coefficients(window, order, at))
        .collect::<Result<_>>()?;
    let dot = |start: usize, coeffs: &[f64]| -> f64 {
        coeffs.iter().zip(&signal[start..start + window]).map(|(c, x)| c * x).sum()
    };
    Ok((0..n)
        .map(|i| {
            if i < half {
                dot(0, &table[i])
            } else if i + half >= n {
                dot(n - window, &table[i + window - n])
            } else {
                dot(i - half, &table[half])
            }
        })
        .collect())
}

/// Smooths a `(row, col)` path coordinate-wise.
pub fn savgol_smooth(path: &[[f64; 2]], window: usize, order: usize) -> Result<Vec<[f64; 2]>> {
    let rows: Vec<f64> = path.iter().map(|p| p[0]).collect();
    let cols: Vec<f64> = path.iter().map(|p| p[1]).collect();
    let rows = savgol_filter(&rows, window, order)?;
    let cols = savgol_filter(&cols, window, order)?;
    Ok(rows.into_iter().zip(cols).map(|(r, c)| [r, c]).collect())
}
