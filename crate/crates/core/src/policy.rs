//! Linear softmax policy over feasible actions.
//!
//! `pi(a | s) = exp(theta . phi_sa) / sum_{b feasible} exp(theta . phi_sb)`,
//! where `phi_sa` is `phi_s` placed in block `a` (see
//! [`action_features`](crate::features::action_features)). Infeasible
//! actions are outside the support entirely.

use rand::Rng;

use crate::error::{Error, Result};
use crate::features::FeatureLayout;

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams {
    pub theta: Vec<f64>,
    pub layout: FeatureLayout,
}

impl PolicyParams {
    pub fn zeros(layout: FeatureLayout) -> Self {
        PolicyParams {
            theta: vec![0.0; layout.total_dim()],
            layout,
        }
    }

    pub fn new(theta: Vec<f64>, layout: FeatureLayout) -> Result<Self> {
        if theta.len() != layout.total_dim() {
            return Err(Error::Config(format!(
                "parameter vector has {} entries, layout expects {}",
                theta.len(),
                layout.total_dim()
            )));
        }
        if let Some(i) = theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument(format!("theta[{i}] is not finite")));
        }
        Ok(PolicyParams { theta, layout })
    }

    fn block(&self, action: usize) -> &[f64] {
        let k = self.layout.state_dim();
        &self.theta[action * k..(action + 1) * k]
    }

    /// `theta . phi_sa` without materializing `phi_sa`.
    pub fn logit(&self, phi_s: &[f64], action: usize) -> f64 {
        self.block(action).iter().zip(phi_s).map(|(t, f)| t * f).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.theta.iter().fold(0.0, |m, t| m.max(t.abs()))
    }
}

fn check(params: &PolicyParams, phi_s: &[f64], feasible: &[usize]) -> Result<()> {
    if feasible.is_empty() {
        return Err(Error::Contract("empty feasible action set".into()));
    }
    if phi_s.len() != params.layout.state_dim() {
        return Err(Error::Contract(format!(
            "state features have length {}, layout expects {}",
            phi_s.len(),
            params.layout.state_dim()
        )));
    }
    if let Some(a) = feasible.iter().find(|&&a| a >= params.layout.action_count()) {
        return Err(Error::Contract(format!("action index {a} out of range")));
    }
    Ok(())
}

/// Probabilities over `feasible` (same order), via max-subtracted softmax.
pub fn action_probabilities(params: &PolicyParams, phi_s: &[f64], feasible: &[usize]) -> Result<Vec<f64>> {
    check(params, phi_s, feasible)?;
    let logits: Vec<f64> = feasible.iter().map(|&a| params.logit(phi_s, a)).collect();
    Ok(softmax(&logits))
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
    out
}

/// Inverse-CDF draw; returns a position in `probabilities`.
pub fn sample_action<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    // Rounding left the total just under 1: take the last supported action.
    probabilities
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probabilities.len() - 1)
}

/// Adds `scale * grad log pi(chosen | s)` into `out`.
pub fn accumulate_log_prob_gradient(
    params: &PolicyParams,
    phi_s: &[f64],
    chosen: usize,
    feasible: &[usize],
    scale: f64,
    out: &mut [f64],
) -> Result<()> {
    let probs = action_probabilities(params, phi_s, feasible)?;
    if !feasible.contains(&chosen) {
        return Err(Error::Contract(format!("chosen action {chosen} is not feasible")));
    }
    let k = params.layout.state_dim();
    for (&b, p) in feasible.iter().zip(&probs) {
        let coef = if b == chosen { 1.0 - p } else { -p };
        for (o, f) in out[b * k..(b + 1) * k].iter_mut().zip(phi_s) {
            *o += scale * coef * f;
        }
    }
    Ok(())
}

/// `phi_sa - sum_b pi(b) phi_sb` over the feasible set.
pub fn log_prob_gradient(params: &PolicyParams, phi_s: &[f64], chosen: usize, feasible: &[usize]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; params.layout.total_dim()];
    accumulate_log_prob_gradient(params, phi_s, chosen, feasible, 1.0, &mut out)?;
    Ok(out)
}
