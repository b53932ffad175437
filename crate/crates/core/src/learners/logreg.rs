//! Weighted L2-regularized logistic regression.

use serde::{Deserialize, Serialize};

use super::{class_weights, sample_dim, BinaryScorer, WeightedBinarySample};
use crate::error::{check_len, Error, Result};
use crate::loss::{sigmoid, softplus};
use crate::optim::{minimize, DescentOptions, DescentStatus};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn zeros(d: usize) -> Self {
        LinearModel {
            coefficients: vec![0.0; d],
            intercept: 0.0,
        }
    }

    /// From the packed layout `[coef_1, …, coef_d, intercept]`.
    pub fn from_params(params: &[f64]) -> Self {
        let d = params.len() - 1;
        LinearModel {
            coefficients: params[..d].to_vec(),
            intercept: params[d],
        }
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum::<f64>()
            + self.intercept
    }
}

impl BinaryScorer for LinearModel {
    fn dim(&self) -> usize {
        self.coefficients.len()
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_len(self.coefficients.len(), x.len())?;
        Ok(self.eval_unchecked(x))
    }
}

/// `Σ_n w_n log(1 + exp(−y_n (coef·x_n + b))) + λ‖coef‖²` at
/// `params = [coef, b]`, with its gradient written to `grad` if given.
pub fn logreg_objective(
    samples: &[WeightedBinarySample],
    lambda: f64,
    params: &[f64],
    grad: Option<&mut [f64]>,
) -> Result<f64> {
    let d = params.len() - 1;
    let mut value = 0.0;
    let mut g = grad;
    if let Some(g) = g.as_deref_mut() {
        check_len(d + 1, g.len())?;
        g.fill(0.0);
    }
    for s in samples {
        check_len(d, s.features.len())?;
        let t = s.features.iter().zip(params).map(|(x, c)| x * c).sum::<f64>() + params[d];
        let y = s.y();
        value += s.weight * softplus(-y * t);
        if let Some(g) = g.as_deref_mut() {
            let r = -y * s.weight * sigmoid(-y * t);
            for k in 0..d {
                g[k] += r * s.features[k];
            }
            g[d] += r;
        }
    }
    for k in 0..d {
        value += lambda * params[k] * params[k];
        if let Some(g) = g.as_deref_mut() {
            g[k] += 2.0 * lambda * params[k];
        }
    }
    Ok(value)
}

/// Fit by preconditioned descent to gradient ∞-norm `1e−8`.
///
/// Data with weight on one class only has no finite minimizer; it yields
/// zero coefficients and the smoothed log-odds as intercept.
pub fn train_logreg(samples: &[WeightedBinarySample], lambda: f64) -> Result<LinearModel> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let d = sample_dim(samples)?;
    if d == 0 {
        return Err(Error::InvalidArgument("need d >= 1".into()));
    }
    let (wp, wn) = class_weights(samples);
    let total = wp + wn;
    if total == 0.0 {
        return Ok(LinearModel::zeros(d));
    }
    if wp == 0.0 || wn == 0.0 {
        let delta = total / (2.0 * samples.len() as f64);
        let mut model = LinearModel::zeros(d);
        model.intercept = ((wp + delta) / (wn + delta)).ln();
        return Ok(model);
    }

    let mut diag = vec![0.0; d + 1];
    for s in samples {
        for k in 0..d {
            diag[k] += s.weight * s.features[k] * s.features[k];
        }
    }
    let precond: Vec<f64> = diag[..d]
        .iter()
        .map(|&h| h / 4.0 + 2.0 * lambda)
        .chain(std::iter::once(total / 4.0))
        .map(|h| if h > 0.0 { 1.0 / h } else { 1.0 })
        .collect();
    let opts = DescentOptions {
        preconditioner: Some(precond),
        ..Default::default()
    };
    let r = minimize(
        |p, g| logreg_objective(samples, lambda, p, Some(g)),
        vec![0.0; d + 1],
        &opts,
        |_, _| {},
    )?;
    let accepted = match r.status {
        DescentStatus::Converged => true,
        // flat to rounding: accept if the gradient is negligible relative to the data
        DescentStatus::Stalled => r.grad_norm <= 1e-6 * total.max(1.0),
        DescentStatus::IterationCap => false,
    };
    if !accepted {
        return Err(Error::NonConvergence {
            iterations: r.iterations,
            grad_norm: r.grad_norm,
            last_iterate: r.x,
        });
    }
    Ok(LinearModel::from_params(&r.x))
}
