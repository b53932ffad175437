//! Binary and pairwise learners.

mod logreg;
mod pairwise;
mod stumps;

pub use logreg::{logreg_objective, train_logreg, LinearModel};
pub use pairwise::{
    pairwise_linear_objective, train_pairwise_linear, train_pairwise_stumps, PairwiseLinearFit,
    PairwiseLinearModel, PairwiseLinearOptions, PairwiseStumpFit, PairwiseStumpModel,
};
pub use stumps::{train_ada_stumps, AdaFit, Stump, StumpEnsemble};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::loss::{ScoreVector, SignedLabel};

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedBinarySample {
    pub features: Vec<f64>,
    pub label: SignedLabel,
    pub weight: f64,
}

impl WeightedBinarySample {
    pub fn new(features: Vec<f64>, label: SignedLabel, weight: f64) -> Result<Self> {
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::InvalidWeight(format!(
                "sample weight must be finite and non-negative, got {weight}"
            )));
        }
        Ok(WeightedBinarySample {
            features,
            label,
            weight,
        })
    }

    pub fn y(&self) -> f64 {
        self.label.value()
    }
}

/// Shared feature dimension of a sample set; errors on ragged input.
pub(crate) fn sample_dim(samples: &[WeightedBinarySample]) -> Result<usize> {
    let d = samples.first().map(|s| s.features.len()).unwrap_or(0);
    for s in samples {
        check_len(d, s.features.len())?;
    }
    Ok(d)
}

/// Total weight on the positive and on the negative class.
pub(crate) fn class_weights(samples: &[WeightedBinarySample]) -> (f64, f64) {
    samples.iter().fold((0.0, 0.0), |(p, n), s| match s.label {
        SignedLabel::Positive => (p + s.weight, n),
        SignedLabel::Negative => (p, n + s.weight),
    })
}

/// Real-valued scorer for one binary problem.
pub trait BinaryScorer {
    fn dim(&self) -> usize;

    fn predict(&self, x: &[f64]) -> Result<f64>;
}

/// Scorer producing one score per label.
pub trait MultilabelScorer {
    fn m(&self) -> usize;

    fn d(&self) -> usize;

    fn scores(&self, x: &[f64]) -> Result<ScoreVector>;
}

/// Per-feature affine map to mean 0 and variance 1.
///
/// Constant features keep scale 1 so they map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit<'a, I>(d: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut n = 0usize;
        let mut mean = vec![0.0; d];
        let mut m2 = vec![0.0; d];
        for row in rows {
            n += 1;
            for k in 0..d {
                let delta = row[k] - mean[k];
                mean[k] += delta / n as f64;
                m2[k] += delta * (row[k] - mean[k]);
            }
        }
        let scale = m2
            .iter()
            .map(|&s| {
                let sd = if n > 0 { (s / n as f64).sqrt() } else { 0.0 };
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len())?;
        Ok(x
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (mu, s))| (v - mu) / s)
            .collect())
    }
}
