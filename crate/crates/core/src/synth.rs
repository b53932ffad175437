//! Latent linear model for synthetic multilabel data.
//!
//! `f = A x + ε`, `y = [M f > 0]` with `x` uniform on the unit disk, rows of
//! `A` uniform on the unit circle and `ε ~ N(0, σ² I)`. `M = I` gives
//! conditionally independent labels; a random `M` with entries in `[−1, 1]`
//! couples them.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{Instance, MultilabelDataset};
use crate::error::{Error, Result};
use crate::loss::{LabelVector, WeightSpec};
use crate::oracle::{bayes_rank_risk, compute_deltas, ConditionalLabelDistribution};
use crate::rng;

pub const DEFAULT_NOISE_SD: f64 = 0.5;

/// Largest label count for which [`mc_conditional`] tabulates `P(y | x)`.
pub const MAX_MC_LABELS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModel {
    pub m: usize,
    /// `m × 2`, each row of unit norm.
    pub a: Vec<[f64; 2]>,
    /// `m × m` mixing matrix.
    pub mixing: Vec<Vec<f64>>,
    pub dependent: bool,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SyntheticModel {
    pub fn with_noise_sd(mut self, noise_sd: f64) -> Result<Self> {
        if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
            return Err(Error::InvalidArgument(format!("noise sd must be >= 0, got {noise_sd}")));
        }
        self.noise_sd = noise_sd;
        Ok(self)
    }

    /// Labels at `x` for one noise draw.
    pub fn labels_at<R: Rng + ?Sized>(&self, x: [f64; 2], rng: &mut R) -> LabelVector {
        let f: Vec<f64> = self
            .a
            .iter()
            .map(|row| {
                let e: f64 = StandardNormal.sample(rng);
                row[0] * x[0] + row[1] * x[1] + self.noise_sd * e
            })
            .collect();
        let bits = self
            .mixing
            .iter()
            .map(|mrow| (mrow.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>() > 0.0) as u8)
            .collect();
        LabelVector::new(bits).expect("m >= 2")
    }
}

pub fn sample_model(m: usize, dependent: bool, seed: u64) -> Result<SyntheticModel> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need m >= 2, got {m}")));
    }
    let mut r = rng::stream(seed, 0);
    let a = (0..m)
        .map(|_| {
            let t = TAU * r.random::<f64>();
            [t.cos(), t.sin()]
        })
        .collect();
    let mixing = if dependent {
        let mut r = rng::stream(seed, 1);
        (0..m)
            .map(|_| (0..m).map(|_| r.random_range(-1.0..=1.0)).collect())
            .collect()
    } else {
        (0..m)
            .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    };
    Ok(SyntheticModel {
        m,
        a,
        mixing,
        dependent,
        noise_sd: DEFAULT_NOISE_SD,
        seed,
    })
}

/// Uniform point on the unit disk.
pub fn disk_point<R: Rng + ?Sized>(rng: &mut R) -> [f64; 2] {
    let r = rng.random::<f64>().sqrt();
    let t = TAU * rng.random::<f64>();
    [r * t.cos(), r * t.sin()]
}

/// `n` instances; instance `k` uses its own stream so generation can run in
/// parallel without changing the output.
pub fn sample_dataset(model: &SyntheticModel, n: usize, seed: u64) -> Result<MultilabelDataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("need n >= 1".into()));
    }
    let instances = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            let x = disk_point(&mut r);
            let labels = model.labels_at(x, &mut r);
            Instance {
                features: x.to_vec(),
                labels,
            }
        })
        .collect();
    let mut data = MultilabelDataset::new(model.m, 2, instances)?;
    data.name = Some("synthetic".into());
    data.comments = vec![format!(
        " model_seed={} mixing={} noise_sd={:?} data_seed={} n={}",
        model.seed,
        if model.dependent { "random" } else { "identity" },
        model.noise_sd,
        seed,
        n
    )];
    Ok(data)
}

#[derive(Clone, Debug)]
pub struct McConditional {
    /// Empirical `P(y | x)` over the noise draws.
    pub dist: ConditionalLabelDistribution,
    /// Estimated `P(Y_i = 1 | x)`.
    pub marginals: Vec<f64>,
    pub marginal_se: Vec<f64>,
    pub reps: usize,
}

/// Monte-Carlo estimate of the conditional label distribution at `x`.
pub fn mc_conditional(model: &SyntheticModel, x: [f64; 2], reps: usize, seed: u64) -> Result<McConditional> {
    if reps == 0 {
        return Err(Error::InvalidArgument("need reps >= 1".into()));
    }
    if model.m > MAX_MC_LABELS {
        return Err(Error::InvalidArgument(format!(
            "conditional table needs m <= {MAX_MC_LABELS}, got {}",
            model.m
        )));
    }
    let mut r = rng::stream(seed, 0);
    let mut counts = vec![0u64; 1 << model.m];
    for _ in 0..reps {
        counts[model.labels_at(x, &mut r).index()] += 1;
    }
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / reps as f64).collect();
    let total: f64 = probs.iter().sum();
    let dist = ConditionalLabelDistribution::new(model.m, probs.into_iter().map(|p| p / total).collect())?;
    let marginals: Vec<f64> = (0..model.m)
        .map(|i| {
            counts
                .iter()
                .enumerate()
                .filter(|(k, _)| (k >> i) & 1 == 1)
                .map(|(_, &c)| c)
                .sum::<u64>() as f64
                / reps as f64
        })
        .collect();
    let marginal_se = marginals
        .iter()
        .map(|p| (p * (1.0 - p) / reps as f64).sqrt())
        .collect();
    Ok(McConditional {
        dist,
        marginals,
        marginal_se,
        reps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Bootstrap standard error over the test points.
    pub se: f64,
}

const BOOTSTRAP_RESAMPLES: usize = 200;

/// Average Bayes rank risk over `n_test` disk points, each from an
/// estimated conditional table.
pub fn mc_bayes_risk(
    model: &SyntheticModel,
    spec: &WeightSpec,
    n_test: usize,
    reps_per_x: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_test == 0 {
        return Err(Error::InvalidArgument("need n_test >= 1".into()));
    }
    let point_seed = rng::derive_seed(seed, 1);
    let noise_seed = rng::derive_seed(seed, 2);
    let risks = (0..n_test)
        .into_par_iter()
        .map(|t| {
            let x = disk_point(&mut rng::stream(point_seed, t as u64));
            let mc = mc_conditional(model, x, reps_per_x, rng::derive_seed(noise_seed, t as u64))?;
            Ok(bayes_rank_risk(&compute_deltas(&mc.dist, spec)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = risks.len();
    let mean = risks.iter().sum::<f64>() / n as f64;
    let mut r = rng::stream(rng::derive_seed(seed, 3), 0);
    let boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| risks[r.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    let bm = boot.iter().sum::<f64>() / boot.len() as f64;
    let se = (boot.iter().map(|b| (b - bm) * (b - bm)).sum::<f64>() / (boot.len() - 1) as f64).sqrt();
    Ok(McEstimate { mean, se })
}
