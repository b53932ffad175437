//! Weighted binary relevance: one weighted binary problem per label.
//!
//! Instance `n` enters every binary problem with the same weight `w(y^n)`
//! and label `2 y_i^n − 1`. Zero-weight instances are kept so all problems
//! share the instance order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::MultilabelDataset;
use crate::error::{check_len, Error, Result};
use crate::learners::{
    train_ada_stumps, train_logreg, BinaryScorer, LinearModel, MultilabelScorer, Standardizer,
    StumpEnsemble, WeightedBinarySample,
};
use crate::loss::{rank_loss, ScoreVector, WeightSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BinaryModel {
    Stumps(StumpEnsemble),
    Linear(LinearModel),
}

impl BinaryModel {
    fn dim(&self) -> usize {
        match self {
            BinaryModel::Stumps(e) => e.dim(),
            BinaryModel::Linear(l) => l.dim(),
        }
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            BinaryModel::Stumps(e) => e.eval_unchecked(x),
            BinaryModel::Linear(l) => l.eval_unchecked(x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WbrLearner {
    /// Boosted stumps on the exponential loss.
    Ada { rounds: usize },
    /// L2 logistic regression on standardized features.
    Logreg { lambda: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WbrModel {
    pub m: usize,
    pub d: usize,
    pub per_label: Vec<BinaryModel>,
    pub weight: WeightSpec,
    pub standardizer: Option<Standardizer>,
}

impl WbrModel {
    /// Stump models cut to their first `rounds` stumps; linear models unchanged.
    pub fn truncated(&self, rounds: usize) -> Self {
        let per_label = self
            .per_label
            .iter()
            .map(|b| match b {
                BinaryModel::Stumps(e) => BinaryModel::Stumps(e.truncated(rounds)),
                other => other.clone(),
            })
            .collect();
        WbrModel {
            per_label,
            ..self.clone()
        }
    }
}

impl MultilabelScorer for WbrModel {
    fn m(&self) -> usize {
        self.m
    }

    fn d(&self) -> usize {
        self.d
    }

    fn scores(&self, x: &[f64]) -> Result<ScoreVector> {
        predict_scores(self, x)
    }
}

/// The `m` weighted binary problems of a dataset.
pub fn decompose(data: &MultilabelDataset, spec: &WeightSpec) -> Result<Vec<Vec<WeightedBinarySample>>> {
    let weights = data
        .instances()
        .iter()
        .map(|inst| spec.weight(&inst.labels))
        .collect::<Result<Vec<f64>>>()?;
    (0..data.m())
        .map(|i| {
            data.instances()
                .iter()
                .zip(&weights)
                .map(|(inst, &w)| WeightedBinarySample::new(inst.features.clone(), inst.labels.signed(i), w))
                .collect()
        })
        .collect()
}

fn standardized(data: &MultilabelDataset, s: &Standardizer) -> Result<MultilabelDataset> {
    let instances = data
        .instances()
        .iter()
        .map(|inst| {
            Ok(crate::dataio::Instance {
                features: s.apply(&inst.features)?,
                labels: inst.labels.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MultilabelDataset::new(data.m(), data.d(), instances)
}

/// Train one binary model per label; labels are trained in parallel and
/// the result does not depend on the number of workers.
pub fn train_wbr(data: &MultilabelDataset, spec: &WeightSpec, learner: WbrLearner) -> Result<WbrModel> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let (problems, standardizer) = match learner {
        WbrLearner::Ada { .. } => (decompose(data, spec)?, None),
        WbrLearner::Logreg { .. } => {
            let s = Standardizer::fit(data.d(), data.instances().iter().map(|i| i.features.as_slice()));
            (decompose(&standardized(data, &s)?, spec)?, Some(s))
        }
    };
    let per_label = problems
        .par_iter()
        .enumerate()
        .map(|(i, samples)| {
            let fitted = match learner {
                WbrLearner::Ada { rounds } => {
                    train_ada_stumps(samples, rounds).map(|f| BinaryModel::Stumps(f.ensemble))
                }
                WbrLearner::Logreg { lambda } => train_logreg(samples, lambda).map(BinaryModel::Linear),
            };
            fitted.map_err(|e| Error::Label {
                label: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WbrModel {
        m: data.m(),
        d: data.d(),
        per_label,
        weight: spec.clone(),
        standardizer,
    })
}

pub fn predict_scores(model: &WbrModel, x: &[f64]) -> Result<ScoreVector> {
    check_len(model.d, x.len())?;
    let z = match &model.standardizer {
        Some(s) => s.apply(x)?,
        None => x.to_vec(),
    };
    for b in &model.per_label {
        check_len(b.dim(), z.len())?;
    }
    ScoreVector::new(model.per_label.iter().map(|b| b.eval_unchecked(&z)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub mean: f64,
    pub per_instance: Vec<f64>,
}

/// Mean weighted rank loss of a scorer over a dataset.
pub fn evaluate(model: &dyn MultilabelScorer, data: &MultilabelDataset, spec: &WeightSpec) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation set".into()));
    }
    check_len(model.m(), data.m())?;
    check_len(model.d(), data.d())?;
    let per_instance = data
        .instances()
        .iter()
        .map(|inst| rank_loss(&inst.labels, &model.scores(&inst.features)?, spec))
        .collect::<Result<Vec<f64>>>()?;
    let mean = per_instance.iter().sum::<f64>() / per_instance.len() as f64;
    Ok(Evaluation { mean, per_instance })
}
