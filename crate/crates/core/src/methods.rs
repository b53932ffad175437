//! Training methods behind one trait, registered by name.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::MultilabelDataset;
use crate::error::{Error, Result};
use crate::learners::{
    train_pairwise_linear, train_pairwise_stumps, MultilabelScorer, PairwiseLinearModel,
    PairwiseLinearOptions, PairwiseStumpModel,
};
use crate::loss::{ScoreVector, Surrogate, WeightSpec};
use crate::wbr::{train_wbr, WbrLearner, WbrModel};

pub const MODEL_FORMAT: &str = "mlrank-model";
pub const MODEL_VERSION: u32 = 1;

pub const STUMP_GRID: [f64; 5] = [10.0, 20.0, 50.0, 100.0, 200.0];
pub const PAIRWISE_STUMP_GRID: [f64; 11] = [
    10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0, 10000.0, 20000.0,
];
/// Largest λ first: lowest capacity first.
pub const LAMBDA_GRID: [f64; 7] = [1e3, 1e2, 1e1, 1.0, 1e-1, 1e-2, 1e-3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrainedModel {
    Wbr(WbrModel),
    PairwiseLinear(PairwiseLinearModel),
    PairwiseStumps(PairwiseStumpModel),
}

impl TrainedModel {
    fn scorer(&self) -> &dyn MultilabelScorer {
        match self {
            TrainedModel::Wbr(m) => m,
            TrainedModel::PairwiseLinear(m) => m,
            TrainedModel::PairwiseStumps(m) => m,
        }
    }
}

impl MultilabelScorer for TrainedModel {
    fn m(&self) -> usize {
        self.scorer().m()
    }

    fn d(&self) -> usize {
        self.scorer().d()
    }

    fn scores(&self, x: &[f64]) -> Result<ScoreVector> {
        self.scorer().scores(x)
    }
}

/// Self-describing model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub method: String,
    pub hyperparameter: f64,
    pub weight: WeightSpec,
    /// Free-form `key=value` provenance.
    #[serde(default)]
    pub provenance: Vec<String>,
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(method: &str, hyperparameter: f64, weight: WeightSpec, model: TrainedModel) -> Self {
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            method: method.into(),
            hyperparameter,
            weight,
            provenance: Vec::new(),
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("format").and_then(|f| f.as_str()) {
            Some(MODEL_FORMAT) => {}
            other => return Err(Error::ModelFormat(format!("format tag {other:?}"))),
        }
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_VERSION as u64 => {}
            other => return Err(Error::ModelFormat(format!("version {other:?}"))),
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

impl MultilabelScorer for ModelFile {
    fn m(&self) -> usize {
        self.model.m()
    }

    fn d(&self) -> usize {
        self.model.d()
    }

    fn scores(&self, x: &[f64]) -> Result<ScoreVector> {
        self.model.scores(x)
    }
}

/// A trainable multilabel ranking method with one tuned hyperparameter.
pub trait Method: Send + Sync {
    fn name(&self) -> &'static str;

    /// Name of the tuned hyperparameter.
    fn hyperparameter(&self) -> &'static str;

    /// Default grid for `m` labels, lowest capacity first.
    fn default_grid(&self, m: usize) -> Vec<f64>;

    /// Whether `value` is admissible for `m` labels.
    fn check(&self, value: f64, m: usize) -> Result<()>;

    /// Sort a grid so that lower capacity comes first.
    fn capacity_order(&self, grid: &mut Vec<f64>) {
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }

    /// One model per grid value, in the order given.
    fn fit_path(&self, data: &MultilabelDataset, spec: &WeightSpec, grid: &[f64]) -> Result<Vec<TrainedModel>>;

    fn fit(&self, data: &MultilabelDataset, spec: &WeightSpec, value: f64) -> Result<ModelFile> {
        let model = self
            .fit_path(data, spec, &[value])?
            .pop()
            .expect("one model per grid value");
        Ok(ModelFile::new(self.name(), value, spec.clone(), model))
    }
}

fn check_count(value: f64, min: usize, what: &str) -> Result<usize> {
    if value.fract() != 0.0 || !(value >= min as f64) || value > 1e9 {
        return Err(Error::InvalidArgument(format!(
            "{what} must be an integer >= {min}, got {value}"
        )));
    }
    Ok(value as usize)
}

fn check_lambda(value: f64) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {value}")));
    }
    Ok(())
}

fn descending(grid: &mut Vec<f64>) {
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
}

/// Per-label boosted stumps; grid values are stump counts per label.
#[derive(Clone, Debug, Default)]
pub struct WbrAda {
    /// Optional cap on stumps per label.
    pub max_stumps: Option<usize>,
}

impl Method for WbrAda {
    fn name(&self) -> &'static str {
        "wbr-ada"
    }

    fn hyperparameter(&self) -> &'static str {
        "stumps"
    }

    fn default_grid(&self, _m: usize) -> Vec<f64> {
        let cap = self.max_stumps.map(|c| c as f64).unwrap_or(f64::INFINITY);
        let mut grid: Vec<f64> = STUMP_GRID.iter().copied().filter(|&t| t <= cap).collect();
        if grid.is_empty() {
            grid.push(cap);
        }
        grid
    }

    fn check(&self, value: f64, _m: usize) -> Result<()> {
        let t = check_count(value, 1, "stump count")?;
        match self.max_stumps {
            Some(cap) if t > cap => Err(Error::InvalidArgument(format!(
                "stump count {t} exceeds the cap {cap}"
            ))),
            _ => Ok(()),
        }
    }

    fn fit_path(&self, data: &MultilabelDataset, spec: &WeightSpec, grid: &[f64]) -> Result<Vec<TrainedModel>> {
        for &v in grid {
            self.check(v, data.m())?;
        }
        let longest = grid.iter().fold(0.0f64, |a, &b| a.max(b)) as usize;
        let full = train_wbr(data, spec, WbrLearner::Ada { rounds: longest })?;
        Ok(grid
            .iter()
            .map(|&t| TrainedModel::Wbr(full.truncated(t as usize)))
            .collect())
    }
}

/// Per-label L2 logistic regression; grid values are `λ`.
#[derive(Clone, Debug, Default)]
pub struct WbrLogreg;

impl Method for WbrLogreg {
    fn name(&self) -> &'static str {
        "wbr-logreg"
    }

    fn hyperparameter(&self) -> &'static str {
        "lambda"
    }

    fn default_grid(&self, _m: usize) -> Vec<f64> {
        LAMBDA_GRID.to_vec()
    }

    fn check(&self, value: f64, _m: usize) -> Result<()> {
        check_lambda(value)
    }

    fn capacity_order(&self, grid: &mut Vec<f64>) {
        descending(grid);
    }

    fn fit_path(&self, data: &MultilabelDataset, spec: &WeightSpec, grid: &[f64]) -> Result<Vec<TrainedModel>> {
        grid.iter()
            .map(|&lambda| {
                check_lambda(lambda)?;
                Ok(TrainedModel::Wbr(train_wbr(data, spec, WbrLearner::Logreg { lambda })?))
            })
            .collect()
    }
}

/// Linear scorers trained on the pairwise logistic surrogate; grid values are `λ`.
#[derive(Clone, Debug, Default)]
pub struct PairwiseLog;

impl Method for PairwiseLog {
    fn name(&self) -> &'static str {
        "pairwise-log"
    }

    fn hyperparameter(&self) -> &'static str {
        "lambda"
    }

    fn default_grid(&self, _m: usize) -> Vec<f64> {
        LAMBDA_GRID.to_vec()
    }

    fn check(&self, value: f64, _m: usize) -> Result<()> {
        check_lambda(value)
    }

    fn capacity_order(&self, grid: &mut Vec<f64>) {
        descending(grid);
    }

    fn fit_path(&self, data: &MultilabelDataset, spec: &WeightSpec, grid: &[f64]) -> Result<Vec<TrainedModel>> {
        grid.iter()
            .map(|&lambda| {
                check_lambda(lambda)?;
                let opts = PairwiseLinearOptions {
                    phi: Surrogate::Logistic,
                    lambda,
                    ..Default::default()
                };
                Ok(TrainedModel::PairwiseLinear(train_pairwise_linear(data, spec, &opts)?.model))
            })
            .collect()
    }
}

/// Boosted per-label stumps on the pairwise exponential surrogate; grid
/// values are total stump counts.
#[derive(Clone, Debug, Default)]
pub struct PairwiseStumps;

impl Method for PairwiseStumps {
    fn name(&self) -> &'static str {
        "pairwise-stumps"
    }

    fn hyperparameter(&self) -> &'static str {
        "total_stumps"
    }

    fn default_grid(&self, m: usize) -> Vec<f64> {
        PAIRWISE_STUMP_GRID
            .iter()
            .copied()
            .filter(|&t| t >= m as f64)
            .collect()
    }

    fn check(&self, value: f64, m: usize) -> Result<()> {
        check_count(value, m, "total stump count").map(|_| ())
    }

    fn fit_path(&self, data: &MultilabelDataset, spec: &WeightSpec, grid: &[f64]) -> Result<Vec<TrainedModel>> {
        let m = data.m();
        for &v in grid {
            self.check(v, m)?;
        }
        let longest = grid.iter().fold(0.0f64, |a, &b| a.max(b)) as usize;
        let full = train_pairwise_stumps(data, spec, longest)?.model;
        Ok(grid
            .iter()
            .map(|&t| TrainedModel::PairwiseStumps(full.truncated(t as usize / m)))
            .collect())
    }
}

pub struct MethodRegistry {
    methods: BTreeMap<&'static str, Box<dyn Method>>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        MethodRegistry {
            methods: BTreeMap::new(),
        }
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(WbrAda::default()));
        r.register(Box::new(WbrLogreg));
        r.register(Box::new(PairwiseLog));
        r.register(Box::new(PairwiseStumps));
        r
    }

    /// Add or replace a method under its own name.
    pub fn register(&mut self, method: Box<dyn Method>) {
        self.methods.insert(method.name(), method);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Method> {
        self.methods
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownMethod(name.into()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.keys().copied().collect()
    }
}

impl Default for MethodRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}
