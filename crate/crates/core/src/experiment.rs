//! Hyperparameter selection and learning curves.

use rayon::prelude::*;
use serde::Serialize;

use crate::dataio::{split, MultilabelDataset};
use crate::error::{Error, Result};
use crate::methods::{Method, MethodRegistry, ModelFile};
use crate::rng::derive_seed;
use crate::synth::{mc_bayes_risk, sample_dataset, sample_model, McEstimate};
use crate::wbr::evaluate;
use crate::loss::WeightSpec;

pub const HOLDOUT_TRAIN_FRACTION: f64 = 0.75;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuneRow {
    pub value: f64,
    /// `None` when the grid has a single value and no split is made.
    pub holdout_loss: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TuneOutcome {
    pub rows: Vec<TuneRow>,
    pub selected: f64,
    /// Refit on all of `data` with the selected value.
    pub model: ModelFile,
}

/// Choose a grid value by held-out rank loss on a 75/25 split, then refit
/// on the full data. Ties go to the lower-capacity value.
pub fn tune(
    method: &dyn Method,
    data: &MultilabelDataset,
    spec: &WeightSpec,
    grid: &[f64],
    seed: u64,
) -> Result<TuneOutcome> {
    let mut grid = grid.to_vec();
    method.capacity_order(&mut grid);
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
    }
    for &v in &grid {
        method.check(v, data.m())?;
    }
    if grid.len() == 1 {
        let model = method.fit(data, spec, grid[0])?;
        return Ok(TuneOutcome {
            rows: vec![TuneRow {
                value: grid[0],
                holdout_loss: None,
            }],
            selected: grid[0],
            model,
        });
    }
    let (train, holdout) = split(data, HOLDOUT_TRAIN_FRACTION, seed)?;
    let path = method.fit_path(&train, spec, &grid)?;
    let mut rows = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for (&value, model) in grid.iter().zip(&path) {
        let loss = evaluate(model, &holdout, spec)?.mean;
        if best.is_none_or(|(_, b)| loss < b) {
            best = Some((value, loss));
        }
        rows.push(TuneRow {
            value,
            holdout_loss: Some(loss),
        });
    }
    let selected = best.expect("non-empty grid").0;
    let model = method.fit(data, spec, selected)?;
    Ok(TuneOutcome {
        rows,
        selected,
        model,
    })
}

#[derive(Clone, Debug)]
pub struct CurveConfig {
    pub methods: Vec<String>,
    pub m: usize,
    pub dependent: bool,
    pub noise_sd: f64,
    pub model_seed: u64,
    pub data_seed: u64,
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub n_test: usize,
    pub weight: WeightSpec,
    /// Per-method grid override; `None` uses the method's default grid.
    pub grids: Vec<Option<Vec<f64>>>,
    pub bayes_points: usize,
    pub bayes_reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub method: String,
    pub n: usize,
    pub repeat: usize,
    pub rank_loss: f64,
    pub mc_bayes_risk: f64,
    pub selected: f64,
}

#[derive(Clone, Debug)]
pub struct CurveReport {
    pub rows: Vec<CurveRow>,
    pub bayes: McEstimate,
}

/// Mean and standard error of `rank_loss` per `(method, n)`, in row order.
pub fn summarize(rows: &[CurveRow]) -> Vec<(String, usize, f64, f64)> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.method.clone(), r.n)) {
            keys.push((r.method.clone(), r.n));
        }
    }
    keys.into_iter()
        .map(|(method, n)| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == method && r.n == n)
                .map(|r| r.rank_loss)
                .collect();
            let k = v.len() as f64;
            let mean = v.iter().sum::<f64>() / k;
            let se = if v.len() > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
            } else {
                0.0
            };
            (method, n, mean, se)
        })
        .collect()
}

/// Learning curve on one synthetic model.
///
/// Repeat `r` draws one training pool of the largest size from its own
/// seed; smaller sizes use prefixes of that pool. All methods see the same
/// pool and a shared test set, so rows are paired across methods.
pub fn run_curve(registry: &MethodRegistry, cfg: &CurveConfig) -> Result<CurveReport> {
    if cfg.sizes.is_empty() || cfg.repeats == 0 || cfg.methods.is_empty() {
        return Err(Error::InvalidArgument("need sizes, repeats and methods".into()));
    }
    let methods = cfg
        .methods
        .iter()
        .map(|name| registry.get(name))
        .collect::<Result<Vec<_>>>()?;
    let grids: Vec<Vec<f64>> = methods
        .iter()
        .enumerate()
        .map(|(k, method)| {
            let grid = cfg
                .grids
                .get(k)
                .cloned()
                .flatten()
                .unwrap_or_else(|| method.default_grid(cfg.m));
            for &v in &grid {
                method.check(v, cfg.m)?;
            }
            Ok(grid)
        })
        .collect::<Result<_>>()?;

    let model = sample_model(cfg.m, cfg.dependent, cfg.model_seed)?.with_noise_sd(cfg.noise_sd)?;
    let test = sample_dataset(&model, cfg.n_test, derive_seed(cfg.data_seed, 0))?;
    let bayes = mc_bayes_risk(
        &model,
        &cfg.weight,
        cfg.bayes_points,
        cfg.bayes_reps,
        derive_seed(cfg.data_seed, u64::MAX),
    )?;
    let n_max = *cfg.sizes.iter().max().expect("non-empty");
    let pools = (0..cfg.repeats)
        .into_par_iter()
        .map(|r| sample_dataset(&model, n_max, derive_seed(cfg.data_seed, r as u64 + 1)))
        .collect::<Result<Vec<_>>>()?;

    let units: Vec<(usize, usize, usize)> = (0..methods.len())
        .flat_map(|k| {
            cfg.sizes
                .iter()
                .flat_map(move |&n| (0..cfg.repeats).map(move |r| (k, n, r)))
        })
        .collect();
    let rows = units
        .into_par_iter()
        .map(|(k, n, r)| {
            let idx: Vec<usize> = (0..n).collect();
            let train = pools[r].select(&idx);
            let seed = derive_seed(derive_seed(cfg.data_seed, r as u64 + 1), n as u64);
            let outcome = tune(methods[k], &train, &cfg.weight, &grids[k], seed)?;
            let loss = evaluate(&outcome.model, &test, &cfg.weight)?.mean;
            Ok(CurveRow {
                method: methods[k].name().to_string(),
                n,
                repeat: r,
                rank_loss: loss,
                mc_bayes_risk: bayes.mean,
                selected: outcome.selected,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveReport { rows, bayes })
}
