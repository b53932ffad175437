//! Confidence-rated boosting of decision stumps on the exponential loss.

use serde::{Deserialize, Serialize};

use super::{class_weights, sample_dim, BinaryScorer, WeightedBinarySample};
use crate::error::{check_len, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

impl Stump {
    /// `left` if `x[feature] <= threshold`, else `right`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        if x[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnsemble", into = "RawEnsemble")]
pub struct StumpEnsemble {
    d: usize,
    stumps: Vec<Stump>,
}

#[derive(Serialize, Deserialize)]
struct RawEnsemble {
    d: usize,
    stumps: Vec<Stump>,
}

impl TryFrom<RawEnsemble> for StumpEnsemble {
    type Error = Error;

    fn try_from(raw: RawEnsemble) -> Result<Self> {
        StumpEnsemble::new(raw.d, raw.stumps)
    }
}

impl From<StumpEnsemble> for RawEnsemble {
    fn from(e: StumpEnsemble) -> Self {
        RawEnsemble {
            d: e.d,
            stumps: e.stumps,
        }
    }
}

impl StumpEnsemble {
    pub fn new(d: usize, stumps: Vec<Stump>) -> Result<Self> {
        for s in &stumps {
            if s.feature >= d {
                return Err(Error::InvalidArgument(format!(
                    "stump feature {} out of range for d = {d}",
                    s.feature
                )));
            }
            if !(s.threshold.is_finite() && s.left.is_finite() && s.right.is_finite()) {
                return Err(Error::NonFinite("stump"));
            }
        }
        Ok(StumpEnsemble { d, stumps })
    }

    pub fn empty(d: usize) -> Self {
        StumpEnsemble {
            d,
            stumps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.stumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stumps.is_empty()
    }

    pub fn stumps(&self) -> &[Stump] {
        &self.stumps
    }

    /// The first `t` stumps.
    pub fn truncated(&self, t: usize) -> Self {
        StumpEnsemble {
            d: self.d,
            stumps: self.stumps[..t.min(self.stumps.len())].to_vec(),
        }
    }

    pub(crate) fn push(&mut self, stump: Stump) {
        self.stumps.push(stump);
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.stumps.iter().map(|s| s.eval(x)).sum()
    }
}

impl BinaryScorer for StumpEnsemble {
    fn dim(&self) -> usize {
        self.d
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_len(self.d, x.len())?;
        Ok(self.eval_unchecked(x))
    }
}

#[derive(Clone, Debug)]
pub struct AdaFit {
    pub ensemble: StumpEnsemble,
    /// `Σ_n w_n exp(−y_n F(x_n))` before the first round and after each round.
    pub loss_trace: Vec<f64>,
}

/// Per-feature sample orders by increasing value, ties by index.
pub(crate) fn presort(samples: &[Vec<f64>], d: usize) -> Vec<Vec<usize>> {
    (0..d)
        .map(|k| {
            let mut ord: Vec<usize> = (0..samples.len()).collect();
            ord.sort_by(|&a, &b| samples[a][k].total_cmp(&samples[b][k]).then(a.cmp(&b)));
            ord
        })
        .collect()
}

/// A threshold strictly below `b` and not below `a`.
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid < b && mid.is_finite() {
        mid
    } else {
        a
    }
}

fn leaf_value(p: f64, q: f64, eps: f64) -> f64 {
    0.5 * ((p + eps) / (q + eps)).ln()
}

/// `p e^{−c} + q e^{c}` at the smoothed leaf value `c`.
fn leaf_z(p: f64, q: f64, eps: f64) -> f64 {
    let r = ((q + eps) / (p + eps)).sqrt();
    p * r + q / r
}

/// Boost `rounds` stumps on the weighted exponential loss.
///
/// Each round picks the stump whose smoothed confidence-rated leaves give
/// the smallest normalizer `Z`, so the loss never increases.
pub fn train_ada_stumps(samples: &[WeightedBinarySample], rounds: usize) -> Result<AdaFit> {
    if rounds == 0 {
        return Err(Error::InvalidArgument("boosting needs at least one round".into()));
    }
    let d = sample_dim(samples)?;
    if d == 0 {
        return Err(Error::InvalidArgument("need d >= 1".into()));
    }
    let n = samples.len();
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidWeight("total sample weight is zero".into()));
    }
    let eps = 1.0 / (2.0 * n as f64);
    let mut dist: Vec<f64> = samples.iter().map(|s| s.weight / total).collect();
    let mut ensemble = StumpEnsemble::empty(d);
    let mut trace = vec![total];

    let (wp, wn) = class_weights(samples);
    if wp == 0.0 || wn == 0.0 {
        let (p, q) = (wp / total, wn / total);
        let c = leaf_value(p, q, eps);
        ensemble.push(Stump {
            feature: 0,
            threshold: samples[0].features[0],
            left: c,
            right: c,
        });
        trace.push(total * leaf_z(p, q, eps));
        return Ok(AdaFit {
            ensemble,
            loss_trace: trace,
        });
    }

    let xs: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
    let orders = presort(&xs, d);
    let positive: Vec<bool> = samples.iter().map(|s| s.y() > 0.0).collect();

    for _ in 0..rounds {
        let (tp, tn) = dist
            .iter()
            .zip(&positive)
            .fold((0.0, 0.0), |(p, q), (&w, &pos)| if pos { (p + w, q) } else { (p, q + w) });

        let mut best: Option<(f64, Stump)> = None;
        for (k, ord) in orders.iter().enumerate() {
            let (mut lp, mut ln) = (0.0, 0.0);
            for pos in 0..n - 1 {
                let s = ord[pos];
                if positive[s] {
                    lp += dist[s];
                } else {
                    ln += dist[s];
                }
                let (a, b) = (xs[s][k], xs[ord[pos + 1]][k]);
                if a == b {
                    continue;
                }
                let (rp, rn) = ((tp - lp).max(0.0), (tn - ln).max(0.0));
                let z = leaf_z(lp, ln, eps) + leaf_z(rp, rn, eps);
                if best.as_ref().is_none_or(|(bz, _)| z < *bz) {
                    best = Some((
                        z,
                        Stump {
                            feature: k,
                            threshold: midpoint(a, b),
                            left: leaf_value(lp, ln, eps),
                            right: leaf_value(rp, rn, eps),
                        },
                    ));
                }
            }
        }
        let stump = match best {
            Some((_, s)) => s,
            None => {
                let c = leaf_value(tp, tn, eps);
                Stump {
                    feature: 0,
                    threshold: xs[0][0],
                    left: c,
                    right: c,
                }
            }
        };

        let mut z = 0.0;
        for (s, w) in dist.iter_mut().enumerate() {
            let y = if positive[s] { 1.0 } else { -1.0 };
            *w *= (-y * stump.eval(&xs[s])).exp();
            z += *w;
        }
        for w in dist.iter_mut() {
            *w /= z;
        }
        trace.push(trace[trace.len() - 1] * z);
        ensemble.push(stump);
    }

    Ok(AdaFit {
        ensemble,
        loss_trace: trace,
    })
}
