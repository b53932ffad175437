//! Baselines that minimize the pairwise surrogate
//! `Σ_n w(y^n) Σ_{(i,j): y_i > y_j} φ(h_i(x^n) − h_j(x^n))` directly.

use serde::{Deserialize, Serialize};

use super::stumps::{midpoint, presort};
use super::{LinearModel, MultilabelScorer, Standardizer, Stump, StumpEnsemble};
use crate::dataio::MultilabelDataset;
use crate::error::{check_len, Error, Result};
use crate::loss::{LabelVector, ScoreVector, Surrogate, WeightSpec};
use crate::optim::{minimize, DescentOptions, DescentStatus};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseLinearModel {
    pub per_label: Vec<LinearModel>,
    pub standardizer: Option<Standardizer>,
}

impl MultilabelScorer for PairwiseLinearModel {
    fn m(&self) -> usize {
        self.per_label.len()
    }

    fn d(&self) -> usize {
        self.per_label[0].coefficients.len()
    }

    fn scores(&self, x: &[f64]) -> Result<ScoreVector> {
        check_len(self.d(), x.len())?;
        let z = match &self.standardizer {
            Some(s) => s.apply(x)?,
            None => x.to_vec(),
        };
        ScoreVector::new(self.per_label.iter().map(|l| l.eval_unchecked(&z)).collect())
    }
}

#[derive(Clone, Debug)]
pub struct PairwiseLinearOptions {
    pub phi: Surrogate,
    /// Penalty `λ Σ_i ‖coef_i‖²`; intercepts are not penalized.
    pub lambda: f64,
    pub standardize: bool,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for PairwiseLinearOptions {
    fn default() -> Self {
        PairwiseLinearOptions {
            phi: Surrogate::Logistic,
            lambda: 0.0,
            standardize: true,
            max_iter: 100_000,
            grad_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PairwiseLinearFit {
    pub model: PairwiseLinearModel,
    /// Objective after each accepted step.
    pub trace: Vec<f64>,
    pub status: DescentStatus,
    pub iterations: usize,
}

struct Prepared {
    m: usize,
    d: usize,
    xs: Vec<Vec<f64>>,
    ys: Vec<LabelVector>,
    ws: Vec<f64>,
}

impl Prepared {
    fn new(data: &MultilabelDataset, spec: &WeightSpec, standardizer: Option<&Standardizer>) -> Result<Self> {
        let mut xs = Vec::with_capacity(data.len());
        let mut ys = Vec::with_capacity(data.len());
        let mut ws = Vec::with_capacity(data.len());
        for inst in data.instances() {
            xs.push(match standardizer {
                Some(s) => s.apply(&inst.features)?,
                None => inst.features.clone(),
            });
            ws.push(spec.weight(&inst.labels)?);
            ys.push(inst.labels.clone());
        }
        Ok(Prepared {
            m: data.m(),
            d: data.d(),
            xs,
            ys,
            ws,
        })
    }

    fn objective(&self, phi: Surrogate, lambda: f64, params: &[f64], grad: Option<&mut [f64]>) -> Result<f64> {
        let (m, d) = (self.m, self.d);
        let stride = d + 1;
        check_len(m * stride, params.len())?;
        let mut g = grad;
        if let Some(g) = g.as_deref_mut() {
            check_len(m * stride, g.len())?;
            g.fill(0.0);
        }
        let mut h = vec![0.0; m];
        let mut dh = vec![0.0; m];
        let mut value = 0.0;
        for ((x, y), &w) in self.xs.iter().zip(&self.ys).zip(&self.ws) {
            if w == 0.0 {
                continue;
            }
            for i in 0..m {
                let block = &params[i * stride..(i + 1) * stride];
                h[i] = block[..d].iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + block[d];
            }
            dh.fill(0.0);
            for i in (0..m).filter(|&i| y.is_relevant(i)) {
                for j in (0..m).filter(|&j| !y.is_relevant(j)) {
                    let t = h[i] - h[j];
                    value += w * phi.phi(t)?;
                    if g.is_some() {
                        let p = w * phi.phi_prime(t)?;
                        dh[i] += p;
                        dh[j] -= p;
                    }
                }
            }
            if let Some(g) = g.as_deref_mut() {
                for i in 0..m {
                    if dh[i] == 0.0 {
                        continue;
                    }
                    let block = &mut g[i * stride..(i + 1) * stride];
                    for k in 0..d {
                        block[k] += dh[i] * x[k];
                    }
                    block[d] += dh[i];
                }
            }
        }
        for i in 0..m {
            for k in 0..d {
                let c = params[i * stride + k];
                value += lambda * c * c;
                if let Some(g) = g.as_deref_mut() {
                    g[i * stride + k] += 2.0 * lambda * c;
                }
            }
        }
        Ok(value)
    }
}

/// Regularized pairwise objective for linear scorers at
/// `params = [coef_1, b_1, …, coef_m, b_m]`, on raw (unstandardized)
/// features; the gradient is written to `grad` if given.
pub fn pairwise_linear_objective(
    data: &MultilabelDataset,
    spec: &WeightSpec,
    phi: Surrogate,
    lambda: f64,
    params: &[f64],
    grad: Option<&mut [f64]>,
) -> Result<f64> {
    Prepared::new(data, spec, None)?.objective(phi, lambda, params, grad)
}

/// Full-batch preconditioned descent on the pairwise objective.
pub fn train_pairwise_linear(
    data: &MultilabelDataset,
    spec: &WeightSpec,
    opts: &PairwiseLinearOptions,
) -> Result<PairwiseLinearFit> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if !(opts.lambda >= 0.0) || !opts.lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {}",
            opts.lambda
        )));
    }
    let standardizer = opts
        .standardize
        .then(|| Standardizer::fit(data.d(), data.instances().iter().map(|i| i.features.as_slice())));
    let prep = Prepared::new(data, spec, standardizer.as_ref())?;
    let (m, d) = (prep.m, prep.d);
    let stride = d + 1;

    let curvature = match opts.phi {
        Surrogate::Exponential => 1.0,
        Surrogate::Logistic => 0.25,
    };
    let mut diag = vec![0.0; m * stride];
    let mut total = 0.0;
    for ((x, y), &w) in prep.xs.iter().zip(&prep.ys).zip(&prep.ws) {
        let s = y.relevant_count();
        total += w * (s * (m - s)) as f64;
        for i in 0..m {
            let pairs = if y.is_relevant(i) { m - s } else { s } as f64;
            let c = curvature * w * pairs;
            for k in 0..d {
                diag[i * stride + k] += c * x[k] * x[k];
            }
            diag[i * stride + d] += c;
        }
    }
    for (p, h) in diag.iter_mut().enumerate() {
        if p % stride != d {
            *h += 2.0 * opts.lambda;
        }
    }

    // The loss only sees score differences and the penalty is smallest when
    // the coefficients sum to zero across labels, so the last label's block
    // is minus the sum of the others.
    let free = (m - 1) * stride;
    let last = &diag[free..];
    let precond = diag[..free]
        .iter()
        .enumerate()
        .map(|(p, &h)| {
            let h = h + last[p % stride];
            if h > 0.0 {
                1.0 / h
            } else {
                1.0
            }
        })
        .collect();
    let expand = |z: &[f64], full: &mut [f64]| {
        full[..free].copy_from_slice(z);
        for k in 0..stride {
            full[free + k] = -(0..m - 1).map(|i| z[i * stride + k]).sum::<f64>();
        }
    };
    let descent = DescentOptions {
        max_iter: opts.max_iter,
        grad_tol: opts.grad_tol,
        preconditioner: Some(precond),
        ..Default::default()
    };
    let mut full = vec![0.0; m * stride];
    let mut full_grad = vec![0.0; m * stride];
    let r = minimize(
        |z, g| {
            expand(z, &mut full);
            let v = prep.objective(opts.phi, opts.lambda, &full, Some(&mut full_grad))?;
            for (p, gp) in g.iter_mut().enumerate() {
                *gp = full_grad[p] - full_grad[free + p % stride];
            }
            Ok(v)
        },
        vec![0.0; free],
        &descent,
        |_, _| {},
    )?;
    let mut params = vec![0.0; m * stride];
    expand(&r.x, &mut params);
    let accepted = match r.status {
        DescentStatus::Converged => true,
        DescentStatus::Stalled => r.grad_norm <= 1e-6 * total.max(1.0),
        DescentStatus::IterationCap => false,
    };
    if !accepted {
        return Err(Error::NonConvergence {
            iterations: r.iterations,
            grad_norm: r.grad_norm,
            last_iterate: params,
        });
    }
    let per_label = params.chunks(stride).map(LinearModel::from_params).collect();
    Ok(PairwiseLinearFit {
        model: PairwiseLinearModel {
            per_label,
            standardizer,
        },
        trace: r.trace,
        status: r.status,
        iterations: r.iterations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseStumpModel {
    pub per_label: Vec<StumpEnsemble>,
}

impl PairwiseStumpModel {
    /// Model after the first `rounds` boosting rounds.
    pub fn truncated(&self, rounds: usize) -> Self {
        PairwiseStumpModel {
            per_label: self.per_label.iter().map(|e| e.truncated(rounds)).collect(),
        }
    }

    pub fn rounds(&self) -> usize {
        self.per_label.iter().map(|e| e.len()).max().unwrap_or(0)
    }
}

impl MultilabelScorer for PairwiseStumpModel {
    fn m(&self) -> usize {
        self.per_label.len()
    }

    fn d(&self) -> usize {
        use super::BinaryScorer;
        self.per_label[0].dim()
    }

    fn scores(&self, x: &[f64]) -> Result<ScoreVector> {
        check_len(self.d(), x.len())?;
        ScoreVector::new(self.per_label.iter().map(|e| e.eval_unchecked(x)).collect())
    }
}

#[derive(Clone, Debug)]
pub struct PairwiseStumpFit {
    pub model: PairwiseStumpModel,
    /// Pairwise exponential loss before the first round and after each round.
    pub loss_trace: Vec<f64>,
}

fn pairwise_exp_loss(prep: &Prepared, f: &[f64], dir: Option<(&[f64], f64)>) -> (f64, f64, f64) {
    let m = prep.m;
    let (mut l, mut l1, mut l2) = (0.0, 0.0, 0.0);
    for (n, (y, &w)) in prep.ys.iter().zip(&prep.ws).enumerate() {
        if w == 0.0 {
            continue;
        }
        let row = &f[n * m..(n + 1) * m];
        for i in (0..m).filter(|&i| y.is_relevant(i)) {
            for j in (0..m).filter(|&j| !y.is_relevant(j)) {
                let (t, dt) = match dir {
                    Some((dv, alpha)) => {
                        let dd = dv[n * m + i] - dv[n * m + j];
                        (row[i] - row[j] + alpha * dd, dd)
                    }
                    None => (row[i] - row[j], 0.0),
                };
                let e = w * (-t).exp();
                l += e;
                l1 -= dt * e;
                l2 += dt * dt * e;
            }
        }
    }
    (l, l1, l2)
}

/// Least-squares regression stump on `targets`.
fn fit_regression_stump(xs: &[Vec<f64>], orders: &[Vec<usize>], targets: &[f64]) -> Stump {
    let n = targets.len();
    let total: f64 = targets.iter().sum();
    let mean = total / n as f64;
    let mut best: Option<(f64, Stump)> = None;
    for (k, ord) in orders.iter().enumerate() {
        let mut left = 0.0;
        for pos in 0..n - 1 {
            let s = ord[pos];
            left += targets[s];
            let (a, b) = (xs[s][k], xs[ord[pos + 1]][k]);
            if a == b {
                continue;
            }
            let (nl, nr) = ((pos + 1) as f64, (n - pos - 1) as f64);
            let right = total - left;
            let gain = left * left / nl + right * right / nr;
            if best.as_ref().is_none_or(|(g, _)| gain > *g) {
                best = Some((
                    gain,
                    Stump {
                        feature: k,
                        threshold: midpoint(a, b),
                        left: left / nl,
                        right: right / nr,
                    },
                ));
            }
        }
    }
    best.map(|(_, s)| s).unwrap_or(Stump {
        feature: 0,
        threshold: xs[0][0],
        left: mean,
        right: mean,
    })
}

/// Functional-gradient boosting of per-label stumps on the pairwise
/// exponential surrogate, `total_stumps / m` rounds of one stump per label.
///
/// Each round fits every label's stump to the negative gradient and takes a
/// joint Newton line search along all of them; training stops early once no
/// step lowers the loss.
pub fn train_pairwise_stumps(
    data: &MultilabelDataset,
    spec: &WeightSpec,
    total_stumps: usize,
) -> Result<PairwiseStumpFit> {
    let m = data.m();
    if total_stumps < m {
        return Err(Error::InvalidArgument(format!(
            "need at least m = {m} stumps, got {total_stumps}"
        )));
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let prep = Prepared::new(data, spec, None)?;
    let n = prep.xs.len();
    let d = prep.d;
    if prep.ws.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidWeight("total sample weight is zero".into()));
    }
    let orders = presort(&prep.xs, d);
    let rounds = total_stumps / m;

    let mut f = vec![0.0; n * m];
    let mut dir = vec![0.0; n * m];
    let mut targets = vec![vec![0.0; n]; m];
    let mut per_label = vec![StumpEnsemble::empty(d); m];
    let mut trace = vec![pairwise_exp_loss(&prep, &f, None).0];

    for _ in 0..rounds {
        for t in targets.iter_mut() {
            t.fill(0.0);
        }
        for (nn, (y, &w)) in prep.ys.iter().zip(&prep.ws).enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in (0..m).filter(|&i| y.is_relevant(i)) {
                for j in (0..m).filter(|&j| !y.is_relevant(j)) {
                    let e = w * (-(f[nn * m + i] - f[nn * m + j])).exp();
                    targets[i][nn] += e;
                    targets[j][nn] -= e;
                }
            }
        }
        let stumps: Vec<Stump> = targets
            .iter()
            .map(|t| fit_regression_stump(&prep.xs, &orders, t))
            .collect();
        for (nn, x) in prep.xs.iter().enumerate() {
            for (i, s) in stumps.iter().enumerate() {
                dir[nn * m + i] = s.eval(x);
            }
        }

        let current = trace[trace.len() - 1];
        let mut alpha = 0.0;
        let mut best = current;
        for _ in 0..20 {
            let (_, g1, g2) = pairwise_exp_loss(&prep, &f, Some((&dir, alpha)));
            if !(g2 > 0.0) || g1.abs() <= 1e-15 * best.max(1e-300) {
                break;
            }
            let mut step = -g1 / g2;
            let mut improved = false;
            for _ in 0..40 {
                let trial = alpha + step;
                let (l, _, _) = pairwise_exp_loss(&prep, &f, Some((&dir, trial)));
                if l.is_finite() && l < best {
                    alpha = trial;
                    best = l;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if !(best < current) {
            break;
        }
        for (v, dv) in f.iter_mut().zip(&dir) {
            *v += alpha * dv;
        }
        for (e, s) in per_label.iter_mut().zip(stumps) {
            e.push(Stump {
                left: alpha * s.left,
                right: alpha * s.right,
                ..s
            });
        }
        trace.push(pairwise_exp_loss(&prep, &f, None).0);
    }

    Ok(PairwiseStumpFit {
        model: PairwiseStumpModel { per_label },
        loss_trace: trace,
    })
}
