//! Search for distributions on which the minimizer of a pairwise surrogate
//! risk does not order labels like the Bayes ranker.

use serde::Serialize;

use super::{
    compute_deltas, pairwise_risk_and_grad, univariate_minimizer, ConditionalLabelDistribution,
    DeltaTable,
};
use crate::error::{Error, Result};
use crate::loss::{Surrogate, WeightSpec};
use crate::optim::{minimize, DescentOptions, DescentStatus};
use crate::rng;

#[derive(Clone, Debug)]
pub struct WitnessSearchOptions {
    pub budget: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Per-coordinate cap on the scores; reaching it stands in for a limit at infinity.
    pub coord_cap: f64,
    /// Score gaps below this count as ties.
    pub tie_tol: f64,
    /// A tie is only a violation if the Bayes decision is clearer than this.
    pub delta_tol: f64,
    pub weight: WeightSpec,
}

impl Default for WitnessSearchOptions {
    fn default() -> Self {
        WitnessSearchOptions {
            budget: 10_000,
            seed: 0,
            max_iter: 100_000,
            grad_tol: 1e-10,
            coord_cap: 50.0,
            tie_tol: 1e-7,
            delta_tol: 1e-4,
            weight: WeightSpec::uniform(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairViolation {
    pub i: usize,
    pub j: usize,
    /// `h_i − h_j`.
    pub score_diff: f64,
    /// `Δ_ij^{10} − Δ_ij^{01}`.
    pub delta_diff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    /// Index of the sampled distribution within the search.
    pub sample: usize,
    pub dist: ConditionalLabelDistribution,
    pub h_star: Vec<f64>,
    pub violated_pair: PairViolation,
    /// Whether the minimizer sits on the coordinate cap (a directional limit).
    pub at_cap: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessSearch {
    pub phi: Surrogate,
    pub m: usize,
    pub tried: usize,
    /// Samples on which the optimizer did not converge.
    pub skipped: usize,
    pub witness: Option<Witness>,
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Pairs whose predicted order disagrees with `sign(Δ_ij^{10} − Δ_ij^{01})`.
///
/// Score gaps under `tie_tol` are ties; a tie only counts when
/// `|Δ_ij^{10} − Δ_ij^{01}| > delta_tol`. Scores may be infinite.
pub fn sign_violations(
    scores: &[f64],
    table: &DeltaTable,
    tie_tol: f64,
    delta_tol: f64,
) -> Vec<PairViolation> {
    let mut out = Vec::new();
    for i in 0..table.m() {
        for j in 0..i {
            let delta_diff = table.pair(i, j, 1, 0) - table.pair(i, j, 0, 1);
            let score_diff = if scores[i] == scores[j] {
                0.0
            } else {
                scores[i] - scores[j]
            };
            let violated = if score_diff.abs() < tie_tol {
                delta_diff.abs() > delta_tol
            } else {
                sign(score_diff) != sign(delta_diff)
            };
            if violated {
                out.push(PairViolation {
                    i,
                    j,
                    score_diff,
                    delta_diff,
                });
            }
        }
    }
    out
}

/// Minimizer of the pairwise conditional risk with `h_m` pinned to 0.
pub fn minimize_pairwise_risk(
    phi: Surrogate,
    table: &DeltaTable,
    opts: &WitnessSearchOptions,
) -> Result<crate::optim::DescentResult> {
    let m = table.m();
    let mut full = vec![0.0; m];
    let mut full_grad = vec![0.0; m];
    let objective = |z: &[f64], g: &mut [f64]| {
        full[..m - 1].copy_from_slice(z);
        full[m - 1] = 0.0;
        let v = pairwise_risk_and_grad(phi, table, &full, Some(&mut full_grad))?;
        g.copy_from_slice(&full_grad[..m - 1]);
        Ok(v)
    };
    let descent = DescentOptions {
        max_iter: opts.max_iter,
        grad_tol: opts.grad_tol,
        bound: Some(opts.coord_cap),
        ..Default::default()
    };
    minimize(objective, vec![0.0; m - 1], &descent, |_, _| {})
}

/// Full score vector of the pairwise minimizer, or `None` if the optimizer
/// failed to converge.
pub fn pairwise_bayes_scores(
    phi: Surrogate,
    table: &DeltaTable,
    opts: &WitnessSearchOptions,
) -> Result<Option<Vec<f64>>> {
    let r = minimize_pairwise_risk(phi, table, opts)?;
    // flat to working precision counts as converged
    let ok = match r.status {
        DescentStatus::Converged => true,
        DescentStatus::Stalled => r.grad_norm <= 1e-8,
        DescentStatus::IterationCap => false,
    };
    if !ok {
        return Ok(None);
    }
    let mut h = r.x;
    h.push(0.0);
    Ok(Some(h))
}

/// Sample flat-Dirichlet distributions until the pairwise minimizer breaks
/// the Bayes ordering on some pair while both univariate minimizers keep it.
pub fn find_inconsistency_witness(
    phi: Surrogate,
    m: usize,
    opts: &WitnessSearchOptions,
) -> Result<WitnessSearch> {
    if !(2..=10).contains(&m) {
        return Err(Error::InvalidArgument(format!(
            "witness search supports 2 <= m <= 10, got {m}"
        )));
    }
    let mut search = WitnessSearch {
        phi,
        m,
        tried: 0,
        skipped: 0,
        witness: None,
    };
    for sample in 0..opts.budget {
        let mut r = rng::stream(opts.seed, sample as u64);
        let dist = ConditionalLabelDistribution::random(m, &mut r)?;
        let table = compute_deltas(&dist, &opts.weight)?;
        search.tried += 1;
        let Some(h) = pairwise_bayes_scores(phi, &table, opts)? else {
            search.skipped += 1;
            continue;
        };
        let violations = sign_violations(&h, &table, opts.tie_tol, opts.delta_tol);
        let Some(first) = violations.into_iter().next() else {
            continue;
        };
        let univariate_clean = Surrogate::ALL.iter().all(|&k| {
            sign_violations(&univariate_minimizer(k, &table), &table, opts.tie_tol, 0.0)
                .is_empty()
        });
        if univariate_clean {
            let at_cap = h.iter().any(|v| v.abs() >= opts.coord_cap);
            search.witness = Some(Witness {
                sample,
                dist,
                h_star: h,
                violated_pair: first,
                at_cap,
            });
            break;
        }
    }
    Ok(search)
}
