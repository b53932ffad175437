//! Exact distribution-level quantities for one instance `x`.
//!
//! Everything here works from an explicit conditional distribution
//! `P(y | x)` over all `2^m` labelings, so it is meant for small `m`
//! (at most [`MAX_ORACLE_LABELS`]).
//!
//! Index convention: `Δ_ij^{uv}` is the weighted mass of `y_i = u, y_j = v`.
//! In particular `Δ_ij^{10}` is the mass on "label i relevant, label j
//! irrelevant", the cost of ranking `i` below `j`.

mod witness;
pub mod verify;

pub use witness::{
    find_inconsistency_witness, minimize_pairwise_risk, pairwise_bayes_scores, sign_violations,
    PairViolation, Witness, WitnessSearch, WitnessSearchOptions,
};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::loss::{softplus, LabelVector, ScoreVector, Surrogate, WeightSpec};

pub const MAX_ORACLE_LABELS: usize = 20;

/// Tolerance on `Σ_y P(y|x) = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Dense `P(y | x)`; entry `k` is the probability of the labeling whose bit
/// `i` is bit `i` of `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalLabelDistribution {
    m: usize,
    probs: Vec<f64>,
}

impl ConditionalLabelDistribution {
    pub fn new(m: usize, probs: Vec<f64>) -> Result<Self> {
        if !(2..=MAX_ORACLE_LABELS).contains(&m) {
            return Err(Error::InvalidDistribution(format!(
                "label count {m} outside 2..={MAX_ORACLE_LABELS}"
            )));
        }
        check_len(1 << m, probs.len())?;
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(ConditionalLabelDistribution { m, probs })
    }

    /// Build from `(labeling, probability)` pairs; unlisted labelings get 0.
    pub fn from_outcomes(m: usize, outcomes: &[(&[u8], f64)]) -> Result<Self> {
        if !(2..=MAX_ORACLE_LABELS).contains(&m) {
            return Err(Error::InvalidDistribution(format!("label count {m}")));
        }
        let mut probs = vec![0.0; 1 << m];
        for (bits, p) in outcomes {
            let y = LabelVector::new(bits.to_vec())?;
            check_len(m, y.len())?;
            probs[y.index()] += p;
        }
        Self::new(m, probs)
    }

    pub fn point_mass(y: &LabelVector) -> Result<Self> {
        let m = y.len();
        if m > MAX_ORACLE_LABELS {
            return Err(Error::InvalidDistribution(format!("label count {m}")));
        }
        let mut probs = vec![0.0; 1 << m];
        probs[y.index()] = 1.0;
        Self::new(m, probs)
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if !(2..=MAX_ORACLE_LABELS).contains(&m) {
            return Err(Error::InvalidDistribution(format!("label count {m}")));
        }
        Self::new(m, vec![1.0 / (1u64 << m) as f64; 1 << m])
    }

    /// Labels independent given `x` with `P(Y_i = 1) = marginals[i]`.
    pub fn product(marginals: &[f64]) -> Result<Self> {
        let m = marginals.len();
        if !(2..=MAX_ORACLE_LABELS).contains(&m) {
            return Err(Error::InvalidDistribution(format!("label count {m}")));
        }
        if marginals.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidDistribution("marginal outside [0,1]".into()));
        }
        let probs = (0..1usize << m)
            .map(|k| {
                (0..m)
                    .map(|i| {
                        if (k >> i) & 1 == 1 {
                            marginals[i]
                        } else {
                            1.0 - marginals[i]
                        }
                    })
                    .product()
            })
            .collect::<Vec<f64>>();
        let total: f64 = probs.iter().sum();
        Self::new(m, probs.into_iter().map(|p| p / total).collect())
    }

    /// Flat Dirichlet draw over all `2^m` outcomes.
    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Self> {
        if !(2..=MAX_ORACLE_LABELS).contains(&m) {
            return Err(Error::InvalidDistribution(format!("label count {m}")));
        }
        let raw: Vec<f64> = (0..1usize << m).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = raw.iter().sum();
        Self::new(m, raw.into_iter().map(|p| p / total).collect())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, y: &LabelVector) -> Result<f64> {
        check_len(self.m, y.len())?;
        Ok(self.probs[y.index()])
    }

    /// Labels relabelled so that new label `k` is old label `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_len(self.m, perm.len())?;
        let mut probs = vec![0.0; self.probs.len()];
        for (k, &p) in self.probs.iter().enumerate() {
            let new_k = perm
                .iter()
                .enumerate()
                .fold(0usize, |acc, (new_i, &old_i)| acc | (((k >> old_i) & 1) << new_i));
            probs[new_k] = p;
        }
        Self::new(self.m, probs)
    }
}

/// All `Δ_ij^{uv}`, `Δ_i^u` and `W` for one distribution and weight function.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaTable {
    m: usize,
    pair: Vec<f64>,
    single: Vec<f64>,
    w: f64,
}

/// Largest deviation observed for each structural identity of a table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DeltaInvariants {
    pub symmetry: f64,
    pub pair_normalization: f64,
    pub single_normalization: f64,
    pub marginal_difference: f64,
    /// `|Δ_ij^{u0} + Δ_ij^{u1} − Δ_i^u|`, independence of the chosen `j`.
    pub marginal_consistency: f64,
}

impl DeltaInvariants {
    pub fn max(&self) -> f64 {
        [
            self.symmetry,
            self.pair_normalization,
            self.single_normalization,
            self.marginal_difference,
            self.marginal_consistency,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl DeltaTable {
    fn pair_index(&self, i: usize, j: usize, u: u8, v: u8) -> usize {
        ((i * self.m + j) * 2 + u as usize) * 2 + v as usize
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `Δ_ij^{uv}`; `i != j`.
    pub fn pair(&self, i: usize, j: usize, u: u8, v: u8) -> f64 {
        self.pair[self.pair_index(i, j, u, v)]
    }

    /// `Δ_i^u`.
    pub fn single(&self, i: usize, u: u8) -> f64 {
        self.single[i * 2 + u as usize]
    }

    /// `W = E[w(Y) | x]`.
    pub fn expected_weight(&self) -> f64 {
        self.w
    }

    /// `(Δ_1^1, …, Δ_m^1)`.
    pub fn relevant_masses(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.single(i, 1)).collect()
    }

    pub fn invariants(&self) -> DeltaInvariants {
        let mut r = DeltaInvariants::default();
        let w = self.w;
        for i in 0..self.m {
            r.single_normalization = r
                .single_normalization
                .max((self.single(i, 0) + self.single(i, 1) - w).abs());
            for j in 0..self.m {
                if i == j {
                    continue;
                }
                let mut total = 0.0;
                for u in 0..2 {
                    for v in 0..2 {
                        total += self.pair(i, j, u, v);
                        r.symmetry = r
                            .symmetry
                            .max((self.pair(i, j, u, v) - self.pair(j, i, v, u)).abs());
                    }
                    r.marginal_consistency = r.marginal_consistency.max(
                        (self.pair(i, j, u, 0) + self.pair(i, j, u, 1) - self.single(i, u)).abs(),
                    );
                }
                r.pair_normalization = r.pair_normalization.max((total - w).abs());
                let lhs = self.single(i, 1) - self.single(j, 1);
                let rhs = self.pair(i, j, 1, 0) - self.pair(i, j, 0, 1);
                r.marginal_difference = r.marginal_difference.max((lhs - rhs).abs());
            }
        }
        r
    }
}

/// Enumerate all labelings and accumulate the weighted masses.
pub fn compute_deltas(dist: &ConditionalLabelDistribution, spec: &WeightSpec) -> Result<DeltaTable> {
    let m = dist.m;
    let mut table = DeltaTable {
        m,
        pair: vec![0.0; m * m * 4],
        single: vec![0.0; m * 2],
        w: 0.0,
    };
    for (k, &p) in dist.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let y = LabelVector::from_index(k, m)?;
        let mass = spec.weight(&y)? * p;
        table.w += mass;
        let bits = y.bits();
        for i in 0..m {
            table.single[i * 2 + bits[i] as usize] += mass;
            for j in 0..m {
                if i != j {
                    let idx = table.pair_index(i, j, bits[i], bits[j]);
                    table.pair[idx] += mass;
                }
            }
        }
    }
    Ok(table)
}

fn check_scores(table: &DeltaTable, h: &ScoreVector) -> Result<()> {
    check_len(table.m, h.len())
}

/// `L_rnk(h, P | x)`.
pub fn conditional_rank_risk(table: &DeltaTable, h: &ScoreVector) -> Result<f64> {
    check_scores(table, h)?;
    let mut risk = 0.0;
    for i in 0..table.m {
        for j in 0..i {
            let d10 = table.pair(i, j, 1, 0);
            let d01 = table.pair(i, j, 0, 1);
            risk += if h[i] < h[j] {
                d10
            } else if h[i] > h[j] {
                d01
            } else {
                0.5 * (d10 + d01)
            };
        }
    }
    Ok(risk)
}

/// `L*_rnk(P | x) = Σ_{i<j} min{Δ_ij^{10}, Δ_ij^{01}}`.
pub fn bayes_rank_risk(table: &DeltaTable) -> f64 {
    let mut risk = 0.0;
    for i in 0..table.m {
        for j in i + 1..table.m {
            risk += table.pair(i, j, 1, 0).min(table.pair(i, j, 0, 1));
        }
    }
    risk
}

/// `h* = (Δ_1^1, …, Δ_m^1)`.
pub fn bayes_ranker(table: &DeltaTable) -> ScoreVector {
    ScoreVector::new(table.relevant_masses()).expect("masses are finite")
}

/// Rank regret through the marginal masses only:
/// `Σ_{j<i} Δ_i^1[h_i<h_j] + Δ_j^1[h_i>h_j] + ½(Δ_i^1+Δ_j^1)[h_i=h_j] − min{Δ_i^1, Δ_j^1}`.
pub fn regret_conditional(table: &DeltaTable, h: &ScoreVector) -> Result<f64> {
    check_scores(table, h)?;
    let d = table.relevant_masses();
    let mut regret = 0.0;
    for i in 0..table.m {
        for j in 0..i {
            let paid = if h[i] < h[j] {
                d[i]
            } else if h[i] > h[j] {
                d[j]
            } else {
                0.5 * (d[i] + d[j])
            };
            regret += paid - d[i].min(d[j]);
        }
    }
    Ok(regret)
}

fn xlogx_ratio(a: f64, b: f64) -> f64 {
    // a ln(a / b) with 0 ln 0 = 0
    if a == 0.0 {
        0.0
    } else {
        a * (a / b).ln()
    }
}

/// Surrogate regret of one label: `Δ1 ℓ(1,h) + Δ0 ℓ(−1,h) − inf_h (…)`.
pub fn label_surrogate_regret(kind: Surrogate, d1: f64, d0: f64, h: f64) -> Result<f64> {
    match kind {
        Surrogate::Exponential => {
            // Δ1 e^{-h} + Δ0 e^{h} − 2√(Δ1Δ0) = (√Δ1 e^{-h/2} − √Δ0 e^{h/2})²
            kind.phi(h)?;
            kind.phi(-h)?;
            let r = (d1.sqrt() * (-h / 2.0).exp() - d0.sqrt() * (h / 2.0).exp()).powi(2);
            Ok(r)
        }
        Surrogate::Logistic => {
            // W · KL(Δ1/W ‖ σ(h)), with ln σ(h) = −softplus(−h)
            let w = d1 + d0;
            if w == 0.0 {
                return Ok(0.0);
            }
            let p = d1 / w;
            let ent = xlogx_ratio(p, 1.0) + xlogx_ratio(1.0 - p, 1.0);
            let cross = p * softplus(-h) + (1.0 - p) * softplus(h);
            Ok((w * (ent + cross)).max(0.0))
        }
    }
}

/// Pointwise minimizer of `Δ1 ℓ(1,h) + Δ0 ℓ(−1,h)`; `±∞` on the boundary.
pub fn label_surrogate_minimizer(kind: Surrogate, d1: f64, d0: f64) -> f64 {
    let ratio = (d1 / d0).ln();
    match kind {
        Surrogate::Exponential => 0.5 * ratio,
        Surrogate::Logistic => ratio,
    }
}

/// Conditional surrogate regret of the multilabel loss `w(y) Σ_i φ(ỹ_i h_i)`.
pub fn univariate_surrogate_regret(
    kind: Surrogate,
    table: &DeltaTable,
    h: &ScoreVector,
) -> Result<f64> {
    check_scores(table, h)?;
    if table.w <= 0.0 {
        return Err(Error::DegenerateWeight);
    }
    let mut total = 0.0;
    for (i, &hi) in h.iter().enumerate() {
        total += label_surrogate_regret(kind, table.single(i, 1), table.single(i, 0), hi)?;
    }
    Ok(total)
}

/// Conditional surrogate risk `Σ_i ℓ(1,h_i)Δ_i^1 + ℓ(−1,h_i)Δ_i^0`.
pub fn univariate_surrogate_risk(
    kind: Surrogate,
    table: &DeltaTable,
    h: &ScoreVector,
) -> Result<f64> {
    check_scores(table, h)?;
    let mut total = 0.0;
    for (i, &hi) in h.iter().enumerate() {
        total += kind.phi(hi)? * table.single(i, 1) + kind.phi(-hi)? * table.single(i, 0);
    }
    Ok(total)
}

/// Per-label pointwise surrogate minimizers (may contain `±∞`).
pub fn univariate_minimizer(kind: Surrogate, table: &DeltaTable) -> Vec<f64> {
    (0..table.m)
        .map(|i| label_surrogate_minimizer(kind, table.single(i, 1), table.single(i, 0)))
        .collect()
}

/// Per-instance bipartite ranking problem over the label indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BipartiteReduction {
    m: usize,
    eta: Vec<f64>,
}

impl BipartiteReduction {
    pub fn m(&self) -> usize {
        self.m
    }

    /// `P̃(Ỹ = 1 | X̃ = i) = Δ_i^1 / W`.
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// `P̃(X̃ = i)`, uniform.
    pub fn instance_prob(&self) -> f64 {
        1.0 / self.m as f64
    }
}

pub fn reduce_to_bipartite(table: &DeltaTable) -> Result<BipartiteReduction> {
    if table.w <= 0.0 {
        return Err(Error::DegenerateWeight);
    }
    let eta = (0..table.m)
        .map(|i| (table.single(i, 1) / table.w).clamp(0.0, 1.0))
        .collect();
    Ok(BipartiteReduction { m: table.m, eta })
}

/// `Reg_br(h̃, P̃) = (1/m²) Σ_{i,j} B̃_ij`.
pub fn bipartite_regret(red: &BipartiteReduction, h: &ScoreVector) -> Result<f64> {
    check_len(red.m, h.len())?;
    let eta = &red.eta;
    let mut total = 0.0;
    for i in 0..red.m {
        for j in 0..red.m {
            let a = eta[i] * (1.0 - eta[j]);
            let b = eta[j] * (1.0 - eta[i]);
            let paid = if h[i] < h[j] {
                a
            } else if h[i] > h[j] {
                b
            } else {
                0.5 * (a + b)
            };
            total += paid - a.min(b);
        }
    }
    Ok(total / (red.m * red.m) as f64)
}

/// Outcome of checking the conditional regret bound for one `(P, h)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub kind: Surrogate,
    /// Rank regret.
    pub lhs: f64,
    /// `c · C · √(surrogate regret)` with `C = m√(mW)`.
    pub rhs: f64,
    pub surrogate_regret: f64,
    /// `m√(mW)`.
    pub c_conditional: f64,
    /// `m√(m w_max)`.
    pub c_wmax: f64,
    pub holds: bool,
}

pub const BOUND_SLACK: f64 = 1e-9;

/// Leading constant of the bound: `√6/4` for exponential, `√2/2` for logistic.
pub fn bound_constant(kind: Surrogate) -> f64 {
    match kind {
        Surrogate::Exponential => 6f64.sqrt() / 4.0,
        Surrogate::Logistic => 2f64.sqrt() / 2.0,
    }
}

pub fn check_regret_bound(
    kind: Surrogate,
    table: &DeltaTable,
    h: &ScoreVector,
    w_max: f64,
) -> Result<BoundReport> {
    let m = table.m as f64;
    let lhs = regret_conditional(table, h)?;
    let c_conditional = m * (m * table.w).sqrt();
    let c_wmax = m * (m * w_max).sqrt();
    let surrogate_regret = if table.w > 0.0 {
        univariate_surrogate_regret(kind, table, h)?
    } else {
        0.0
    };
    let rhs = bound_constant(kind) * c_conditional * surrogate_regret.sqrt();
    Ok(BoundReport {
        kind,
        lhs,
        rhs,
        surrogate_regret,
        c_conditional,
        c_wmax,
        holds: lhs <= rhs + BOUND_SLACK,
    })
}

/// `L_φ(h, P | x) = Σ_{i>j} Δ_ij^{10} φ(h_i − h_j) + Δ_ij^{01} φ(h_j − h_i)`.
pub fn pairwise_conditional_risk(
    phi: Surrogate,
    table: &DeltaTable,
    h: &ScoreVector,
) -> Result<f64> {
    check_scores(table, h)?;
    pairwise_risk_and_grad(phi, table, h, None)
}

pub(crate) fn pairwise_risk_and_grad(
    phi: Surrogate,
    table: &DeltaTable,
    h: &[f64],
    mut grad: Option<&mut [f64]>,
) -> Result<f64> {
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    let mut risk = 0.0;
    for i in 0..table.m {
        for j in 0..i {
            let d10 = table.pair(i, j, 1, 0);
            let d01 = table.pair(i, j, 0, 1);
            let t = h[i] - h[j];
            risk += d10 * phi.phi(t)? + d01 * phi.phi(-t)?;
            if let Some(g) = grad.as_deref_mut() {
                let dt = d10 * phi.phi_prime(t)? - d01 * phi.phi_prime(-t)?;
                g[i] += dt;
                g[j] -= dt;
            }
        }
    }
    Ok(risk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example_table() -> DeltaTable {
        let dist = ConditionalLabelDistribution::from_outcomes(
            2,
            &[(&[1, 0], 0.5), (&[0, 1], 0.3), (&[1, 1], 0.2)],
        )
        .unwrap();
        compute_deltas(&dist, &WeightSpec::uniform()).unwrap()
    }

    fn sv(v: &[f64]) -> ScoreVector {
        ScoreVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn distribution_validation() {
        assert!(ConditionalLabelDistribution::new(2, vec![0.5, 0.5, 0.0]).is_err());
        assert!(ConditionalLabelDistribution::new(2, vec![0.5, 0.6, 0.0, -0.1]).is_err());
        assert!(ConditionalLabelDistribution::new(2, vec![0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(ConditionalLabelDistribution::new(21, vec![]).is_err());
        assert!(ConditionalLabelDistribution::new(1, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn delta_example() {
        let t = example_table();
        assert_relative_eq!(t.pair(0, 1, 1, 0), 0.5);
        assert_relative_eq!(t.pair(0, 1, 0, 1), 0.3);
        assert_relative_eq!(t.pair(0, 1, 1, 1), 0.2);
        assert_relative_eq!(t.pair(0, 1, 0, 0), 0.0);
        assert_relative_eq!(t.single(0, 1), 0.7);
        assert_relative_eq!(t.single(1, 1), 0.5);
        assert_relative_eq!(t.expected_weight(), 1.0);
        assert!(t.invariants().max() <= 1e-15);
    }

    #[test]
    fn point_mass_deltas() {
        let y = LabelVector::new(vec![1, 1, 1, 1]).unwrap();
        let t = compute_deltas(
            &ConditionalLabelDistribution::point_mass(&y).unwrap(),
            &WeightSpec::uniform(),
        )
        .unwrap();
        for i in 0..4 {
            assert_eq!(t.single(i, 1), 1.0);
            for j in (0..4).filter(|&j| j != i) {
                assert_eq!(t.pair(i, j, 1, 1), 1.0);
                assert_eq!(t.pair(i, j, 1, 0), 0.0);
                assert_eq!(t.pair(i, j, 0, 1), 0.0);
                assert_eq!(t.pair(i, j, 0, 0), 0.0);
            }
        }
        assert_eq!(bayes_rank_risk(&t), 0.0);
    }

    #[test]
    fn uniform_weight_gives_marginals() {
        let marg = [0.1, 0.65, 0.4];
        let dist = ConditionalLabelDistribution::product(&marg).unwrap();
        let t = compute_deltas(&dist, &WeightSpec::uniform()).unwrap();
        for (i, p) in marg.iter().enumerate() {
            assert_relative_eq!(t.single(i, 1), p, epsilon = 1e-15);
        }
    }

    #[test]
    fn risk_examples() {
        let t = example_table();
        assert_relative_eq!(conditional_rank_risk(&t, &sv(&[0.0, 1.0])).unwrap(), 0.5);
        assert_relative_eq!(conditional_rank_risk(&t, &sv(&[1.0, 0.0])).unwrap(), 0.3);
        assert_relative_eq!(conditional_rank_risk(&t, &sv(&[2.0, 2.0])).unwrap(), 0.4);
        assert_relative_eq!(bayes_rank_risk(&t), 0.3);
        let even = ConditionalLabelDistribution::from_outcomes(2, &[(&[1, 0], 0.5), (&[0, 1], 0.5)])
            .unwrap();
        let te = compute_deltas(&even, &WeightSpec::uniform()).unwrap();
        assert_relative_eq!(bayes_rank_risk(&te), 0.5);
        assert!(conditional_rank_risk(&t, &sv(&[0.0, 1.0, 2.0])).is_err());
    }

    #[test]
    fn bayes_ranker_examples() {
        let t = example_table();
        let h = bayes_ranker(&t);
        assert_relative_eq!(h[0], 0.7);
        assert_relative_eq!(h[1], 0.5);
        assert_relative_eq!(
            conditional_rank_risk(&t, &h).unwrap(),
            bayes_rank_risk(&t),
            epsilon = 1e-12
        );

        let u = compute_deltas(
            &ConditionalLabelDistribution::uniform(4).unwrap(),
            &WeightSpec::uniform(),
        )
        .unwrap();
        let hu = bayes_ranker(&u);
        assert!(hu.iter().all(|&v| v == hu[0]));

        let y = LabelVector::new(vec![1, 0, 0]).unwrap();
        let p = compute_deltas(
            &ConditionalLabelDistribution::point_mass(&y).unwrap(),
            &WeightSpec::uniform(),
        )
        .unwrap();
        let hp = bayes_ranker(&p);
        assert!(hp[0] > hp[1] && hp[1] == 0.0 && hp[2] == 0.0);
    }

    #[test]
    fn regret_examples() {
        let t = example_table();
        assert_relative_eq!(regret_conditional(&t, &sv(&[0.0, 1.0])).unwrap(), 0.2, epsilon = 1e-15);
        assert_relative_eq!(regret_conditional(&t, &sv(&[3.0, 3.0])).unwrap(), 0.1, epsilon = 1e-15);
        assert_eq!(regret_conditional(&t, &bayes_ranker(&t)).unwrap(), 0.0);
    }

    #[test]
    fn surrogate_regret_examples() {
        let t = example_table();
        let h = sv(&[0.5 * (0.7f64 / 0.3).ln(), 0.5 * (0.5f64 / 0.5).ln()]);
        assert!(univariate_surrogate_regret(Surrogate::Exponential, &t, &h).unwrap() < 1e-15);
        let hl = sv(&[(0.7f64 / 0.3).ln(), 0.0]);
        assert!(univariate_surrogate_regret(Surrogate::Logistic, &t, &hl).unwrap() < 1e-15);

        let exp = Surrogate::Exponential;
        assert_eq!(label_surrogate_regret(exp, 0.5, 0.5, 0.0).unwrap(), 0.0);
        let r = label_surrogate_regret(exp, 0.5, 0.5, 1.0).unwrap();
        let closed = 0.5 * (-1f64).exp() + 0.5 * 1f64.exp() - 1.0;
        assert_relative_eq!(r, closed, epsilon = 1e-15);
        assert_relative_eq!(r, 0.543081, epsilon = 1e-6);

        // deterministic labels: the infimum 0 is approached as |h| grows
        for kind in Surrogate::ALL {
            assert_eq!(label_surrogate_regret(kind, 1.0, 0.0, 0.0).unwrap() > 0.0, true);
            assert!(label_surrogate_regret(kind, 1.0, 0.0, 60.0).unwrap() < 1e-12);
            assert!(label_surrogate_regret(kind, 0.0, 1.0, -60.0).unwrap() < 1e-12);
        }
    }

    #[test]
    fn surrogate_regret_matches_risk_difference() {
        // against the direct risk minus the closed-form infimum
        let dist = ConditionalLabelDistribution::product(&[0.2, 0.9, 0.55]).unwrap();
        let t = compute_deltas(&dist, &WeightSpec::constant(0.7).unwrap()).unwrap();
        let h = sv(&[0.3, -1.2, 2.0]);
        let w = t.expected_weight();
        let mut inf_exp = 0.0;
        let mut inf_log = 0.0;
        for i in 0..3 {
            let (d1, d0) = (t.single(i, 1), t.single(i, 0));
            inf_exp += 2.0 * (d1 * d0).sqrt();
            let p = d1 / w;
            inf_log += -w * (p * p.ln() + (1.0 - p) * (1.0 - p).ln());
        }
        for (kind, inf) in [(Surrogate::Exponential, inf_exp), (Surrogate::Logistic, inf_log)] {
            let direct = univariate_surrogate_risk(kind, &t, &h).unwrap() - inf;
            assert_relative_eq!(
                univariate_surrogate_regret(kind, &t, &h).unwrap(),
                direct,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn reduction_examples() {
        let t = example_table();
        let red = reduce_to_bipartite(&t).unwrap();
        assert_relative_eq!(red.eta()[0], 0.7);
        assert_relative_eq!(red.eta()[1], 0.5);
        assert_relative_eq!(red.instance_prob(), 0.5);
        assert_relative_eq!(bipartite_regret(&red, &sv(&[0.0, 1.0])).unwrap(), 0.1, epsilon = 1e-15);
        assert_eq!(bipartite_regret(&red, &sv(&[1.0, 0.0])).unwrap(), 0.0);

        let dist = ConditionalLabelDistribution::from_outcomes(
            2,
            &[(&[1, 0], 0.5), (&[0, 1], 0.3), (&[1, 1], 0.2)],
        )
        .unwrap();
        let t2 = compute_deltas(&dist, &WeightSpec::constant(2.0).unwrap()).unwrap();
        assert_eq!(reduce_to_bipartite(&t2).unwrap().eta(), red.eta());

        let tu = compute_deltas(
            &ConditionalLabelDistribution::uniform(5).unwrap(),
            &WeightSpec::uniform(),
        )
        .unwrap();
        let ru = reduce_to_bipartite(&tu).unwrap();
        assert!(ru.eta().iter().all(|&e| (e - 0.5).abs() < 1e-15));
        assert_eq!(bipartite_regret(&ru, &sv(&[5.0, -1.0, 2.0, 0.0, 0.1])).unwrap(), 0.0);
    }

    #[test]
    fn zero_weight_is_degenerate() {
        // only all-zero and all-one labelings: normalized weight vanishes
        let dist =
            ConditionalLabelDistribution::from_outcomes(2, &[(&[0, 0], 0.4), (&[1, 1], 0.6)])
                .unwrap();
        let t = compute_deltas(&dist, &WeightSpec::pairwise_normalized()).unwrap();
        assert_eq!(t.expected_weight(), 0.0);
        assert!(matches!(reduce_to_bipartite(&t), Err(Error::DegenerateWeight)));
        assert_eq!(regret_conditional(&t, &sv(&[1.0, 0.0])).unwrap(), 0.0);
        let rep = check_regret_bound(Surrogate::Logistic, &t, &sv(&[1.0, 0.0]), 1.0).unwrap();
        assert!(rep.holds);
    }

    #[test]
    fn bound_examples() {
        let t = example_table();
        for kind in Surrogate::ALL {
            let r = check_regret_bound(kind, &t, &bayes_ranker(&t), 1.0).unwrap();
            assert_eq!(r.lhs, 0.0);
            assert!(r.holds);
            let hmin = sv(&univariate_minimizer(kind, &t));
            let r = check_regret_bound(kind, &t, &hmin, 1.0).unwrap();
            assert_eq!(r.lhs, 0.0);
            assert!(r.rhs < 1e-7);
            assert!(r.holds);
            assert_relative_eq!(r.c_conditional, 2.0 * 2f64.sqrt());
        }
    }

    #[test]
    fn pairwise_risk_examples() {
        let t = example_table();
        let z = sv(&[0.0, 0.0]);
        assert_relative_eq!(
            pairwise_conditional_risk(Surrogate::Logistic, &t, &z).unwrap(),
            2f64.ln() * 0.8,
            epsilon = 1e-15
        );
        for tt in [-1.0, 0.0, 0.4, 2.0] {
            assert_relative_eq!(
                pairwise_conditional_risk(Surrogate::Exponential, &t, &sv(&[tt, 0.0])).unwrap(),
                0.5 * (-tt as f64).exp() + 0.3 * (tt as f64).exp(),
                epsilon = 1e-14
            );
        }
        let best = 0.5 * (5.0f64 / 3.0).ln();
        let v = pairwise_conditional_risk(Surrogate::Exponential, &t, &sv(&[best, 0.0])).unwrap();
        assert_relative_eq!(v, 2.0 * 0.15f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(v, 0.774597, epsilon = 1e-6);
    }
}
