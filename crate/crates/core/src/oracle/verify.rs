//! Monte-Carlo verification suites over random conditional distributions.
//!
//! Trial `t` at label count `m` draws from its own stream
//! `rng::stream(seed, (m << 32) | t)`, so reports are identical no matter
//! how many worker threads run the trials.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{
    bayes_rank_risk, bipartite_regret, check_regret_bound, compute_deltas, conditional_rank_risk,
    find_inconsistency_witness, reduce_to_bipartite, regret_conditional, univariate_minimizer,
    ConditionalLabelDistribution, DeltaTable, WitnessSearch, WitnessSearchOptions,
};
use crate::error::{Error, Result};
use crate::loss::{LabelVector, ScoreVector, Surrogate, WeightSpec};
use crate::rng;

pub const IDENTITY_TOL: f64 = 1e-12;
pub const DECOMPOSITION_TOL: f64 = 1e-12;
pub const REDUCTION_TOL: f64 = 1e-12;
pub const BOUND_SLACK: f64 = super::BOUND_SLACK;
/// Score gaps below this are ties when comparing orderings.
pub const ORDER_TIE_TOL: f64 = 1e-7;
/// Ties in the scores are tolerated when the masses differ by at most this.
pub const ORDER_DELTA_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    #[serde(rename = "lemma31")]
    Decomposition,
    #[serde(rename = "theorem32")]
    Bounds,
    Reduction,
    Consistency,
    Inconsistency,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Identities,
        Suite::Decomposition,
        Suite::Bounds,
        Suite::Reduction,
        Suite::Consistency,
        Suite::Inconsistency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Decomposition => "lemma31",
            Suite::Bounds => "theorem32",
            Suite::Reduction => "reduction",
            Suite::Consistency => "consistency",
            Suite::Inconsistency => "inconsistency",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite `{s}`")))
    }
}

/// One line of a suite report: a named check with its worst deviation.
#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub check: String,
    pub m: Option<usize>,
    pub cases: usize,
    pub violations: usize,
    /// Largest observed error (or `lhs − rhs` for inequalities).
    pub max_violation: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub trials_per_m: usize,
    pub ms: Vec<usize>,
    pub checks: Vec<CheckSummary>,
    /// First few failing cases, for debugging.
    pub examples: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<WitnessSearch>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    /// Human-readable report, one line per check.
    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.checks {
            let m = c.m.map(|m| format!(" m={m}")).unwrap_or_default();
            out.push(format!(
                "{} {}{}: cases={} violations={} max={:.3e} tol={:.0e} {}",
                self.suite.name(),
                c.check,
                m,
                c.cases,
                c.violations,
                c.max_violation,
                c.tolerance,
                if c.violations == 0 { "PASS" } else { "FAIL" }
            ));
        }
        for w in &self.witnesses {
            match &w.witness {
                Some(wit) => out.push(format!(
                    "{} phi={} m={}: witness at sample {} pair ({},{}) h_i-h_j={:.6e} sign(D10-D01)={} probs={:?}",
                    self.suite.name(),
                    w.phi.name(),
                    w.m,
                    wit.sample,
                    wit.violated_pair.i + 1,
                    wit.violated_pair.j + 1,
                    wit.violated_pair.score_diff,
                    if wit.violated_pair.delta_diff > 0.0 { "+" } else { "-" },
                    wit.dist.probs()
                )),
                None => out.push(format!(
                    "{} phi={} m={}: no witness in {} samples ({} skipped)",
                    self.suite.name(),
                    w.phi.name(),
                    w.m,
                    w.tried,
                    w.skipped
                )),
            }
        }
        for e in &self.examples {
            out.push(format!("  example: {e}"));
        }
        out.push(format!(
            "{}: {}",
            self.suite.name(),
            if self.passed { "PASS" } else { "FAIL" }
        ));
        out
    }
}

/// Random weight function: uniform, scaled constant, normalized, or a random table.
pub fn random_weight_spec<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<WeightSpec> {
    match rng.random_range(0..4) {
        0 => Ok(WeightSpec::uniform()),
        1 => WeightSpec::constant(rng.random_range(0.1..3.0)),
        2 => Ok(WeightSpec::pairwise_normalized()),
        _ => {
            let entries = (0..1usize << m)
                .map(|k| Ok((LabelVector::from_index(k, m)?, rng.random_range(0.0..2.0))))
                .collect::<Result<Vec<_>>>()?;
            WeightSpec::table(entries)
        }
    }
}

/// Random score vector. Mixes continuous draws, heavily tied draws, and
/// perturbations of the surrogate minimizers (where surrogate regret is small).
pub fn random_scores<R: Rng + ?Sized>(table: &DeltaTable, rng: &mut R) -> ScoreVector {
    let m = table.m();
    let normal = |rng: &mut R| -> f64 { StandardNormal.sample(rng) };
    let h: Vec<f64> = match rng.random_range(0..4) {
        0 => (0..m).map(|_| 2.0 * normal(rng)).collect(),
        1 => (0..m).map(|_| rng.random_range(-1i32..=1) as f64).collect(),
        mode => {
            let kind = if mode == 2 {
                Surrogate::Exponential
            } else {
                Surrogate::Logistic
            };
            let scale = 10f64.powf(rng.random_range(-4.0..0.0));
            univariate_minimizer(kind, table)
                .into_iter()
                .map(|v| if v.is_finite() { v } else { 0.0 } + scale * normal(rng))
                .collect()
        }
    };
    ScoreVector::new(h).expect("finite draws")
}

struct Trial {
    dist: ConditionalLabelDistribution,
    spec: WeightSpec,
    table: DeltaTable,
    h: ScoreVector,
}

fn draw_trial(m: usize, seed: u64, t: usize) -> Result<Trial> {
    let mut r = rng::stream(seed, ((m as u64) << 32) | t as u64);
    let dist = ConditionalLabelDistribution::random(m, &mut r)?;
    let spec = random_weight_spec(m, &mut r)?;
    let table = compute_deltas(&dist, &spec)?;
    let h = random_scores(&table, &mut r);
    Ok(Trial {
        dist,
        spec,
        table,
        h,
    })
}

/// Per-check outcome of one trial: `(error, tolerance)` pairs; a check is
/// violated when `error > tolerance`. `None` means not applicable.
type Measure = Vec<Option<f64>>;

fn run_checks<F>(
    suite: Suite,
    names: &[(&str, f64)],
    ms: &[usize],
    trials: usize,
    seed: u64,
    measure: F,
) -> Result<SuiteReport>
where
    F: Fn(&Trial) -> Result<Measure> + Sync,
{
    let mut checks = Vec::new();
    let mut examples = Vec::new();
    for &m in ms {
        let outcomes: Vec<Measure> = (0..trials)
            .into_par_iter()
            .map(|t| draw_trial(m, seed, t).and_then(|tr| measure(&tr)))
            .collect::<Result<_>>()?;
        for (k, (name, tol)) in names.iter().enumerate() {
            let mut summary = CheckSummary {
                check: name.to_string(),
                m: Some(m),
                cases: 0,
                violations: 0,
                max_violation: 0.0,
                tolerance: *tol,
            };
            for (t, o) in outcomes.iter().enumerate() {
                if let Some(err) = o[k] {
                    summary.cases += 1;
                    summary.max_violation = summary.max_violation.max(err);
                    if !(err <= *tol) {
                        summary.violations += 1;
                        if examples.len() < 5 {
                            let tr = draw_trial(m, seed, t)?;
                            examples.push(format!(
                                "{name} m={m} trial={t} err={err:e} spec={:?} h={:?} probs={:?}",
                                tr.spec.kind(),
                                tr.h.as_slice(),
                                tr.dist.probs()
                            ));
                        }
                    }
                }
            }
            checks.push(summary);
        }
    }
    let passed = checks.iter().all(|c| c.violations == 0);
    Ok(SuiteReport {
        suite,
        seed,
        trials_per_m: trials,
        ms: ms.to_vec(),
        checks,
        examples,
        witnesses: Vec::new(),
        passed,
    })
}

fn has_ties(v: &[f64]) -> bool {
    (0..v.len()).any(|i| (0..i).any(|j| v[i] == v[j]))
}

/// Number of label pairs whose score order disagrees with the masses `Δ_i^1`.
pub fn order_disagreements(scores: &[f64], masses: &[f64]) -> usize {
    let mut bad = 0;
    for i in 0..masses.len() {
        for j in 0..i {
            let ds = if scores[i] == scores[j] {
                0.0
            } else {
                scores[i] - scores[j]
            };
            let dm = masses[i] - masses[j];
            let ok = if ds.abs() < ORDER_TIE_TOL {
                dm.abs() <= ORDER_DELTA_TOL
            } else {
                (ds > 0.0) == (dm > 0.0) && dm != 0.0
            };
            if !ok {
                bad += 1;
            }
        }
    }
    bad
}

pub fn run_suite(suite: Suite, trials: usize, ms: &[usize], seed: u64) -> Result<SuiteReport> {
    if ms.iter().any(|&m| !(2..=super::MAX_ORACLE_LABELS).contains(&m)) {
        return Err(Error::InvalidArgument(format!("label counts {ms:?}")));
    }
    match suite {
        Suite::Identities => run_checks(
            suite,
            &[
                ("symmetry", IDENTITY_TOL),
                ("pair_normalization", IDENTITY_TOL),
                ("single_normalization", IDENTITY_TOL),
                ("marginal_difference", IDENTITY_TOL),
                ("marginal_consistency", IDENTITY_TOL),
            ],
            ms,
            trials,
            seed,
            |tr| {
                let inv = tr.table.invariants();
                Ok(vec![
                    Some(inv.symmetry),
                    Some(inv.pair_normalization),
                    Some(inv.single_normalization),
                    Some(inv.marginal_difference),
                    Some(inv.marginal_consistency),
                ])
            },
        ),
        Suite::Decomposition => run_checks(
            suite,
            &[("regret_decomposition", DECOMPOSITION_TOL), ("regret_nonnegative", 0.0)],
            ms,
            trials,
            seed,
            |tr| {
                let direct = conditional_rank_risk(&tr.table, &tr.h)? - bayes_rank_risk(&tr.table);
                let via_marginals = regret_conditional(&tr.table, &tr.h)?;
                Ok(vec![
                    Some((direct - via_marginals).abs()),
                    Some((-via_marginals - DECOMPOSITION_TOL).max(0.0)),
                ])
            },
        ),
        Suite::Reduction => run_checks(
            suite,
            &[
                ("bipartite_dominates", REDUCTION_TOL),
                ("bipartite_equality_untied", REDUCTION_TOL),
            ],
            ms,
            trials,
            seed,
            |tr| {
                let w = tr.table.expected_weight();
                if w <= 0.0 {
                    return Ok(vec![None, None]);
                }
                let m = tr.table.m() as f64;
                let red = reduce_to_bipartite(&tr.table)?;
                let scaled = bipartite_regret(&red, &tr.h)? * w * m * m / 2.0;
                let regret = regret_conditional(&tr.table, &tr.h)?;
                let untied = !has_ties(&tr.h) && !has_ties(&tr.table.relevant_masses());
                Ok(vec![
                    Some(regret - scaled),
                    untied.then(|| (regret - scaled).abs()),
                ])
            },
        ),
        Suite::Bounds => run_checks(
            suite,
            &[("exp_bound", BOUND_SLACK), ("log_bound", BOUND_SLACK)],
            ms,
            trials,
            seed,
            |tr| {
                let mut out = Vec::new();
                for kind in Surrogate::ALL {
                    let rep = check_regret_bound(kind, &tr.table, &tr.h, tr.spec.w_max())?;
                    out.push(Some(rep.lhs - rep.rhs));
                }
                Ok(out)
            },
        ),
        Suite::Consistency => run_checks(
            suite,
            &[("exp_minimizer_order", 0.0), ("log_minimizer_order", 0.0)],
            ms,
            trials,
            seed,
            |tr| {
                let masses = tr.table.relevant_masses();
                Ok(Surrogate::ALL
                    .iter()
                    .map(|&k| {
                        Some(order_disagreements(&univariate_minimizer(k, &tr.table), &masses) as f64)
                    })
                    .collect())
            },
        ),
        Suite::Inconsistency => {
            let mut witnesses = Vec::new();
            for &m in ms {
                for phi in Surrogate::ALL {
                    let opts = WitnessSearchOptions {
                        budget: trials,
                        seed,
                        ..Default::default()
                    };
                    witnesses.push(find_inconsistency_witness(phi, m, &opts)?);
                }
            }
            let passed = witnesses.iter().all(|w| w.witness.is_some());
            Ok(SuiteReport {
                suite,
                seed,
                trials_per_m: trials,
                ms: ms.to_vec(),
                checks: Vec::new(),
                examples: Vec::new(),
                witnesses,
                passed,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for suite in [
            Suite::Identities,
            Suite::Decomposition,
            Suite::Reduction,
            Suite::Bounds,
            Suite::Consistency,
        ] {
            let rep = run_suite(suite, 200, &[2, 3, 4], 11).unwrap();
            assert!(rep.passed, "{:#?}", rep.lines());
            assert!(rep.checks.iter().all(|c| c.m.is_some()));
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run_suite(Suite::Bounds, 100, &[3], 4).unwrap();
        let b = run_suite(Suite::Bounds, 100, &[3], 4).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn order_disagreement_rules() {
        assert_eq!(order_disagreements(&[1.0, 2.0], &[0.1, 0.2]), 0);
        assert_eq!(order_disagreements(&[2.0, 1.0], &[0.1, 0.2]), 1);
        assert_eq!(order_disagreements(&[1.0, 1.0], &[0.2, 0.2]), 0);
        assert_eq!(order_disagreements(&[1.0, 1.0], &[0.1, 0.2]), 1);
        assert_eq!(order_disagreements(&[1.0, 2.0], &[0.2, 0.2]), 1);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::parse(s.name()).unwrap(), s);
        }
        assert!(Suite::parse("nope").is_err());
    }
}
