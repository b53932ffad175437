//! Distributions on which the pairwise surrogate minimizer misorders a pair
//! of labels while both univariate minimizers agree with the Bayes ranker.
//! Found by the witness search at `m = 3`, seed 0, uniform weights.

use mlrank::oracle::{
    compute_deltas, find_inconsistency_witness, pairwise_bayes_scores, sign_violations,
    univariate_minimizer, ConditionalLabelDistribution, WitnessSearchOptions,
};
use mlrank::{Surrogate, WeightSpec};

const EXP_WITNESS: [f64; 8] = [
    0.04756402568655047,
    0.00019379514185872176,
    0.025360195580090623,
    0.007849656306304641,
    0.2228087764640712,
    0.3718106061106662,
    0.31222812683296597,
    0.012184817877492206,
];

const LOG_WITNESS: [f64; 8] = [
    0.34031997800439234,
    0.0001230186690322692,
    0.13613268370330325,
    0.06108570511217795,
    0.04357508973933937,
    0.14273812071835434,
    0.15695345456597865,
    0.11907194948742196,
];

fn replay(phi: Surrogate, probs: &[f64], pair: (usize, usize)) {
    let opts = WitnessSearchOptions::default();
    let dist = ConditionalLabelDistribution::new(3, probs.to_vec()).unwrap();
    let table = compute_deltas(&dist, &WeightSpec::uniform()).unwrap();

    let h = pairwise_bayes_scores(phi, &table, &opts).unwrap().expect("converged");
    let bad = sign_violations(&h, &table, opts.tie_tol, opts.delta_tol);
    assert_eq!(bad.len(), 1, "{bad:?}");
    assert_eq!((bad[0].i, bad[0].j), pair);
    assert!(bad[0].score_diff > 0.0 && bad[0].delta_diff < 0.0);

    for kind in Surrogate::ALL {
        let u = univariate_minimizer(kind, &table);
        assert!(sign_violations(&u, &table, opts.tie_tol, 0.0).is_empty(), "{kind:?}");
    }
}

#[test]
fn exponential_witness() {
    replay(Surrogate::Exponential, &EXP_WITNESS, (1, 0));
}

#[test]
fn logistic_witness() {
    replay(Surrogate::Logistic, &LOG_WITNESS, (2, 1));
}

#[test]
fn search_finds_the_same_samples() {
    let opts = WitnessSearchOptions::default();
    for (phi, sample, probs) in [
        (Surrogate::Exponential, 10, EXP_WITNESS),
        (Surrogate::Logistic, 40, LOG_WITNESS),
    ] {
        let found = find_inconsistency_witness(phi, 3, &opts).unwrap().witness.unwrap();
        assert_eq!(found.sample, sample);
        assert_eq!(found.dist.probs(), probs.as_slice());
    }
}
