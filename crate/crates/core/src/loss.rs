//! Rank loss, weight functions and the convex surrogates.
//!
//! Labels live in `{0, 1}` at this layer. The surrogates map them to
//! `{-1, +1}` internally; nothing outside this module sees the signed form
//! except the binary learners.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Largest negative margin the exponential terms accept before reporting
/// overflow. `e^700` is still finite in `f64`.
pub const DEFAULT_MARGIN_CAP: f64 = 700.0;

/// Binary relevance vector `y ∈ {0,1}^m`, `m ≥ 2`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.len() < 2 {
            return Err(Error::InvalidLabels(format!(
                "need at least 2 labels, got {}",
                bits.len()
            )));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidLabels(format!("entry {b} is not 0 or 1")));
        }
        Ok(LabelVector(bits))
    }

    pub fn from_bools(bits: &[bool]) -> Result<Self> {
        Self::new(bits.iter().map(|&b| u8::from(b)).collect())
    }

    /// Labeling whose bit `i` is bit `i` of `index`.
    pub fn from_index(index: usize, m: usize) -> Result<Self> {
        Self::new((0..m).map(|i| ((index >> i) & 1) as u8).collect())
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | ((b as usize) << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_relevant(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    /// Number of relevant labels, `s_y`.
    pub fn relevant_count(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    /// Signed encoding of label `i`.
    pub fn signed(&self, i: usize) -> SignedLabel {
        if self.is_relevant(i) {
            SignedLabel::Positive
        } else {
            SignedLabel::Negative
        }
    }

    /// Number of `(relevant, irrelevant)` pairs.
    pub fn mixed_pairs(&self) -> usize {
        let s = self.relevant_count();
        s * (self.len() - s)
    }

    /// Relabel so that new label `k` is old label `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_len(self.len(), perm.len())?;
        Self::new(perm.iter().map(|&p| self.0[p]).collect())
    }
}

impl TryFrom<Vec<u8>> for LabelVector {
    type Error = Error;

    fn try_from(v: Vec<u8>) -> Result<Self> {
        LabelVector::new(v)
    }
}

impl From<LabelVector> for Vec<u8> {
    fn from(y: LabelVector) -> Self {
        y.0
    }
}

impl fmt::Debug for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, b) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Real-valued label scores `h(x) ∈ R^m`. Sorting by decreasing score gives
/// the predicted label ranking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("score vector"));
        }
        Ok(ScoreVector(scores))
    }

    pub fn zeros(m: usize) -> Self {
        ScoreVector(vec![0.0; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Elementwise negation, i.e. the reversed ranking.
    pub fn negated(&self) -> Self {
        ScoreVector(self.0.iter().map(|s| -s).collect())
    }

    /// Labels ordered by decreasing score, ties broken by ascending label
    /// index. The flag reports whether any tie had to be broken.
    pub fn ranking(&self) -> (Vec<usize>, bool) {
        let mut order: Vec<usize> = (0..self.0.len()).collect();
        order.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a]).then(a.cmp(&b)));
        let tie_broken = order.windows(2).any(|w| self.0[w[0]] == self.0[w[1]]);
        (order, tie_broken)
    }
}

impl std::ops::Deref for ScoreVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ScoreVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ScoreVector::new(v)
    }
}

impl From<ScoreVector> for Vec<f64> {
    fn from(h: ScoreVector) -> Self {
        h.0
    }
}

/// Label encoded as −1 / +1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignedLabel {
    #[serde(rename = "-1")]
    Negative,
    #[serde(rename = "+1")]
    Positive,
}

impl SignedLabel {
    pub fn value(self) -> f64 {
        match self {
            SignedLabel::Negative => -1.0,
            SignedLabel::Positive => 1.0,
        }
    }
}

/// How `w(y)` is computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    Constant { value: f64 },
    /// `1 / (s_y (m − s_y))`, and 0 when `s_y ∈ {0, m}`.
    PairwiseNormalized,
    Table { entries: Vec<TableEntry> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub labels: LabelVector,
    pub weight: f64,
}

/// Weight function together with its declared bound `w_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeightSpec", into = "RawWeightSpec")]
pub struct WeightSpec {
    kind: WeightKind,
    w_max: f64,
    #[serde(skip)]
    table: BTreeMap<LabelVector, f64>,
}

#[derive(Serialize, Deserialize)]
struct RawWeightSpec {
    #[serde(flatten)]
    kind: WeightKind,
    w_max: f64,
}

impl TryFrom<RawWeightSpec> for WeightSpec {
    type Error = Error;

    fn try_from(raw: RawWeightSpec) -> Result<Self> {
        WeightSpec::with_bound(raw.kind, raw.w_max)
    }
}

impl From<WeightSpec> for RawWeightSpec {
    fn from(spec: WeightSpec) -> Self {
        RawWeightSpec {
            kind: spec.kind,
            w_max: spec.w_max,
        }
    }
}

impl WeightSpec {
    pub fn constant(c: f64) -> Result<Self> {
        Self::with_bound(WeightKind::Constant { value: c }, c)
    }

    /// `w ≡ 1`.
    pub fn uniform() -> Self {
        Self::constant(1.0).expect("1 is a valid weight")
    }

    /// The normalized weights; they never exceed 1.
    pub fn pairwise_normalized() -> Self {
        Self::with_bound(WeightKind::PairwiseNormalized, 1.0).expect("valid bound")
    }

    pub fn table(entries: Vec<(LabelVector, f64)>) -> Result<Self> {
        let w_max = entries.iter().map(|e| e.1).fold(0.0, f64::max);
        let entries = entries
            .into_iter()
            .map(|(labels, weight)| TableEntry { labels, weight })
            .collect();
        Self::with_bound(WeightKind::Table { entries }, w_max)
    }

    /// Construct with an explicit `w_max`; every weight the spec can produce
    /// must lie in `[0, w_max]`.
    pub fn with_bound(kind: WeightKind, w_max: f64) -> Result<Self> {
        if !(w_max.is_finite() && w_max >= 0.0) {
            return Err(Error::InvalidWeight(format!("w_max = {w_max}")));
        }
        let in_range = |w: f64| w.is_finite() && (0.0..=w_max).contains(&w);
        let mut table = BTreeMap::new();
        match &kind {
            WeightKind::Constant { value } => {
                if !in_range(*value) {
                    return Err(Error::InvalidWeight(format!(
                        "constant {value} outside [0, {w_max}]"
                    )));
                }
            }
            WeightKind::PairwiseNormalized => {
                if w_max < 1.0 {
                    return Err(Error::InvalidWeight(
                        "pairwise-normalized weights need w_max >= 1".into(),
                    ));
                }
            }
            WeightKind::Table { entries } => {
                for e in entries {
                    if !in_range(e.weight) {
                        return Err(Error::InvalidWeight(format!(
                            "table weight {} for {} outside [0, {w_max}]",
                            e.weight, e.labels
                        )));
                    }
                    if table.insert(e.labels.clone(), e.weight).is_some() {
                        return Err(Error::InvalidWeight(format!(
                            "duplicate table entry {}",
                            e.labels
                        )));
                    }
                }
            }
        }
        Ok(WeightSpec { kind, w_max, table })
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    /// Same spec with every weight multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidWeight(format!("scale {c}")));
        }
        match &self.kind {
            WeightKind::Constant { value } => {
                Self::with_bound(WeightKind::Constant { value: value * c }, self.w_max * c)
            }
            WeightKind::Table { entries } => Self::with_bound(
                WeightKind::Table {
                    entries: entries
                        .iter()
                        .map(|e| TableEntry {
                            labels: e.labels.clone(),
                            weight: e.weight * c,
                        })
                        .collect(),
                },
                self.w_max * c,
            ),
            WeightKind::PairwiseNormalized => Err(Error::InvalidWeight(
                "pairwise-normalized weights cannot be rescaled; use a table".into(),
            )),
        }
    }

    /// `w(y)`.
    pub fn weight(&self, y: &LabelVector) -> Result<f64> {
        match &self.kind {
            WeightKind::Constant { value } => Ok(*value),
            WeightKind::PairwiseNormalized => {
                let pairs = y.mixed_pairs();
                if pairs == 0 {
                    Ok(0.0)
                } else {
                    Ok(1.0 / pairs as f64)
                }
            }
            WeightKind::Table { .. } => self
                .table
                .get(y)
                .copied()
                .ok_or_else(|| Error::UnknownLabeling(y.to_string())),
        }
    }
}

/// Free-function form of [`WeightSpec::weight`].
pub fn weight(spec: &WeightSpec, y: &LabelVector) -> Result<f64> {
    spec.weight(y)
}

/// Convex, non-increasing margin loss `φ`. Used both as the univariate
/// surrogate `ℓ(ỹ, h) = φ(ỹ h)` and as the pairwise `φ(h_i − h_j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surrogate {
    /// `φ(t) = e^{−t}`
    Exponential,
    /// `φ(t) = log(1 + e^{−t})`
    Logistic,
}

impl Surrogate {
    pub const ALL: [Surrogate; 2] = [Surrogate::Exponential, Surrogate::Logistic];

    pub fn name(self) -> &'static str {
        match self {
            Surrogate::Exponential => "exp",
            Surrogate::Logistic => "log",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exp" | "exponential" => Ok(Surrogate::Exponential),
            "log" | "logistic" => Ok(Surrogate::Logistic),
            other => Err(Error::InvalidArgument(format!("unknown surrogate `{other}`"))),
        }
    }

    /// `φ(t)` with the default overflow cap.
    pub fn phi(self, t: f64) -> Result<f64> {
        self.phi_with_cap(t, DEFAULT_MARGIN_CAP)
    }

    pub fn phi_with_cap(self, t: f64, cap: f64) -> Result<f64> {
        match self {
            Surrogate::Exponential => {
                if -t > cap {
                    Err(Error::Overflow { margin: t, cap })
                } else {
                    Ok((-t).exp())
                }
            }
            Surrogate::Logistic => Ok(softplus(-t)),
        }
    }

    /// `φ'(t)`.
    pub fn phi_prime(self, t: f64) -> Result<f64> {
        match self {
            Surrogate::Exponential => Ok(-self.phi(t)?),
            Surrogate::Logistic => Ok(-sigmoid(-t)),
        }
    }

    /// `φ''(t)`.
    pub fn phi_second(self, t: f64) -> Result<f64> {
        match self {
            Surrogate::Exponential => self.phi(t),
            Surrogate::Logistic => {
                let s = sigmoid(t);
                Ok(s * (1.0 - s))
            }
        }
    }
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x <= 0.0 {
        x.exp().ln_1p()
    } else {
        x + (-x).exp().ln_1p()
    }
}

/// `1 / (1 + e^{−x})` without overflow.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_pair(y: &LabelVector, h: &ScoreVector) -> Result<()> {
    check_len(y.len(), h.len())
}

/// Weighted count of misordered (relevant, irrelevant) pairs, ties costing ½.
pub fn rank_loss(y: &LabelVector, h: &ScoreVector, spec: &WeightSpec) -> Result<f64> {
    check_pair(y, h)?;
    let w = spec.weight(y)?;
    Ok(w * unweighted_rank_loss(y, h))
}

/// The pair count without the `w(y)` factor.
pub fn unweighted_rank_loss(y: &LabelVector, h: &[f64]) -> f64 {
    let mut errors = 0.0;
    for i in 0..y.len() {
        if !y.is_relevant(i) {
            continue;
        }
        for j in 0..y.len() {
            if y.is_relevant(j) {
                continue;
            }
            if h[i] < h[j] {
                errors += 1.0;
            } else if h[i] == h[j] {
                errors += 0.5;
            }
        }
    }
    errors
}

/// `w(y) Σ_i φ(ỹ_i h_i)` with `ỹ_i = 2 y_i − 1`.
pub fn univariate_surrogate_loss(
    kind: Surrogate,
    y: &LabelVector,
    h: &ScoreVector,
    spec: &WeightSpec,
) -> Result<f64> {
    check_pair(y, h)?;
    let w = spec.weight(y)?;
    let mut total = 0.0;
    for (i, &hi) in h.iter().enumerate() {
        total += kind.phi(y.signed(i).value() * hi)?;
    }
    Ok(w * total)
}

/// Gradient of [`univariate_surrogate_loss`] with respect to `h`.
pub fn univariate_surrogate_grad(
    kind: Surrogate,
    y: &LabelVector,
    h: &ScoreVector,
    spec: &WeightSpec,
) -> Result<Vec<f64>> {
    check_pair(y, h)?;
    let w = spec.weight(y)?;
    h.iter()
        .enumerate()
        .map(|(i, &hi)| {
            let s = y.signed(i).value();
            Ok(w * s * kind.phi_prime(s * hi)?)
        })
        .collect()
}

/// `w(y) Σ_{(i,j): y_i > y_j} φ(h_i − h_j)`.
pub fn pairwise_surrogate_loss(
    phi: Surrogate,
    y: &LabelVector,
    h: &ScoreVector,
    spec: &WeightSpec,
) -> Result<f64> {
    check_pair(y, h)?;
    let w = spec.weight(y)?;
    let mut total = 0.0;
    for i in (0..y.len()).filter(|&i| y.is_relevant(i)) {
        for j in (0..y.len()).filter(|&j| !y.is_relevant(j)) {
            total += phi.phi(h[i] - h[j])?;
        }
    }
    Ok(w * total)
}

/// Gradient of [`pairwise_surrogate_loss`] with respect to `h`.
pub fn pairwise_surrogate_grad(
    phi: Surrogate,
    y: &LabelVector,
    h: &ScoreVector,
    spec: &WeightSpec,
) -> Result<Vec<f64>> {
    check_pair(y, h)?;
    let w = spec.weight(y)?;
    let mut grad = vec![0.0; h.len()];
    for i in (0..y.len()).filter(|&i| y.is_relevant(i)) {
        for j in (0..y.len()).filter(|&j| !y.is_relevant(j)) {
            let d = w * phi.phi_prime(h[i] - h[j])?;
            grad[i] += d;
            grad[j] -= d;
        }
    }
    Ok(grad)
}

/// Non-normalized bipartite rank loss on one pair of instances.
pub fn bipartite_rank_loss(y: SignedLabel, y_other: SignedLabel, h: f64, h_other: f64) -> f64 {
    let (a, b) = (y.value(), y_other.value());
    let mut loss = 0.0;
    if a > b && h < h_other {
        loss += 1.0;
    }
    if a < b && h > h_other {
        loss += 1.0;
    }
    if a != b && h == h_other {
        loss += 0.5;
    }
    loss
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn lv(bits: &[u8]) -> LabelVector {
        LabelVector::new(bits.to_vec()).unwrap()
    }

    fn sv(s: &[f64]) -> ScoreVector {
        ScoreVector::new(s.to_vec()).unwrap()
    }

    #[test]
    fn weight_examples() {
        let uni = WeightSpec::uniform();
        let pn = WeightSpec::pairwise_normalized();
        assert_eq!(uni.weight(&lv(&[0, 1, 1])).unwrap(), 1.0);
        assert_eq!(pn.weight(&lv(&[1, 1, 0, 0, 0])).unwrap(), 1.0 / 6.0);
        assert_eq!(pn.weight(&lv(&[0, 0, 0])).unwrap(), 0.0);
        assert_eq!(pn.weight(&lv(&[1, 1, 1])).unwrap(), 0.0);
    }

    #[test]
    fn table_weights() {
        let spec = WeightSpec::table(vec![(lv(&[1, 0]), 0.25), (lv(&[0, 1]), 2.0)]).unwrap();
        assert_eq!(spec.w_max(), 2.0);
        assert_eq!(spec.weight(&lv(&[0, 1])).unwrap(), 2.0);
        assert!(matches!(
            spec.weight(&lv(&[1, 1])),
            Err(Error::UnknownLabeling(_))
        ));
        assert!(WeightSpec::with_bound(WeightKind::Constant { value: 2.0 }, 1.0).is_err());
        assert!(WeightSpec::constant(-1.0).is_err());
    }

    #[test]
    fn weight_spec_json_round_trip() {
        let spec = WeightSpec::table(vec![(lv(&[1, 0]), 0.25), (lv(&[0, 1]), 2.0)]).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: WeightSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.weight(&lv(&[1, 0])).unwrap(), 0.25);
        let pn = serde_json::to_string(&WeightSpec::pairwise_normalized()).unwrap();
        assert_eq!(pn, r#"{"kind":"pairwise_normalized","w_max":1.0}"#);
    }

    #[test]
    fn label_vector_validation() {
        assert!(LabelVector::new(vec![1]).is_err());
        assert!(LabelVector::new(vec![0, 2]).is_err());
        let y = LabelVector::from_index(0b101, 3).unwrap();
        assert_eq!(y.bits(), &[1, 0, 1]);
        assert_eq!(y.index(), 5);
        assert!(ScoreVector::new(vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn rank_loss_examples() {
        let uni = WeightSpec::uniform();
        let y = lv(&[1, 0, 0]);
        let h = sv(&[0.2, 0.5, 0.1]);
        assert_eq!(rank_loss(&y, &h, &uni).unwrap(), 1.0);
        assert_eq!(rank_loss(&y, &h, &WeightSpec::pairwise_normalized()).unwrap(), 0.5);
        for c in [-3.0, 0.0, 17.5] {
            assert_eq!(rank_loss(&lv(&[1, 0]), &sv(&[c, c]), &uni).unwrap(), 0.5);
        }
        assert!(matches!(
            rank_loss(&y, &sv(&[0.0, 1.0]), &uni),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn univariate_examples() {
        let uni = WeightSpec::uniform();
        let y = lv(&[1, 0]);
        let exp = Surrogate::Exponential;
        let log = Surrogate::Logistic;
        assert_eq!(univariate_surrogate_loss(exp, &y, &sv(&[0.0, 0.0]), &uni).unwrap(), 2.0);
        assert_relative_eq!(
            univariate_surrogate_loss(log, &y, &sv(&[0.0, 0.0]), &uni).unwrap(),
            1.386294,
            epsilon = 1e-6
        );
        let ln2 = 2f64.ln();
        assert_relative_eq!(
            univariate_surrogate_loss(exp, &y, &sv(&[ln2, -ln2]), &uni).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn exponential_overflow_is_reported() {
        let y = lv(&[1, 0]);
        let h = sv(&[-800.0, 0.0]);
        let r = univariate_surrogate_loss(Surrogate::Exponential, &y, &h, &WeightSpec::uniform());
        assert!(matches!(r, Err(Error::Overflow { .. })));
        // logistic stays finite and close to the margin
        let v = univariate_surrogate_loss(Surrogate::Logistic, &y, &h, &WeightSpec::uniform())
            .unwrap();
        assert_relative_eq!(v, 800.0 + 2f64.ln(), epsilon = 1e-9);
        assert!(Surrogate::Exponential.phi_with_cap(-705.0, 709.0).unwrap().is_finite());
        assert!(Surrogate::Exponential.phi(-705.0).is_err());
    }

    #[test]
    fn pairwise_examples() {
        let uni = WeightSpec::uniform();
        let y = lv(&[1, 0]);
        let z = sv(&[0.0, 0.0]);
        assert_eq!(
            pairwise_surrogate_loss(Surrogate::Exponential, &y, &z, &uni).unwrap(),
            1.0
        );
        assert_relative_eq!(
            pairwise_surrogate_loss(Surrogate::Logistic, &y, &z, &uni).unwrap(),
            0.693147,
            epsilon = 1e-6
        );
        let v = pairwise_surrogate_loss(
            Surrogate::Exponential,
            &lv(&[1, 0, 0]),
            &sv(&[1.0, 1.0, 0.0]),
            &uni,
        )
        .unwrap();
        assert_relative_eq!(v, 1.0 + (-1f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(v, 1.367879, epsilon = 1e-6);
    }

    #[test]
    fn bipartite_examples() {
        use SignedLabel::*;
        assert_eq!(bipartite_rank_loss(Positive, Negative, 2.0, 1.0), 0.0);
        assert_eq!(bipartite_rank_loss(Positive, Negative, 1.0, 2.0), 1.0);
        assert_eq!(bipartite_rank_loss(Negative, Positive, 2.0, 1.0), 1.0);
        assert_eq!(bipartite_rank_loss(Positive, Negative, 0.3, 0.3), 0.5);
        assert_eq!(bipartite_rank_loss(Positive, Positive, 0.3, -4.0), 0.0);
        assert_eq!(bipartite_rank_loss(Negative, Negative, 0.3, 0.3), 0.0);
    }

    #[test]
    fn ranking_breaks_ties_by_index() {
        let (order, broken) = sv(&[0.5, 1.0, 0.5]).ranking();
        assert_eq!(order, vec![1, 0, 2]);
        assert!(broken);
        let (order, broken) = sv(&[0.1, 0.3, 0.2]).ranking();
        assert_eq!(order, vec![1, 2, 0]);
        assert!(!broken);
    }

    fn labels_and_scores() -> impl Strategy<Value = (LabelVector, Vec<f64>)> {
        (2usize..8).prop_flat_map(|m| {
            (
                prop::collection::vec(0u8..2, m),
                prop::collection::vec(-5.0f64..5.0, m),
            )
                .prop_map(|(b, h)| (LabelVector::new(b).unwrap(), h))
        })
    }

    fn spec_strategy() -> impl Strategy<Value = WeightSpec> {
        prop_oneof![
            Just(WeightSpec::uniform()),
            Just(WeightSpec::pairwise_normalized()),
            (0.01f64..5.0).prop_map(|c| WeightSpec::constant(c).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn rank_loss_bounds((y, h) in labels_and_scores(), spec in spec_strategy()) {
            let h = ScoreVector::new(h).unwrap();
            let w = spec.weight(&y).unwrap();
            let loss = rank_loss(&y, &h, &spec).unwrap();
            prop_assert!(loss >= 0.0);
            prop_assert!(loss <= w * y.mixed_pairs() as f64 + 1e-12);
            let pn = rank_loss(&y, &h, &WeightSpec::pairwise_normalized()).unwrap();
            prop_assert!((0.0..=1.0).contains(&pn));
        }

        #[test]
        fn rank_loss_monotone_invariance((y, h) in labels_and_scores(), a in 0.1f64..3.0, b in -2.0f64..2.0) {
            let spec = WeightSpec::pairwise_normalized();
            let base = rank_loss(&y, &ScoreVector::new(h.clone()).unwrap(), &spec).unwrap();
            // strictly increasing maps
            let affine: Vec<f64> = h.iter().map(|v| a * v + b).collect();
            let cubic: Vec<f64> = h.iter().map(|v| v * v * v + v).collect();
            prop_assert_eq!(base, rank_loss(&y, &ScoreVector::new(affine).unwrap(), &spec).unwrap());
            prop_assert_eq!(base, rank_loss(&y, &ScoreVector::new(cubic).unwrap(), &spec).unwrap());
        }

        #[test]
        fn reversed_ranking_complements((y, h) in labels_and_scores(), spec in spec_strategy()) {
            let h = ScoreVector::new(h).unwrap();
            // continuous draws have no ties almost surely; skip the rare exception
            let tied = (0..h.len()).any(|i| (0..i).any(|j| h[i] == h[j]));
            prop_assume!(!tied);
            let total = rank_loss(&y, &h, &spec).unwrap() + rank_loss(&y, &h.negated(), &spec).unwrap();
            let expected = spec.weight(&y).unwrap() * y.mixed_pairs() as f64;
            prop_assert!((total - expected).abs() <= 1e-12);
        }

        #[test]
        fn surrogates_are_convex(
            (y, a) in labels_and_scores(),
            seed in any::<u64>(),
            phi in prop_oneof![Just(Surrogate::Exponential), Just(Surrogate::Logistic)],
        ) {
            use rand::Rng;
            let mut rng = crate::rng::stream(seed, 0);
            let b: Vec<f64> = a.iter().map(|_| rng.random_range(-5.0..5.0)).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, z)| 0.5 * (x + z)).collect();
            let spec = WeightSpec::uniform();
            let [fa, fb, fm] = [&a, &b, &mid].map(|v| ScoreVector::new(v.clone()).unwrap());
            for f in [univariate_surrogate_loss, pairwise_surrogate_loss] {
                let (va, vb, vm) = (
                    f(phi, &y, &fa, &spec).unwrap(),
                    f(phi, &y, &fb, &spec).unwrap(),
                    f(phi, &y, &fm, &spec).unwrap(),
                );
                prop_assert!(vm <= 0.5 * (va + vb) + 1e-9);
            }
        }

        #[test]
        fn exponential_pairwise_dominates_rank_loss((y, h) in labels_and_scores(), spec in spec_strategy()) {
            let h = ScoreVector::new(h).unwrap();
            let r = rank_loss(&y, &h, &spec).unwrap();
            let s = pairwise_surrogate_loss(Surrogate::Exponential, &y, &h, &spec).unwrap();
            prop_assert!(r <= s + 1e-12);
        }
    }
}
