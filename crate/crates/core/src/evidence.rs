//! Dempster-Shafer evidence: frames of discernment, mass functions, belief,
//! plausibility, the uncertainty interval and Dempster's rule.
//!
//! Subsets of the frame are 16-bit masks ([`FocalSet`]); bit `i` stands for
//! the i-th label of the [`Frame`]. A [`MassFunction`] stores only its
//! nonzero focal sets, in mask order.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported frame.
pub const MAX_FRAME: usize = 16;

/// Masses must sum to 1 within this before they are renormalized.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Dempster's rule refuses to normalize when K is at or below this.
pub const TOTAL_CONFLICT_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvidenceError {
    #[error("frame must have 1..=16 labels, got {0}")]
    FrameSize(usize),
    #[error("duplicate or empty label `{0}`")]
    BadLabel(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("operands are defined on different frames")]
    FrameMismatch,
    #[error("focal set {0:#x} lies outside the frame")]
    OutsideFrame(u16),
    #[error("invalid mass function: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidMass(Vec<MassViolation>),
    #[error("total conflict: K = {0:e}")]
    TotalConflict(f64),
    #[error("need at least {needed} mass functions, got {got}")]
    TooFewSources { needed: usize, got: usize },
}

/// Ordered, duplicate-free hypothesis labels. Cheap to clone.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    labels: Arc<[String]>,
}

impl Frame {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self, EvidenceError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() || labels.len() > MAX_FRAME {
            return Err(EvidenceError::FrameSize(labels.len()));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() || l.contains('|') || labels[..i].contains(l) {
                return Err(EvidenceError::BadLabel(l.clone()));
            }
        }
        Ok(Self { labels: labels.into() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// U, the whole frame.
    pub fn full(&self) -> FocalSet {
        FocalSet(((1u32 << self.len()) - 1) as u16)
    }

    pub fn singleton(&self, i: usize) -> FocalSet {
        assert!(i < self.len(), "hypothesis index out of range");
        FocalSet(1 << i)
    }

    pub fn singletons(&self) -> impl Iterator<Item = FocalSet> + '_ {
        (0..self.len()).map(|i| FocalSet(1 << i))
    }

    pub fn contains(&self, set: FocalSet) -> bool {
        set.0 & !self.full().0 == 0
    }

    pub fn complement(&self, set: FocalSet) -> FocalSet {
        FocalSet(self.full().0 & !set.0)
    }

    /// Every subset of U, ∅ first, in mask order.
    pub fn powerset(&self) -> impl Iterator<Item = FocalSet> {
        (0..=self.full().0 as u32).map(|m| FocalSet(m as u16))
    }

    pub fn set_of(&self, labels: &[&str]) -> Result<FocalSet, EvidenceError> {
        labels.iter().try_fold(FocalSet::EMPTY, |acc, l| {
            let i = self.index_of(l).ok_or_else(|| EvidenceError::UnknownLabel((*l).to_owned()))?;
            Ok(acc.union(FocalSet(1 << i)))
        })
    }

    /// `|`-joined labels of the members, sorted lexicographically. ∅ renders as "".
    pub fn key_of(&self, set: FocalSet) -> String {
        let mut names: Vec<&str> = set.members().map(|i| self.labels[i].as_str()).collect();
        names.sort_unstable();
        names.join("|")
    }

    /// Inverse of [`Frame::key_of`]; member order in the key is irrelevant.
    pub fn parse_key(&self, key: &str) -> Result<FocalSet, EvidenceError> {
        if key.is_empty() {
            return Ok(FocalSet::EMPTY);
        }
        let parts: Vec<&str> = key.split('|').map(str::trim).collect();
        self.set_of(&parts)
    }
}

/// A subset of the frame as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FocalSet(pub u16);

impl FocalSet {
    pub const EMPTY: FocalSet = FocalSet(0);

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_FRAME && self.0 & (1 << i) != 0
    }

    pub fn intersect(self, other: FocalSet) -> FocalSet {
        FocalSet(self.0 & other.0)
    }

    pub fn union(self, other: FocalSet) -> FocalSet {
        FocalSet(self.0 | other.0)
    }

    pub fn is_subset_of(self, other: FocalSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: FocalSet) -> bool {
        self.0 & other.0 != 0
    }

    /// Member indices in increasing order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        (0..MAX_FRAME).filter(move |i| self.0 & (1 << i) != 0)
    }
}

impl fmt::Display for FocalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// A condition of a valid basic probability assignment that does not hold.
#[derive(Debug, Clone, PartialEq)]
pub enum MassViolation {
    EmptySetMass(f64),
    Negative { set: FocalSet, mass: f64 },
    NonFinite { set: FocalSet },
    OutsideFrame(FocalSet),
    SumNotOne(f64),
}

impl fmt::Display for MassViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MassViolation::EmptySetMass(m) => write!(f, "m(∅) = {m} ≠ 0"),
            MassViolation::Negative { set, mass } => write!(f, "m({set}) = {mass} < 0"),
            MassViolation::NonFinite { set } => write!(f, "m({set}) is not finite"),
            MassViolation::OutsideFrame(set) => write!(f, "focal set {set} outside the frame"),
            MassViolation::SumNotOne(s) => write!(f, "masses sum to {s}"),
        }
    }
}

/// Basic probability assignment m: 2^U → [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction {
    frame: Frame,
    masses: BTreeMap<FocalSet, f64>,
}

impl MassFunction {
    /// Builds a valid mass function. Repeated focal sets are summed, zero
    /// entries dropped, and a total within [`SUM_TOLERANCE`] of 1 is
    /// renormalized to 1; anything else is rejected with the full list of
    /// violations.
    pub fn new(frame: Frame, entries: impl IntoIterator<Item = (FocalSet, f64)>) -> Result<Self, EvidenceError> {
        let unchecked = Self::from_unchecked(frame, entries);
        validate_mass(&unchecked).map_err(EvidenceError::InvalidMass)?;
        let total: f64 = unchecked.masses.values().sum();
        let masses = unchecked.masses.into_iter().map(|(k, v)| (k, v / total)).collect();
        Ok(Self { frame: unchecked.frame, masses })
    }

    /// Stores the entries without any checks (zeros are still dropped).
    /// Use [`validate_mass`] to inspect the result.
    pub fn from_unchecked(frame: Frame, entries: impl IntoIterator<Item = (FocalSet, f64)>) -> Self {
        let mut masses = BTreeMap::new();
        for (set, m) in entries {
            *masses.entry(set).or_insert(0.0) += m;
        }
        masses.retain(|_, m| *m != 0.0);
        Self { frame, masses }
    }

    /// m(U) = 1: total ignorance.
    pub fn vacuous(frame: Frame) -> Self {
        let full = frame.full();
        Self { frame, masses: BTreeMap::from([(full, 1.0)]) }
    }

    /// {A: a, U: 1 − a}.
    pub fn simple_support(frame: Frame, set: FocalSet, a: f64) -> Result<Self, EvidenceError> {
        let full = frame.full();
        Self::new(frame, [(set, a), (full, 1.0 - a)])
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn mass(&self, set: FocalSet) -> f64 {
        self.masses.get(&set).copied().unwrap_or(0.0)
    }

    /// Nonzero entries in mask order.
    pub fn focal_sets(&self) -> impl Iterator<Item = (FocalSet, f64)> + '_ {
        self.masses.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.masses.values().sum()
    }

    /// True when every focal set is a singleton.
    pub fn is_bayesian(&self) -> bool {
        self.masses.keys().all(|s| s.len() == 1)
    }

    fn check_set(&self, set: FocalSet) -> Result<(), EvidenceError> {
        if self.frame.contains(set) {
            Ok(())
        } else {
            Err(EvidenceError::OutsideFrame(set.0))
        }
    }

    pub fn to_json(&self) -> MassFunctionJson {
        MassFunctionJson {
            frame: self.frame.labels().to_vec(),
            masses: self.masses.iter().map(|(k, v)| (self.frame.key_of(*k), *v)).collect(),
        }
    }

    pub fn from_json(json: &MassFunctionJson) -> Result<Self, EvidenceError> {
        let frame = Frame::new(json.frame.iter().cloned())?;
        let entries = json
            .masses
            .iter()
            .map(|(k, v)| Ok((frame.parse_key(k)?, *v)))
            .collect::<Result<Vec<_>, EvidenceError>>()?;
        Self::new(frame, entries)
    }
}

/// JSON form: `{"frame": [labels], "masses": {"A|B": value}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassFunctionJson {
    pub frame: Vec<String>,
    pub masses: BTreeMap<String, f64>,
}

/// Lists every violated BPA condition: m(∅) = 0, m ≥ 0, finite, inside the
/// frame, and Σ m = 1 (within [`SUM_TOLERANCE`]).
pub fn validate_mass(m: &MassFunction) -> Result<(), Vec<MassViolation>> {
    let mut violations = Vec::new();
    for (&set, &mass) in &m.masses {
        if !mass.is_finite() {
            violations.push(MassViolation::NonFinite { set });
            continue;
        }
        if !m.frame.contains(set) {
            violations.push(MassViolation::OutsideFrame(set));
        }
        if set.is_empty() {
            violations.push(MassViolation::EmptySetMass(mass));
        }
        if mass < 0.0 {
            violations.push(MassViolation::Negative { set, mass });
        }
    }
    let total = m.total();
    if total.is_finite() && (total - 1.0).abs() > SUM_TOLERANCE {
        violations.push(MassViolation::SumNotOne(total));
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Bel(A) = Σ m(a) over nonempty a ⊆ A.
pub fn belief(m: &MassFunction, a: FocalSet) -> Result<f64, EvidenceError> {
    m.check_set(a)?;
    Ok(m.focal_sets().filter(|(s, _)| !s.is_empty() && s.is_subset_of(a)).map(|(_, v)| v).sum())
}

/// Pl(A) = Σ m(B) over B with B ∩ A ≠ ∅.
pub fn plausibility(m: &MassFunction, a: FocalSet) -> Result<f64, EvidenceError> {
    m.check_set(a)?;
    Ok(m.focal_sets().filter(|(s, _)| s.intersects(a)).map(|(_, v)| v).sum())
}

/// Belief interval [bel, pl] and its width mu = pl − bel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub bel: f64,
    pub pl: f64,
    pub mu: f64,
}

pub fn uncertainty_interval(m: &MassFunction, a: FocalSet) -> Result<Interval, EvidenceError> {
    let bel = belief(m, a)?;
    let pl = plausibility(m, a)?;
    // Both sums run over the same stored masses; clamp the last-bit noise.
    let mu = (pl - bel).max(0.0);
    Ok(Interval { bel, pl, mu })
}

/// One product m1(left)·m2(right).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductTerm {
    pub left: FocalSet,
    pub right: FocalSet,
    pub mass: f64,
}

/// All pairwise products of two mass functions, split by whether the two
/// focal sets intersect.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjunctiveProducts {
    pub intersecting: Vec<ProductTerm>,
    pub conflicting: Vec<ProductTerm>,
}

impl ConjunctiveProducts {
    /// K: total product mass on nonempty intersections.
    pub fn k(&self) -> f64 {
        self.intersecting.iter().map(|t| t.mass).sum()
    }

    /// Total product mass on empty intersections (1 − K up to rounding).
    pub fn conflict(&self) -> f64 {
        self.conflicting.iter().map(|t| t.mass).sum()
    }

    /// Unnormalized intersecting mass aggregated by intersection.
    pub fn aggregated(&self) -> BTreeMap<FocalSet, f64> {
        let mut out = BTreeMap::new();
        for t in &self.intersecting {
            *out.entry(t.left.intersect(t.right)).or_insert(0.0) += t.mass;
        }
        out
    }
}

pub fn same_frame(a: &MassFunction, b: &MassFunction) -> Result<(), EvidenceError> {
    if a.frame == b.frame {
        Ok(())
    } else {
        Err(EvidenceError::FrameMismatch)
    }
}

pub fn conjunctive_products(m1: &MassFunction, m2: &MassFunction) -> Result<ConjunctiveProducts, EvidenceError> {
    same_frame(m1, m2)?;
    let mut intersecting = Vec::new();
    let mut conflicting = Vec::new();
    for (a, ma) in m1.focal_sets() {
        for (b, mb) in m2.focal_sets() {
            let term = ProductTerm { left: a, right: b, mass: ma * mb };
            if a.intersects(b) {
                intersecting.push(term);
            } else {
                conflicting.push(term);
            }
        }
    }
    Ok(ConjunctiveProducts { intersecting, conflicting })
}

/// Dempster's rule for two sources.
pub fn dempster_pair(m1: &MassFunction, m2: &MassFunction) -> Result<MassFunction, EvidenceError> {
    let products = conjunctive_products(m1, m2)?;
    normalize_by_k(m1.frame.clone(), &products)
}

pub(crate) fn normalize_by_k(frame: Frame, products: &ConjunctiveProducts) -> Result<MassFunction, EvidenceError> {
    let k = products.k();
    if k <= TOTAL_CONFLICT_EPS {
        return Err(EvidenceError::TotalConflict(k));
    }
    MassFunction::new(frame, products.aggregated().into_iter().map(|(s, v)| (s, v / k)))
}

/// m1 ⊕ m2 ⊕ … ⊕ mn, folded left to right.
pub fn dempster_combine(masses: &[MassFunction]) -> Result<MassFunction, EvidenceError> {
    let (first, rest) = split_sources(masses)?;
    rest.iter().try_fold(first.clone(), |acc, m| dempster_pair(&acc, m))
}

pub(crate) fn split_sources(masses: &[MassFunction]) -> Result<(&MassFunction, &[MassFunction]), EvidenceError> {
    if masses.len() < 2 {
        return Err(EvidenceError::TooFewSources { needed: 2, got: masses.len() });
    }
    for m in &masses[1..] {
        same_frame(&masses[0], m)?;
    }
    Ok((&masses[0], &masses[1..]))
}

/// Unnormalized n-ary conjunctive combination of the inputs; the entry at ∅
/// is the total conflict 1 − K of the joint product.
pub fn conjunctive_fold(masses: &[MassFunction]) -> Result<BTreeMap<FocalSet, f64>, EvidenceError> {
    let (first, rest) = split_sources(masses)?;
    let mut acc: BTreeMap<FocalSet, f64> = first.masses.clone();
    for m in rest {
        let mut next = BTreeMap::new();
        for (a, ma) in &acc {
            for (b, mb) in m.focal_sets() {
                *next.entry(a.intersect(b)).or_insert(0.0) += ma * mb;
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// BetP(h) = Σ over focal sets A ∋ h of m(A)/|A|, one entry per hypothesis.
pub fn pignistic(m: &MassFunction) -> Vec<f64> {
    let mut out = vec![0.0; m.frame.len()];
    for (set, mass) in m.focal_sets() {
        let share = mass / set.len() as f64;
        for i in set.members() {
            out[i] += share;
        }
    }
    out
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.is_none_or(|b| *v > values[b]) {
            best = Some(i);
        }
    }
    best
}
