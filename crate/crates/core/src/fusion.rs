//! Conflict-optimized combination (PCA-DS).
//!
//! Each pairwise step of the left fold computes the conjunctive products of
//! the running result and the next source. Products on nonempty intersections
//! are kept as in Dempster's rule. Products on empty intersections are not
//! normalized away: each is attributed uniformly to the singletons of A ∪ B,
//! the attribution rows are reduced with a product-mass-weighted PCA, and the
//! per-hypothesis reliability
//!
//! ```text
//! k̃_h = Σ_{k ≤ m} explained_ratio_k · |loading_{k,h}|
//! ```
//!
//! (normalized to sum 1) decides how much of the conflict mass goes back to
//! each singleton. A step without conflict is exactly Dempster's rule.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{
    self, conjunctive_fold, conjunctive_products, normalize_by_k, split_sources, uncertainty_interval, EvidenceError,
    FocalSet, Frame, Interval, MassFunction, MassFunctionJson,
};
use crate::matrix::Matrix;
use crate::pca::{principal_components_weighted, PcaError};

/// Conflict at or below this is treated as none.
pub const CONFLICT_EPS: f64 = 1e-12;
/// Raw reliability scores below this count as degenerate.
pub const SCORE_EPS: f64 = 1e-12;
pub const DEFAULT_THRESHOLD: f64 = 0.85;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error("conflict matrix is empty")]
    EmptyConflict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ds")]
    Ds,
    #[serde(rename = "pca_ds")]
    PcaDs,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Ds, Method::PcaDs];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ds => "ds",
            Method::PcaDs => "pca_ds",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ds" => Ok(Method::Ds),
            "pca_ds" | "pca-ds" => Ok(Method::PcaDs),
            other => Err(format!("unknown method `{other}` (expected ds or pca-ds)")),
        }
    }
}

/// One conflicting product m1(left)·m2(right) with left ∩ right = ∅.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictRow {
    pub left: FocalSet,
    pub right: FocalSet,
    pub product_mass: f64,
    /// Per-hypothesis share of `product_mass`; sums to it.
    pub attribution: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConflictMatrix {
    pub frame: Frame,
    pub rows: Vec<ConflictRow>,
}

impl ConflictMatrix {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.rows.iter().map(|r| r.product_mass).sum()
    }

    pub fn attribution_matrix(&self) -> Matrix {
        Matrix::from_rows(&self.rows.iter().map(|r| r.attribution.clone()).collect::<Vec<_>>())
    }
}

fn conflict_rows(frame: &Frame, terms: &[evidence::ProductTerm]) -> Vec<ConflictRow> {
    terms
        .iter()
        .filter(|t| t.mass > 0.0)
        .map(|t| {
            let members = t.left.union(t.right);
            let share = t.mass / members.len() as f64;
            let mut attribution = vec![0.0; frame.len()];
            for i in members.members() {
                attribution[i] = share;
            }
            ConflictRow { left: t.left, right: t.right, product_mass: t.mass, attribution }
        })
        .collect()
}

/// One row per ordered pair (A, B), A ∩ B = ∅, with m1(A)·m2(B) > 0; the
/// product is spread uniformly over the singletons of A ∪ B.
pub fn build_conflict_matrix(m1: &MassFunction, m2: &MassFunction) -> Result<ConflictMatrix, FusionError> {
    let products = conjunctive_products(m1, m2)?;
    let rows = conflict_rows(m1.frame(), &products.conflicting);
    Ok(ConflictMatrix { frame: m1.frame().clone(), rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reliability {
    /// Nonnegative, sums to 1.
    pub weights: Vec<f64>,
    /// Components kept by the variance threshold; 0 when the fallback was used.
    pub retained: usize,
    /// True when the conflict rows carried no usable variance and the weights
    /// are the attribution column shares instead.
    pub fallback: bool,
}

/// Per-hypothesis reliability weights from the principal components of the
/// conflict attribution rows, each row weighted by its product mass.
pub fn component_reliability(cm: &ConflictMatrix, threshold: f64) -> Result<Reliability, FusionError> {
    if cm.is_empty() {
        return Err(FusionError::EmptyConflict);
    }
    let data = cm.attribution_matrix();
    let masses: Vec<f64> = cm.rows.iter().map(|r| r.product_mass).collect();
    let pca = principal_components_weighted(&data, &masses, threshold)?;

    // Variance at the rounding level of the attributions is no variance.
    let scale = cm.rows.iter().flat_map(|r| r.attribution.iter()).fold(0.0_f64, |a, v| a.max(v.abs()));
    let informative = pca.total_variance() > 1e-20 * scale * scale;

    let p = cm.frame.len();
    let mut raw = vec![0.0; p];
    if informative {
        for (ratio, component) in pca.explained_ratio.iter().zip(pca.retained_components()) {
            for (r, loading) in raw.iter_mut().zip(component) {
                *r += ratio * loading.abs();
            }
        }
    }
    if raw.iter().all(|r| *r < SCORE_EPS) {
        let mut shares = vec![0.0; p];
        for row in &cm.rows {
            for (s, a) in shares.iter_mut().zip(&row.attribution) {
                *s += a;
            }
        }
        let total: f64 = shares.iter().sum();
        return Ok(Reliability { weights: shares.iter().map(|s| s / total).collect(), retained: 0, fallback: true });
    }
    let total: f64 = raw.iter().sum();
    Ok(Reliability { weights: raw.iter().map(|r| r / total).collect(), retained: pca.retained, fallback: false })
}

/// What happened in one pairwise combination.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionStep {
    /// 1 for the first pair, n − 1 for the last.
    pub step: usize,
    /// Total conflicting product mass of this step.
    pub conflict: f64,
    /// Reliability weights used to redistribute `conflict` (empty for DS or no conflict).
    pub weights: Vec<f64>,
    pub retained: usize,
    /// Σ nonconflicting products + redistributed conflict, before renormalization.
    pub pre_normalization_total: f64,
    /// (bel, pl, mu) of every singleton after the step, in frame order.
    pub intervals: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionReport {
    pub method: Method,
    pub combined: MassFunction,
    /// 1 − K of the joint n-source conjunctive product of the inputs.
    pub conflict_total: f64,
    /// Conflict-mass-weighted average of the per-step weights; empty when
    /// nothing was redistributed.
    pub reliability_weights: Vec<f64>,
    /// Largest number of retained components over the steps.
    pub retained_components: usize,
    pub steps: Vec<FusionStep>,
}

fn singleton_intervals(m: &MassFunction) -> Vec<Interval> {
    m.frame()
        .singletons()
        .map(|s| uncertainty_interval(m, s).expect("singleton lies in its own frame"))
        .collect()
}

fn pca_ds_step(acc: &MassFunction, next: &MassFunction, threshold: f64, step: usize) -> Result<(MassFunction, FusionStep), FusionError> {
    let frame = acc.frame().clone();
    let products = conjunctive_products(acc, next)?;
    let conflict = products.conflict();
    if conflict <= CONFLICT_EPS {
        let combined = normalize_by_k(frame, &products)?;
        let info = FusionStep {
            step,
            conflict,
            weights: Vec::new(),
            retained: 0,
            pre_normalization_total: products.k() + conflict,
            intervals: singleton_intervals(&combined),
        };
        return Ok((combined, info));
    }
    let cm = ConflictMatrix { frame: frame.clone(), rows: conflict_rows(&frame, &products.conflicting) };
    let reliability = component_reliability(&cm, threshold)?;
    let mut partial = products.aggregated();
    for (i, w) in reliability.weights.iter().enumerate() {
        if *w > 0.0 {
            *partial.entry(frame.singleton(i)).or_insert(0.0) += conflict * w;
        }
    }
    let total: f64 = partial.values().sum();
    let combined = MassFunction::new(frame, partial)?;
    let info = FusionStep {
        step,
        conflict,
        weights: reliability.weights,
        retained: reliability.retained,
        pre_normalization_total: total,
        intervals: singleton_intervals(&combined),
    };
    Ok((combined, info))
}

fn ds_step(acc: &MassFunction, next: &MassFunction, step: usize) -> Result<(MassFunction, FusionStep), FusionError> {
    let products = conjunctive_products(acc, next)?;
    let combined = normalize_by_k(acc.frame().clone(), &products)?;
    let info = FusionStep {
        step,
        conflict: products.conflict(),
        weights: Vec::new(),
        retained: 0,
        pre_normalization_total: products.k(),
        intervals: singleton_intervals(&combined),
    };
    Ok((combined, info))
}

/// Left-folds `masses` with `method`, recording every step.
pub fn fuse(masses: &[MassFunction], method: Method, threshold: f64) -> Result<FusionReport, FusionError> {
    let (first, rest) = split_sources(masses)?;
    let fold = conjunctive_fold(masses)?;
    let conflict_total = fold.get(&FocalSet::EMPTY).copied().unwrap_or(0.0).clamp(0.0, 1.0);

    let mut acc = first.clone();
    let mut steps = Vec::with_capacity(rest.len());
    for (i, next) in rest.iter().enumerate() {
        let (combined, info) = match method {
            Method::Ds => ds_step(&acc, next, i + 1)?,
            Method::PcaDs => pca_ds_step(&acc, next, threshold, i + 1)?,
        };
        acc = combined;
        steps.push(info);
    }

    let p = acc.frame().len();
    let mut weighted = vec![0.0; p];
    let mut redistributed = 0.0;
    for s in steps.iter().filter(|s| !s.weights.is_empty()) {
        redistributed += s.conflict;
        for (w, sw) in weighted.iter_mut().zip(&s.weights) {
            *w += s.conflict * sw;
        }
    }
    let reliability_weights =
        if redistributed > 0.0 { weighted.iter().map(|w| w / redistributed).collect() } else { Vec::new() };
    let retained_components = steps.iter().map(|s| s.retained).max().unwrap_or(0);
    Ok(FusionReport { method, combined: acc, conflict_total, reliability_weights, retained_components, steps })
}

/// PCA-DS combination of two or more sources.
pub fn pca_ds_combine(masses: &[MassFunction], threshold: f64) -> Result<FusionReport, FusionError> {
    fuse(masses, Method::PcaDs, threshold)
}

/// Dempster's rule with the same step bookkeeping as [`pca_ds_combine`].
pub fn ds_combine(masses: &[MassFunction]) -> Result<FusionReport, FusionError> {
    fuse(masses, Method::Ds, DEFAULT_THRESHOLD)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub step: usize,
    pub bel: f64,
    pub pl: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTrace {
    pub points: Vec<TracePoint>,
    /// Step with the narrowest interval (earliest on ties): the best fusion point.
    pub best_step: usize,
}

/// Interval of `watch` after each incremental combination.
pub fn fuse_sequence(
    masses: &[MassFunction],
    method: Method,
    watch: FocalSet,
    threshold: f64,
) -> Result<IntervalTrace, FusionError> {
    let (first, rest) = split_sources(masses)?;
    uncertainty_interval(first, watch)?;
    let mut acc = first.clone();
    let mut points = Vec::with_capacity(rest.len());
    for (i, next) in rest.iter().enumerate() {
        acc = match method {
            Method::Ds => ds_step(&acc, next, i + 1)?.0,
            Method::PcaDs => pca_ds_step(&acc, next, threshold, i + 1)?.0,
        };
        let iv = uncertainty_interval(&acc, watch)?;
        points.push(TracePoint { step: i + 1, bel: iv.bel, pl: iv.pl, mu: iv.mu });
    }
    let best_step = points
        .iter()
        .fold(None::<&TracePoint>, |best, p| match best {
            Some(b) if b.mu <= p.mu => Some(b),
            _ => Some(p),
        })
        .map_or(1, |p| p.step);
    Ok(IntervalTrace { points, best_step })
}

/// JSON form of a [`FusionReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionReportJson {
    pub method: Method,
    pub conflict_total: f64,
    pub retained_components: usize,
    pub weights: BTreeMap<String, f64>,
    pub steps: Vec<StepJson>,
    pub combined: MassFunctionJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepJson {
    pub step: usize,
    pub hypothesis: String,
    pub bel: f64,
    pub pl: f64,
    pub mu: f64,
}

impl FusionReport {
    /// Step entries cover every singleton, or only `watch` when given.
    pub fn to_json(&self, watch: Option<FocalSet>) -> FusionReportJson {
        let frame = self.combined.frame();
        let weights = self.reliability_weights.iter().enumerate().map(|(i, w)| (frame.labels()[i].clone(), *w)).collect();
        let mut steps = Vec::new();
        for s in &self.steps {
            for (i, iv) in s.intervals.iter().enumerate() {
                let set = frame.singleton(i);
                if watch.is_some_and(|w| w != set) {
                    continue;
                }
                steps.push(StepJson { step: s.step, hypothesis: frame.labels()[i].clone(), bel: iv.bel, pl: iv.pl, mu: iv.mu });
            }
        }
        FusionReportJson {
            method: self.method,
            conflict_total: self.conflict_total,
            retained_components: self.retained_components,
            weights,
            steps,
            combined: self.combined.to_json(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::dempster_combine;
    use approx::assert_abs_diff_eq;

    fn abc() -> Frame {
        Frame::new(["A", "B", "C"]).unwrap()
    }

    fn zadeh() -> Vec<MassFunction> {
        let f = abc();
        let (a, b, c) = (f.singleton(0), f.singleton(1), f.singleton(2));
        vec![
            MassFunction::new(f.clone(), [(a, 0.99), (b, 0.01)]).unwrap(),
            MassFunction::new(f, [(c, 0.99), (b, 0.01)]).unwrap(),
        ]
    }

    fn row(attribution: Vec<f64>) -> ConflictRow {
        ConflictRow { left: FocalSet(1), right: FocalSet(2), product_mass: attribution.iter().sum(), attribution }
    }

    #[test]
    fn conflict_free_pair_has_empty_matrix() {
        let f = abc();
        let m1 = MassFunction::simple_support(f.clone(), f.singleton(0), 0.6).unwrap();
        let m2 = MassFunction::vacuous(f);
        assert!(build_conflict_matrix(&m1, &m2).unwrap().is_empty());
    }

    #[test]
    fn disjoint_singletons_split_evenly() {
        let f = abc();
        let m1 = MassFunction::new(f.clone(), [(f.singleton(0), 1.0)]).unwrap();
        let m2 = MassFunction::new(f.clone(), [(f.singleton(1), 1.0)]).unwrap();
        let cm = build_conflict_matrix(&m1, &m2).unwrap();
        assert_eq!(cm.rows.len(), 1);
        assert_eq!(cm.rows[0].product_mass, 1.0);
        assert_eq!(cm.rows[0].attribution, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn only_the_disjoint_product_conflicts() {
        let f = abc();
        let m1 = MassFunction::simple_support(f.clone(), f.singleton(0), 0.6).unwrap();
        let m2 = MassFunction::simple_support(f.clone(), f.singleton(1), 0.7).unwrap();
        let cm = build_conflict_matrix(&m1, &m2).unwrap();
        assert_eq!(cm.rows.len(), 1);
        assert_abs_diff_eq!(cm.rows[0].product_mass, 0.42, epsilon = 1e-15);
        let sum: f64 = cm.rows[0].attribution.iter().sum();
        assert_abs_diff_eq!(sum, 0.42, epsilon = 1e-12);
    }

    #[test]
    fn frame_mismatch_is_reported() {
        let m1 = MassFunction::vacuous(abc());
        let m2 = MassFunction::vacuous(Frame::new(["A", "B"]).unwrap());
        assert_eq!(build_conflict_matrix(&m1, &m2), Err(FusionError::Evidence(EvidenceError::FrameMismatch)));
    }

    #[test]
    fn single_row_falls_back_to_its_attribution() {
        let f = abc();
        let cm = ConflictMatrix { frame: f.clone(), rows: vec![row(vec![0.3, 0.1, 0.0])] };
        let r = component_reliability(&cm, 0.85).unwrap();
        assert!(r.fallback);
        assert_abs_diff_eq!(r.weights[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights[1], 0.25, epsilon = 1e-15);
        assert_eq!(r.weights[2], 0.0);
    }

    #[test]
    fn identical_rows_match_single_row() {
        let f = abc();
        let one = ConflictMatrix { frame: f.clone(), rows: vec![row(vec![0.2, 0.05, 0.05])] };
        let two = ConflictMatrix { frame: f.clone(), rows: vec![row(vec![0.2, 0.05, 0.05]); 2] };
        let a = component_reliability(&one, 0.85).unwrap();
        let b = component_reliability(&two, 0.85).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
        assert!(b.fallback);
    }

    #[test]
    fn alternating_rows_match_oracle() {
        let f = abc();
        let cm = ConflictMatrix {
            frame: f.clone(),
            rows: vec![
                row(vec![0.3, 0.05, 0.05]),
                row(vec![0.05, 0.3, 0.05]),
                row(vec![0.2, 0.0, 0.2]),
            ],
        };
        let r = component_reliability(&cm, 0.85).unwrap();
        assert_eq!(r.retained, 2);
        let expected = [0.35818947615179525, 0.43395331472725124, 0.2078572091209536];
        for (w, e) in r.weights.iter().zip(expected) {
            assert_abs_diff_eq!(*w, e, epsilon = 1e-9);
        }
    }

    #[test]
    fn two_pattern_rows_weight_both_hypotheses() {
        let f = abc();
        let cm = ConflictMatrix {
            frame: f.clone(),
            rows: (0..4).map(|i| row(if i % 2 == 0 { vec![0.3, 0.1, 0.0] } else { vec![0.1, 0.3, 0.0] })).collect(),
        };
        let r = component_reliability(&cm, 0.85).unwrap();
        assert_eq!(r.retained, 1);
        assert_abs_diff_eq!(r.weights[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.weights[1], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.weights[2], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn empty_matrix_is_an_error() {
        let cm = ConflictMatrix { frame: abc(), rows: Vec::new() };
        assert_eq!(component_reliability(&cm, 0.85), Err(FusionError::EmptyConflict));
    }

    #[test]
    fn zadeh_returns_mass_to_a_and_c() {
        let report = pca_ds_combine(&zadeh(), DEFAULT_THRESHOLD).unwrap();
        let f = abc();
        let m = &report.combined;
        assert_abs_diff_eq!(m.mass(f.singleton(0)), 0.497425, epsilon = 1e-12);
        assert_abs_diff_eq!(m.mass(f.singleton(1)), 0.00515, epsilon = 1e-12);
        assert_abs_diff_eq!(m.mass(f.singleton(2)), 0.497425, epsilon = 1e-12);
        assert!(crate::evidence::validate_mass(m).is_ok());
        assert_abs_diff_eq!(report.conflict_total, 0.9999, epsilon = 1e-12);
        assert_eq!(report.retained_components, 1);
        let w = &report.reliability_weights;
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[0], 0.4974747474747476, epsilon = 1e-9);
        assert_abs_diff_eq!(w[1], 0.0050505050505049364, epsilon = 1e-9);
        assert_eq!(report.steps.len(), 1);
        assert_abs_diff_eq!(report.steps[0].pre_normalization_total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn total_conflict_is_redistributed() {
        let f = abc();
        let m1 = MassFunction::new(f.clone(), [(f.singleton(0), 1.0)]).unwrap();
        let m2 = MassFunction::new(f.clone(), [(f.singleton(2), 1.0)]).unwrap();
        assert!(dempster_combine(&[m1.clone(), m2.clone()]).is_err());
        let report = pca_ds_combine(&[m1, m2], DEFAULT_THRESHOLD).unwrap();
        assert_abs_diff_eq!(report.combined.mass(f.singleton(0)), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(report.combined.mass(f.singleton(2)), 0.5, epsilon = 1e-12);
        assert_eq!(report.conflict_total, 1.0);
    }

    #[test]
    fn conflict_free_reduces_to_dempster() {
        let f = abc();
        let m1 = MassFunction::new(f.clone(), [(f.set_of(&["A", "B"]).unwrap(), 0.6), (f.full(), 0.4)]).unwrap();
        let m2 = MassFunction::new(f.clone(), [(f.set_of(&["B", "C"]).unwrap(), 0.3), (f.full(), 0.7)]).unwrap();
        let ds = dempster_combine(&[m1.clone(), m2.clone()]).unwrap();
        let pca = pca_ds_combine(&[m1, m2], DEFAULT_THRESHOLD).unwrap();
        assert_eq!(pca.conflict_total, 0.0);
        assert!(pca.reliability_weights.is_empty());
        for set in f.powerset() {
            assert_abs_diff_eq!(ds.mass(set), pca.combined.mass(set), epsilon = 1e-12);
        }
    }

    #[test]
    fn vacuous_is_neutral() {
        let f = abc();
        let m = MassFunction::new(f.clone(), [(f.singleton(0), 0.5), (f.set_of(&["B", "C"]).unwrap(), 0.3), (f.full(), 0.2)])
            .unwrap();
        let out = pca_ds_combine(&[MassFunction::vacuous(f.clone()), m.clone()], DEFAULT_THRESHOLD).unwrap();
        for set in f.powerset() {
            assert_abs_diff_eq!(out.combined.mass(set), m.mass(set), epsilon = 1e-12);
        }
    }

    #[test]
    fn agreeing_sources_contract_the_interval() {
        let f = abc();
        let a = f.singleton(0);
        let m = MassFunction::simple_support(f.clone(), a, 0.5).unwrap();
        let trace = fuse_sequence(&[m.clone(), m.clone(), m], Method::PcaDs, a, DEFAULT_THRESHOLD).unwrap();
        let mus: Vec<f64> = trace.points.iter().map(|p| p.mu).collect();
        assert_abs_diff_eq!(mus[0], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(mus[1], 0.125, epsilon = 1e-12);
        assert_eq!(trace.best_step, 2);
    }

    #[test]
    fn ds_and_pca_ds_traces_agree_without_conflict() {
        let f = abc();
        let a = f.singleton(0);
        let m1 = MassFunction::simple_support(f.clone(), a, 0.3).unwrap();
        let m2 = MassFunction::simple_support(f.clone(), f.set_of(&["A", "B"]).unwrap(), 0.6).unwrap();
        let ds = fuse_sequence(&[m1.clone(), m2.clone()], Method::Ds, a, 0.85).unwrap();
        let pca = fuse_sequence(&[m1, m2], Method::PcaDs, a, 0.85).unwrap();
        assert_eq!(ds, pca);
    }

    #[test]
    fn single_hypothesis_frame_has_no_width() {
        let f = Frame::new(["only"]).unwrap();
        let m = MassFunction::vacuous(f.clone());
        let trace = fuse_sequence(&[m.clone(), m.clone(), m], Method::PcaDs, f.full(), 0.85).unwrap();
        for p in &trace.points {
            assert_eq!((p.bel, p.pl, p.mu), (1.0, 1.0, 0.0));
        }
    }

    #[test]
    fn json_filters_by_watch() {
        let report = pca_ds_combine(&zadeh(), DEFAULT_THRESHOLD).unwrap();
        let all = report.to_json(None);
        assert_eq!(all.steps.len(), 3);
        assert_eq!(all.method, Method::PcaDs);
        let only_b = report.to_json(Some(abc().singleton(1)));
        assert_eq!(only_b.steps.len(), 1);
        assert_eq!(only_b.steps[0].hypothesis, "B");
        assert_eq!(all.weights.len(), 3);
    }

    #[test]
    fn method_parses_both_spellings() {
        assert_eq!("pca-ds".parse::<Method>().unwrap(), Method::PcaDs);
        assert_eq!("pca_ds".parse::<Method>().unwrap(), Method::PcaDs);
        assert_eq!("ds".parse::<Method>().unwrap(), Method::Ds);
        assert!("bpnn".parse::<Method>().is_err());
    }
}
