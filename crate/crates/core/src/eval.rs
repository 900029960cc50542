//! Desk-scale versions of the two experiments: the before/after summary of
//! BC-Zscore on the three sources, and DS vs PCA-DS fusion accuracy with
//! interval traces.
//!
//! Evidence comes from prototype distances. For a normalized source row `x`
//! and per-class prototypes `p_h` fitted on training rows,
//!
//! ```text
//! score_h = exp(−‖x − p_h‖₂ / T)
//! m({h})  = (1 − floor) · score_h / Σ score
//! m(U)    = floor
//! ```
//!
//! and the decision is the largest pignistic probability (lowest index on ties).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{argmax, conjunctive_fold, pignistic, EvidenceError, FocalSet, Frame, MassFunction};
use crate::fusion::{fuse, FusionError, Method, DEFAULT_THRESHOLD};
use crate::matrix::Matrix;
use crate::normalize::{bc_zscore, column_stats, BcZscore, BoxCoxParams, ColumnStats, Data, LambdaGrid, NormalizeError};
use crate::rng::{SeededRng, Stream};
use crate::simgen::{generate_scenario, ScenarioConfig, SimError};
use crate::tabular::{align_by_timestamp, format_timestamp, SampleTable, SourceKind, TableError};

pub const DEFAULT_TEMPERATURE: f64 = 0.15;
pub const DEFAULT_IGNORANCE_FLOOR: f64 = 0.1;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;
pub const EXCERPT_ROWS: usize = 10;

/// Sources in fusion order.
pub const FUSION_ORDER: [SourceKind; 3] = SourceKind::ALL;
/// Sources in excerpt order (terminal monitoring, environment, operation).
pub const EXCERPT_ORDER: [SourceKind; 3] = [SourceKind::Monitoring, SourceKind::Environment, SourceKind::Operation];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("row has {got} values, prototypes have {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{predictions} predictions vs {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("nothing to score")]
    Empty,
    #[error("invalid evidence builder: {0}")]
    InvalidBuilder(String),
    #[error("invalid experiment options: {0}")]
    InvalidOptions(String),
    #[error("no {0} table")]
    MissingSource(SourceKind),
    #[error("class `{0}` has no training rows")]
    MissingClass(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Fraction of positions where the two lists agree.
pub fn accuracy<T: PartialEq>(predictions: &[T], labels: &[T]) -> Result<f64, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch { predictions: predictions.len(), labels: labels.len() });
    }
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Per-source, per-class prototypes and the distance-to-mass conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceBuilder {
    frame: Frame,
    prototypes: BTreeMap<SourceKind, Vec<Vec<f64>>>,
    temperature: f64,
    ignorance_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceBuilderJson {
    pub frame: Vec<String>,
    pub temperature: f64,
    pub ignorance_floor: f64,
    /// source → class label → prototype.
    pub prototypes: BTreeMap<SourceKind, BTreeMap<String, Vec<f64>>>,
}

impl EvidenceBuilder {
    pub fn new(
        frame: Frame,
        prototypes: BTreeMap<SourceKind, Vec<Vec<f64>>>,
        temperature: f64,
        ignorance_floor: f64,
    ) -> Result<Self, EvalError> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(EvalError::InvalidBuilder(format!("temperature must be > 0, got {temperature}")));
        }
        if !(0.0..1.0).contains(&ignorance_floor) {
            return Err(EvalError::InvalidBuilder(format!("ignorance floor must lie in [0, 1), got {ignorance_floor}")));
        }
        for (kind, protos) in &prototypes {
            if protos.len() != frame.len() {
                return Err(EvalError::InvalidBuilder(format!(
                    "{kind} has {} prototypes for {} classes",
                    protos.len(),
                    frame.len()
                )));
            }
            let dim = protos.first().map_or(0, Vec::len);
            if dim == 0 || protos.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
                return Err(EvalError::InvalidBuilder(format!("{kind} prototypes must share a nonzero dimension")));
            }
        }
        Ok(Self { frame, prototypes, temperature, ignorance_floor })
    }

    /// Class means of the training rows, per source.
    pub fn fit(
        frame: Frame,
        sources: &[(SourceKind, &Matrix)],
        labels: &[usize],
        temperature: f64,
        ignorance_floor: f64,
    ) -> Result<Self, EvalError> {
        let k = frame.len();
        let mut prototypes = BTreeMap::new();
        for (kind, rows) in sources {
            if rows.rows() != labels.len() {
                return Err(EvalError::LengthMismatch { predictions: rows.rows(), labels: labels.len() });
            }
            let mut sums = vec![vec![0.0; rows.cols()]; k];
            let mut counts = vec![0usize; k];
            for (row, &label) in rows.row_iter().zip(labels) {
                counts[label] += 1;
                for (s, v) in sums[label].iter_mut().zip(row) {
                    *s += v;
                }
            }
            if let Some(h) = counts.iter().position(|c| *c == 0) {
                return Err(EvalError::MissingClass(frame.labels()[h].clone()));
            }
            for (s, c) in sums.iter_mut().zip(&counts) {
                for v in s.iter_mut() {
                    *v /= *c as f64;
                }
            }
            prototypes.insert(*kind, sums);
        }
        Self::new(frame, prototypes, temperature, ignorance_floor)
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn ignorance_floor(&self) -> f64 {
        self.ignorance_floor
    }

    pub fn prototypes(&self, kind: SourceKind) -> Option<&[Vec<f64>]> {
        self.prototypes.get(&kind).map(Vec::as_slice)
    }

    pub fn sources(&self) -> impl Iterator<Item = SourceKind> + '_ {
        self.prototypes.keys().copied()
    }

    /// Mass function of one normalized source row.
    pub fn build(&self, kind: SourceKind, row: &[f64]) -> Result<MassFunction, EvalError> {
        let protos = self.prototypes.get(&kind).ok_or(EvalError::MissingSource(kind))?;
        if row.len() != protos[0].len() {
            return Err(EvalError::DimensionMismatch { expected: protos[0].len(), got: row.len() });
        }
        let distances: Vec<f64> = protos
            .iter()
            .map(|p| p.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect();
        // Shifting by the smallest distance leaves the ratios unchanged and
        // keeps the largest score at exactly 1.
        let d_min = distances.iter().copied().fold(f64::INFINITY, f64::min);
        let scores: Vec<f64> = distances.iter().map(|d| (-(d - d_min) / self.temperature).exp()).collect();
        let total: f64 = scores.iter().sum();
        let keep = 1.0 - self.ignorance_floor;
        let mut entries: Vec<(FocalSet, f64)> =
            scores.iter().enumerate().map(|(h, s)| (self.frame.singleton(h), keep * s / total)).collect();
        entries.push((self.frame.full(), self.ignorance_floor));
        Ok(MassFunction::new(self.frame.clone(), entries)?)
    }

    pub fn to_json(&self) -> EvidenceBuilderJson {
        let labels = self.frame.labels();
        let prototypes = self
            .prototypes
            .iter()
            .map(|(kind, protos)| (*kind, labels.iter().cloned().zip(protos.iter().cloned()).collect()))
            .collect();
        EvidenceBuilderJson {
            frame: labels.to_vec(),
            temperature: self.temperature,
            ignorance_floor: self.ignorance_floor,
            prototypes,
        }
    }

    pub fn from_json(json: &EvidenceBuilderJson) -> Result<Self, EvalError> {
        let frame = Frame::new(json.frame.iter().cloned())?;
        let mut prototypes = BTreeMap::new();
        for (kind, by_label) in &json.prototypes {
            let mut protos = Vec::with_capacity(frame.len());
            for label in frame.labels() {
                let p = by_label
                    .get(label)
                    .ok_or_else(|| EvalError::InvalidBuilder(format!("{kind} has no prototype for `{label}`")))?;
                protos.push(p.clone());
            }
            if by_label.len() != frame.len() {
                return Err(EvalError::InvalidBuilder(format!("{kind} has prototypes for labels outside the frame")));
            }
            prototypes.insert(*kind, protos);
        }
        Self::new(frame, prototypes, json.temperature, json.ignorance_floor)
    }
}

/// Hypothesis with the largest pignistic probability.
pub fn decide(m: &MassFunction) -> usize {
    argmax(&pignistic(m)).expect("frames are nonempty")
}

/// BC-Zscore over one table's columns.
pub fn normalize_table(
    table: &SampleTable,
    params: Option<&BoxCoxParams>,
    grid: &LambdaGrid,
) -> Result<(SampleTable, BcZscore), EvalError> {
    let result = bc_zscore(&Data::Matrix(table.values().clone()), params, grid)?;
    let values = match &result.output {
        Data::Matrix(m) => m.clone(),
        _ => unreachable!("matrix input gives matrix output"),
    };
    Ok((table.with_values(values)?, result))
}

fn find_source(tables: &[SampleTable], kind: SourceKind) -> Result<SampleTable, EvalError> {
    for t in tables {
        if let Some(part) = t.source_columns(kind) {
            return Ok(part);
        }
    }
    Err(EvalError::MissingSource(kind))
}

/// Before/after statistics of one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub source: SourceKind,
    pub name: String,
    pub unit: String,
    pub before: ColumnStats,
    pub after: ColumnStats,
    pub lambda: f64,
    pub shift: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcerptRow {
    /// 1-based observation number in the aligned data.
    pub observation: usize,
    pub timestamp: String,
    pub values: Vec<f64>,
}

/// Normalized values of a few seeded-random observations, two columns per
/// source in [`EXCERPT_ORDER`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excerpt {
    pub columns: Vec<String>,
    pub rows: Vec<ExcerptRow>,
}

impl Excerpt {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("observation,timestamp");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{}", r.observation, r.timestamp));
            for v in &r.values {
                out.push(',');
                out.push_str(&crate::numfmt::format_g17(*v));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment1 {
    pub summary: Vec<ColumnSummary>,
    /// Normalized tables in [`FUSION_ORDER`].
    pub normalized: Vec<SampleTable>,
    pub params: BTreeMap<SourceKind, BoxCoxParams>,
    pub excerpt: Excerpt,
}

/// Aligns the sources, runs BC-Zscore per source and summarizes every column.
pub fn run_experiment1(tables: &[SampleTable], grid: &LambdaGrid, excerpt_seed: u64) -> Result<Experiment1, EvalError> {
    let aligned = if tables.len() > 1 { align_by_timestamp(tables)? } else { tables.first().ok_or(EvalError::Empty)?.clone() };
    let mut summary = Vec::new();
    let mut normalized = Vec::new();
    let mut params = BTreeMap::new();
    for kind in FUSION_ORDER {
        let raw = find_source(std::slice::from_ref(&aligned), kind)?;
        let (norm, fit) = normalize_table(&raw, None, grid)?;
        for (j, (meta, report)) in raw.columns().iter().zip(&fit.columns).enumerate() {
            summary.push(ColumnSummary {
                source: kind,
                name: meta.name.clone(),
                unit: meta.unit.clone(),
                before: column_stats(&raw.values().column(j))?,
                after: column_stats(&norm.values().column(j))?,
                lambda: report.lambda,
                shift: report.shift,
                degenerate: report.degenerate,
            });
        }
        params.insert(kind, fit.params);
        normalized.push(norm);
    }

    let n = aligned.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(excerpt_seed, Stream::Excerpt).shuffle(&mut order);
    let mut picked = order[..EXCERPT_ROWS.min(n)].to_vec();
    picked.sort_unstable();

    let by_kind = |kind: SourceKind| &normalized[FUSION_ORDER.iter().position(|k| *k == kind).unwrap()];
    let mut columns = Vec::new();
    for kind in EXCERPT_ORDER {
        columns.extend(by_kind(kind).columns().iter().take(2).map(|c| c.name.clone()));
    }
    let rows = picked
        .iter()
        .map(|&i| {
            let mut values = Vec::with_capacity(columns.len());
            for kind in EXCERPT_ORDER {
                values.extend(by_kind(kind).values().row(i).iter().take(2));
            }
            ExcerptRow { observation: i + 1, timestamp: format_timestamp(&aligned.timestamps()[i]), values }
        })
        .collect();
    Ok(Experiment1 { summary, normalized, params, excerpt: Excerpt { columns, rows } })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub sizes: Vec<usize>,
    pub methods: Vec<Method>,
    pub split_seed: u64,
    pub excerpt_seed: u64,
    pub train_fraction: f64,
    pub temperature: f64,
    pub ignorance_floor: f64,
    pub threshold: f64,
    pub lambda_grid: LambdaGrid,
}

impl EvalOptions {
    /// Ten evenly spaced sizes up to `n` (fewer when `n` is small).
    pub fn default_sizes(n: usize) -> Vec<usize> {
        let mut sizes: Vec<usize> = (1..=10).map(|i| i * n / 10).filter(|s| *s >= 30).collect();
        sizes.dedup();
        if sizes.last() != Some(&n) {
            sizes.push(n);
        }
        sizes
    }

    pub fn for_observations(n: usize) -> Self {
        Self {
            sizes: Self::default_sizes(n),
            methods: Method::ALL.to_vec(),
            split_seed: 7,
            excerpt_seed: 11,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            temperature: DEFAULT_TEMPERATURE,
            ignorance_floor: DEFAULT_IGNORANCE_FLOOR,
            threshold: DEFAULT_THRESHOLD,
            lambda_grid: LambdaGrid::default(),
        }
    }

    fn validate(&self, n: usize) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidOptions(m));
        if self.sizes.is_empty() || self.methods.is_empty() {
            return bad("need at least one size and one method".into());
        }
        if let Some(s) = self.sizes.iter().find(|s| **s > n || **s < 4) {
            return bad(format!("size {s} outside 4..={n}"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return bad(format!("threshold must lie in (0, 1], got {}", self.threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPoint {
    pub size: usize,
    pub method: Method,
    pub accuracy: f64,
    pub n_test: usize,
    /// Test rows whose fusion failed (classical DS with K = 0); counted wrong.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictPoint {
    pub size: usize,
    pub mean_conflict: f64,
}

/// Mean interval of the true class after each fusion step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub method: Method,
    pub step: usize,
    pub bel: f64,
    pub pl: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub hypotheses: Vec<String>,
    pub n_observations: usize,
    pub options: EvalOptions,
    /// Accuracy per method at the largest size.
    pub accuracy: BTreeMap<String, f64>,
    pub series: Vec<AccuracyPoint>,
    pub mean_conflict: Vec<ConflictPoint>,
    /// Traces at the largest size.
    pub trace: Vec<TraceRow>,
    /// Fraction of test rows (largest size) where every method predicts the same class.
    pub agreement: f64,
    pub normalization: Vec<ColumnSummary>,
    pub excerpt: Excerpt,
    /// Prototypes fitted at the largest size.
    pub prototypes: EvidenceBuilderJson,
    #[serde(skip)]
    pub predictions: Vec<(Method, Vec<Option<usize>>)>,
    #[serde(skip)]
    pub test_labels: Vec<usize>,
}

impl ExperimentResult {
    pub fn accuracy_of(&self, method: Method) -> Option<f64> {
        self.accuracy.get(method.as_str()).copied()
    }

    /// `size,method,accuracy`, one row per pair.
    pub fn accuracy_csv(&self) -> String {
        let mut out = String::from("size,method,accuracy\n");
        for p in &self.series {
            out.push_str(&format!("{},{},{}\n", p.size, p.method, crate::numfmt::format_g17(p.accuracy)));
        }
        out
    }

    /// `method,step,bel,pl,mu`, one row per method and step.
    pub fn intervals_csv(&self) -> String {
        use crate::numfmt::format_g17 as g;
        let mut out = String::from("method,step,bel,pl,mu\n");
        for t in &self.trace {
            out.push_str(&format!("{},{},{},{},{}\n", t.method, t.step, g(t.bel), g(t.pl), g(t.mu)));
        }
        out
    }
}

struct SizeRun {
    predictions: Vec<(Method, Vec<Option<usize>>)>,
    failures: Vec<usize>,
    test_labels: Vec<usize>,
    mean_conflict: f64,
    trace: Vec<TraceRow>,
    builder: EvidenceBuilder,
}

fn run_size(
    sources: &[SampleTable],
    labels: &[usize],
    frame: &Frame,
    size: usize,
    opts: &EvalOptions,
) -> Result<SizeRun, EvalError> {
    let mut normalized = Vec::with_capacity(sources.len());
    for t in sources {
        normalized.push(normalize_table(&t.head(size)?, None, &opts.lambda_grid)?.0);
    }

    let mut order: Vec<usize> = (0..size).collect();
    SeededRng::new(opts.split_seed, Stream::Split).shuffle(&mut order);
    let n_train = ((opts.train_fraction * size as f64).round() as usize).clamp(1, size - 1);
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();

    let train_labels: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    let train_rows: Vec<Matrix> = normalized.iter().map(|t| t.values().select_rows(&train)).collect();
    let fit_input: Vec<(SourceKind, &Matrix)> = FUSION_ORDER.iter().copied().zip(train_rows.iter()).collect();
    let builder = EvidenceBuilder::fit(frame.clone(), &fit_input, &train_labels, opts.temperature, opts.ignorance_floor)?;

    let mut predictions: Vec<(Method, Vec<Option<usize>>)> =
        opts.methods.iter().map(|m| (*m, Vec::with_capacity(test.len()))).collect();
    let mut failures = vec![0usize; opts.methods.len()];
    let steps = FUSION_ORDER.len() - 1;
    let mut sums = vec![vec![[0.0f64; 3]; steps]; opts.methods.len()];
    let mut counts = vec![0usize; opts.methods.len()];
    let mut conflict_sum = 0.0;

    for &i in &test {
        let masses = FUSION_ORDER
            .iter()
            .zip(&normalized)
            .map(|(kind, t)| builder.build(*kind, t.values().row(i)))
            .collect::<Result<Vec<_>, _>>()?;
        conflict_sum += conjunctive_fold(&masses)?.get(&FocalSet::EMPTY).copied().unwrap_or(0.0);
        let truth = labels[i];
        for (mi, (method, preds)) in predictions.iter_mut().enumerate() {
            match fuse(&masses, *method, opts.threshold) {
                Ok(report) => {
                    preds.push(Some(decide(&report.combined)));
                    counts[mi] += 1;
                    for (s, step) in report.steps.iter().enumerate() {
                        let iv = step.intervals[truth];
                        sums[mi][s][0] += iv.bel;
                        sums[mi][s][1] += iv.pl;
                        sums[mi][s][2] += iv.mu;
                    }
                }
                Err(FusionError::Evidence(EvidenceError::TotalConflict(_))) => {
                    preds.push(None);
                    failures[mi] += 1;
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    let mut trace = Vec::new();
    for (mi, method) in opts.methods.iter().enumerate() {
        if counts[mi] == 0 {
            continue;
        }
        let c = counts[mi] as f64;
        for (s, [bel, pl, mu]) in sums[mi].iter().enumerate() {
            trace.push(TraceRow { method: *method, step: s + 1, bel: bel / c, pl: pl / c, mu: mu / c });
        }
    }
    Ok(SizeRun {
        predictions,
        failures,
        test_labels: test.iter().map(|&i| labels[i]).collect(),
        mean_conflict: conflict_sum / test.len() as f64,
        trace,
        builder,
    })
}

/// Experiment 2 over given (raw or normalized) source tables and labels.
pub fn evaluate_tables(
    tables: &[SampleTable],
    labels: &[usize],
    frame: &Frame,
    opts: &EvalOptions,
) -> Result<ExperimentResult, EvalError> {
    let exp1 = run_experiment1(tables, &opts.lambda_grid, opts.excerpt_seed)?;
    let n = exp1.normalized[0].n_rows();
    if labels.len() != n {
        return Err(EvalError::LengthMismatch { predictions: n, labels: labels.len() });
    }
    if let Some(l) = labels.iter().find(|l| **l >= frame.len()) {
        return Err(EvalError::InvalidOptions(format!("label index {l} outside a frame of {}", frame.len())));
    }
    opts.validate(n)?;
    let aligned = if tables.len() > 1 { align_by_timestamp(tables)? } else { tables[0].clone() };
    let sources = FUSION_ORDER
        .iter()
        .map(|k| find_source(std::slice::from_ref(&aligned), *k))
        .collect::<Result<Vec<_>, _>>()?;

    let largest = *opts.sizes.iter().max().expect("validated nonempty");
    let mut series = Vec::new();
    let mut mean_conflict = Vec::new();
    let mut last: Option<SizeRun> = None;
    for &size in &opts.sizes {
        let run = run_size(&sources, labels, frame, size, opts)?;
        for ((method, preds), failures) in run.predictions.iter().zip(&run.failures) {
            let hits = preds.iter().zip(&run.test_labels).filter(|(p, l)| **p == Some(**l)).count();
            series.push(AccuracyPoint {
                size,
                method: *method,
                accuracy: hits as f64 / run.test_labels.len() as f64,
                n_test: run.test_labels.len(),
                failures: *failures,
            });
        }
        mean_conflict.push(ConflictPoint { size, mean_conflict: run.mean_conflict });
        if size == largest && last.is_none() {
            last = Some(run);
        }
    }
    let last = last.expect("largest size was run");
    let accuracy = series
        .iter()
        .filter(|p| p.size == largest)
        .map(|p| (p.method.as_str().to_string(), p.accuracy))
        .collect();
    let n_test = last.test_labels.len();
    let agreeing = (0..n_test).filter(|&i| last.predictions.iter().all(|(_, p)| p[i] == last.predictions[0].1[i])).count();
    Ok(ExperimentResult {
        hypotheses: frame.labels().to_vec(),
        n_observations: n,
        options: opts.clone(),
        accuracy,
        series,
        mean_conflict,
        trace: last.trace,
        agreement: agreeing as f64 / n_test as f64,
        normalization: exp1.summary,
        excerpt: exp1.excerpt,
        prototypes: last.builder.to_json(),
        predictions: last.predictions,
        test_labels: last.test_labels,
    })
}

/// Generates the scenario and runs both experiments on it.
pub fn run_experiment2(scenario: &ScenarioConfig, opts: &EvalOptions) -> Result<ExperimentResult, EvalError> {
    let s = generate_scenario(scenario)?;
    let frame = Frame::new(scenario.hypotheses.iter().cloned())?;
    let tables = [s.operation, s.monitoring, s.environment];
    evaluate_tables(&tables, &s.labels, &frame, opts)
}
