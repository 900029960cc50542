//! Seeded synthetic scenarios: three source tables, fault-class labels and
//! controlled evidence conflict.
//!
//! Each source has a 2-dimensional latent space. Class `c` of `k` sits at a
//! lattice point
//!
//! ```text
//! ((c − (k−1)/2)·s, (π(c) − (k−1)/2)·s),   π(c) = q·c mod k
//! ```
//!
//! with `q` coprime to `k` (the one with the widest minimum spacing, largest
//! `q` on ties) and `s` set so the closest pair is exactly 1 apart. Both
//! marginals are symmetric, so Gaussian columns carry no skew on average.
//! An observation's latent point is its class prototype plus
//! `source_noise · N(0, I)`; each column is an affine map of one latent axis,
//! through `expm1(σ·z)/σ` first for heavy-tailed columns (σ = skew_severity).

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::rng::{SeededRng, Stream};
use crate::tabular::{AttributeMeta, SampleTable, SourceKind, TableError};

pub const MIN_OBSERVATIONS: usize = 10;
pub const MIN_CLASSES: usize = 2;
pub const MAX_CLASSES: usize = 8;
/// Below this per-source noise a nearest-prototype classifier on one clean
/// source stays above 70% accuracy for every supported class count.
pub const SEPARATION_NOISE_LIMIT: f64 = 0.3;
pub const DEFAULT_INTERVAL_SECONDS: i64 = 600;

pub const DEFAULT_HYPOTHESES: [&str; MAX_CLASSES] =
    ["normal", "icing", "lightning", "windstorm", "flood", "heatwave", "earthquake", "landslide"];

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Per-source noise, in source order operation, monitoring, environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceNoise {
    pub operation: f64,
    pub monitoring: f64,
    pub environment: f64,
}

impl SourceNoise {
    pub fn uniform(noise: f64) -> Self {
        Self { operation: noise, monitoring: noise, environment: noise }
    }

    pub fn get(&self, kind: SourceKind) -> f64 {
        match kind {
            SourceKind::Operation => self.operation,
            SourceKind::Monitoring => self.monitoring,
            SourceKind::Environment => self.environment,
        }
    }
}

impl Default for SourceNoise {
    fn default() -> Self {
        Self::uniform(0.2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_observations: usize,
    pub hypotheses: Vec<String>,
    pub seed: u64,
    /// Lognormal σ of the heavy-tailed columns; 0 makes every column Gaussian.
    pub skew_severity: f64,
    /// Fraction of observations with one corrupted source.
    pub conflict_rate: f64,
    pub source_noise: SourceNoise,
    pub start: DateTime<Utc>,
    pub interval_seconds: i64,
}

impl ScenarioConfig {
    /// Defaults with the first `classes` standard fault labels.
    pub fn with_classes(n_observations: usize, classes: usize, seed: u64) -> Self {
        let hypotheses = DEFAULT_HYPOTHESES.iter().take(classes).map(|s| s.to_string()).collect();
        Self { n_observations, hypotheses, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.n_observations < MIN_OBSERVATIONS {
            return bad(format!("n_observations must be at least {MIN_OBSERVATIONS}, got {}", self.n_observations));
        }
        let k = self.hypotheses.len();
        if !(MIN_CLASSES..=MAX_CLASSES).contains(&k) {
            return bad(format!("need {MIN_CLASSES} to {MAX_CLASSES} hypotheses, got {k}"));
        }
        for (i, h) in self.hypotheses.iter().enumerate() {
            if h.is_empty() || h.contains('|') {
                return bad(format!("hypothesis label `{h}` must be nonempty without `|`"));
            }
            if self.hypotheses[..i].contains(h) {
                return bad(format!("duplicate hypothesis `{h}`"));
            }
        }
        if !(self.skew_severity.is_finite() && self.skew_severity >= 0.0) {
            return bad(format!("skew_severity must be finite and >= 0, got {}", self.skew_severity));
        }
        if !(0.0..=1.0).contains(&self.conflict_rate) {
            return bad(format!("conflict_rate must lie in [0, 1], got {}", self.conflict_rate));
        }
        for kind in SourceKind::ALL {
            let n = self.source_noise.get(kind);
            if !(n.is_finite() && n >= 0.0) {
                return bad(format!("{kind} noise must be finite and >= 0, got {n}"));
            }
        }
        if self.interval_seconds < 1 {
            return bad(format!("interval must be at least 1 s, got {}", self.interval_seconds));
        }
        Ok(())
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_observations: 1000,
            hypotheses: DEFAULT_HYPOTHESES[..3].iter().map(|s| s.to_string()).collect(),
            seed: 42,
            skew_severity: 1.0,
            conflict_rate: 0.0,
            source_noise: SourceNoise::default(),
            start: Utc.with_ymd_and_hms(2021, 6, 1, 0, 0, 0).unwrap(),
            interval_seconds: DEFAULT_INTERVAL_SECONDS,
        }
    }
}

/// One corrupted observation: `source` draws its features from `class`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corruption {
    pub source: SourceKind,
    pub class: usize,
}

/// Flags exactly `round(rate·n)` observations, chosen by a seeded shuffle.
/// For each flagged observation (in index order) one uniformly chosen source
/// gets a uniformly chosen wrong class. `rate` is clamped to [0, 1].
pub fn corrupt_source(labels: &[usize], n_classes: usize, rate: f64, seed: u64) -> Vec<Option<Corruption>> {
    let n = labels.len();
    let mut out = vec![None; n];
    let count = ((rate.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    if count == 0 || n_classes < 2 {
        return out;
    }
    let mut rng = SeededRng::new(seed, Stream::Corruption);
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut flagged = order[..count].to_vec();
    flagged.sort_unstable();
    for i in flagged {
        let source = SourceKind::ALL[rng.below(SourceKind::ALL.len())];
        let wrong = rng.below(n_classes - 1);
        let class = if wrong < labels[i] { wrong } else { wrong + 1 };
        out[i] = Some(Corruption { source, class });
    }
    out
}

/// Lattice prototypes in the unit-spacing layout described in the module docs.
pub fn prototypes(k: usize) -> Vec<[f64; 2]> {
    let gcd = |mut a: usize, mut b: usize| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    let centre = (k as f64 - 1.0) / 2.0;
    let layout = |q: usize| -> Vec<[f64; 2]> { (0..k).map(|c| [c as f64 - centre, ((q * c) % k) as f64 - centre]).collect() };
    let min_spacing = |pts: &[[f64; 2]]| {
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.min((pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]));
            }
        }
        best
    };
    let mut chosen = layout(1);
    let mut chosen_spacing = min_spacing(&chosen);
    for q in 2..k.max(2) {
        if gcd(q, k) != 1 {
            continue;
        }
        let pts = layout(q);
        let d = min_spacing(&pts);
        if d >= chosen_spacing {
            chosen = pts;
            chosen_spacing = d;
        }
    }
    if chosen_spacing.is_finite() {
        for p in &mut chosen {
            p[0] /= chosen_spacing;
            p[1] /= chosen_spacing;
        }
    }
    chosen
}

struct ColumnSpec {
    name: &'static str,
    unit: &'static str,
    base: f64,
    scale: f64,
    heavy: bool,
}

const fn col(name: &'static str, unit: &'static str, base: f64, scale: f64, heavy: bool) -> ColumnSpec {
    ColumnSpec { name, unit, base, scale, heavy }
}

fn column_specs(kind: SourceKind) -> [ColumnSpec; 2] {
    match kind {
        SourceKind::Operation => [col("Line voltage", "kV", 10.5, 0.3, false), col("Line current", "A", 180.0, 40.0, true)],
        SourceKind::Monitoring => {
            [col("Electric energy", "kWh", 500.0, 150.0, true), col("Power factor", "", 0.88, 0.025, false)]
        }
        SourceKind::Environment => [col("Temperature", "°C", 15.0, 6.0, false), col("Wind speed", "m/s", 6.0, 2.0, true)],
    }
}

/// Column layout of one source table.
pub fn source_columns(kind: SourceKind) -> Vec<AttributeMeta> {
    column_specs(kind).iter().map(|c| AttributeMeta::new(kind, c.name, c.unit)).collect()
}

fn heavy_tail(z: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        z
    } else {
        (sigma * z).exp_m1() / sigma
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub operation: SampleTable,
    pub monitoring: SampleTable,
    pub environment: SampleTable,
    /// True class index per observation.
    pub labels: Vec<usize>,
    pub corruption: Vec<Option<Corruption>>,
}

impl Scenario {
    pub fn table(&self, kind: SourceKind) -> &SampleTable {
        match kind {
            SourceKind::Operation => &self.operation,
            SourceKind::Monitoring => &self.monitoring,
            SourceKind::Environment => &self.environment,
        }
    }

    pub fn tables(&self) -> [&SampleTable; 3] {
        [&self.operation, &self.monitoring, &self.environment]
    }

    /// labels.csv: `timestamp,label,corrupted_source,corrupted_class`.
    pub fn labels_csv(&self) -> String {
        let mut out = String::from("timestamp,label,corrupted_source,corrupted_class\n");
        for (i, (t, &label)) in self.operation.timestamps().iter().zip(&self.labels).enumerate() {
            let (src, cls) = match self.corruption[i] {
                Some(c) => (c.source.as_str(), self.config.hypotheses[c.class].as_str()),
                None => ("", ""),
            };
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::tabular::format_timestamp(t),
                self.config.hypotheses[label],
                src,
                cls
            ));
        }
        out
    }
}

/// Draws labels, corruption and features from the config's seed.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario, SimError> {
    config.validate()?;
    let n = config.n_observations;
    let k = config.hypotheses.len();

    let mut label_rng = SeededRng::new(config.seed, Stream::Labels);
    let labels: Vec<usize> = (0..n).map(|_| label_rng.below(k)).collect();
    let corruption = corrupt_source(&labels, k, config.conflict_rate, config.seed);

    let protos = prototypes(k);
    let sigma = config.skew_severity;
    let mut rng = SeededRng::new(config.seed, Stream::Features);
    // Heavy columns exponentiate the latent value standardized over the class
    // mixture, so `skew_severity` is the σ of the log whatever the lattice.
    let axis_stats: Vec<(f64, f64)> = (0..2)
        .map(|axis| {
            let mean = protos.iter().map(|p| p[axis]).sum::<f64>() / k as f64;
            let var = protos.iter().map(|p| (p[axis] - mean).powi(2)).sum::<f64>() / k as f64;
            (mean, var)
        })
        .collect();
    let mut values: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(2 * n)).collect();
    for i in 0..n {
        for (s, kind) in SourceKind::ALL.into_iter().enumerate() {
            let class = match corruption[i] {
                Some(c) if c.source == kind => c.class,
                _ => labels[i],
            };
            let noise = config.source_noise.get(kind);
            for (axis, spec) in column_specs(kind).iter().enumerate() {
                let z = protos[class][axis] + noise * rng.normal();
                let shaped = if spec.heavy {
                    let (mean, var) = axis_stats[axis];
                    let spread = (var + noise * noise).sqrt().max(f64::MIN_POSITIVE);
                    heavy_tail((z - mean) / spread, sigma)
                } else {
                    z
                };
                values[s].push(spec.base + spec.scale * shaped);
            }
        }
    }

    let timestamps: Vec<DateTime<Utc>> =
        (0..n).map(|i| config.start + Duration::seconds(config.interval_seconds * i as i64)).collect();
    let mut tables = SourceKind::ALL.into_iter().zip(values).map(|(kind, data)| {
        SampleTable::new(timestamps.clone(), Matrix::from_vec(n, 2, data), source_columns(kind))
    });
    let operation = tables.next().unwrap()?;
    let monitoring = tables.next().unwrap()?;
    let environment = tables.next().unwrap()?;
    Ok(Scenario { config: config.clone(), operation, monitoring, environment, labels, corruption })
}
