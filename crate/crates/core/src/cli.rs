//! The `gridfuse` command line.
//!
//! Exit codes: 0 ok, 1 I/O failure while writing, 2 usage, 3 parse,
//! 4 degenerate data, 5 total conflict under classical DS.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::eval::{evaluate_tables, normalize_table, EvalError, EvalOptions, EvidenceBuilder, EvidenceBuilderJson, FUSION_ORDER};
use crate::evidence::{EvidenceError, Frame, MassFunction, MassFunctionJson};
use crate::fusion::{fuse, FusionError, Method, DEFAULT_THRESHOLD};
use crate::normalize::{BoxCoxParam, BoxCoxParams, ColumnReport, LambdaGrid, NormalizeError};
use crate::numfmt::to_canonical_json;
use crate::simgen::{generate_scenario, ScenarioConfig, SimError, SourceNoise, DEFAULT_INTERVAL_SECONDS};
use crate::tabular::{parse_csv, parse_timestamp, read_header_names, AttributeMeta, SampleTable, SourceKind, TableError};
use crate::FORMAT_VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;
pub const EXIT_TOTAL_CONFLICT: i32 = 5;

pub const OUT_ENV: &str = "GRIDFUSE_OUT";
const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (format 1)");

#[derive(Debug, Parser)]
#[command(name = "gridfuse", version = VERSION, about = "BC-Zscore normalization and PCA-DS evidence fusion")]
pub struct Cli {
    /// Output directory; nothing is written outside it.
    #[arg(long, global = true, env = OUT_ENV, default_value = "gridfuse-out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded three-source scenario.
    Gen(GenArgs),
    /// BC-Zscore normalize source CSVs.
    Normalize(NormalizeArgs),
    /// Fuse evidence with DS or PCA-DS.
    Fuse(FuseArgs),
    /// Run the normalization summary and the DS vs PCA-DS comparison.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Number of observations.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of fault classes (first N standard labels).
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    /// Comma-separated class labels; overrides --classes.
    #[arg(long, value_delimiter = ',')]
    pub hypotheses: Option<Vec<String>>,
    /// Lognormal sigma of the heavy-tailed columns.
    #[arg(long, default_value_t = 1.0)]
    pub skew: f64,
    #[arg(long, default_value_t = 0.0)]
    pub conflict_rate: f64,
    /// Latent noise of every source.
    #[arg(long, default_value_t = 0.2)]
    pub noise: f64,
    /// Seconds between observations.
    #[arg(long, default_value_t = DEFAULT_INTERVAL_SECONDS)]
    pub interval: i64,
    /// First timestamp (RFC 3339).
    #[arg(long, default_value = "2021-06-01T00:00:00Z")]
    pub start: String,
}

impl ScenarioArgs {
    fn config(&self, n: usize) -> Result<ScenarioConfig, CliError> {
        let start = parse_timestamp(&self.start).ok_or_else(|| CliError::usage(format!("bad --start `{}`", self.start)))?;
        let mut cfg = ScenarioConfig::with_classes(n, self.classes, self.seed);
        if let Some(h) = &self.hypotheses {
            cfg.hypotheses = h.clone();
        } else if !(crate::simgen::MIN_CLASSES..=crate::simgen::MAX_CLASSES).contains(&self.classes) {
            return Err(CliError::usage(format!("--classes must lie in 2..=8, got {}", self.classes)));
        }
        cfg.skew_severity = self.skew;
        cfg.conflict_rate = self.conflict_rate;
        cfg.source_noise = SourceNoise::uniform(self.noise);
        cfg.interval_seconds = self.interval;
        cfg.start = start;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    /// Input CSVs as `path` or `path:kind`; without a kind the file stem
    /// (operation, monitoring, environment) names the source.
    #[arg(required = true)]
    pub inputs: Vec<String>,
    /// Lambda search grid `min:max:step`.
    #[arg(long, default_value = "-5:5:0.01")]
    pub lambda_grid: LambdaGrid,
    /// Apply the lambdas and shifts of an earlier params.json instead of fitting.
    #[arg(long)]
    pub reuse_params: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Mass function JSON files, fused in the given order.
    #[arg(long = "mass")]
    pub masses: Vec<PathBuf>,
    /// prototypes.json from `eval`, used with --input and --row.
    #[arg(long, requires_all = ["input", "row"], conflicts_with = "masses")]
    pub prototypes: Option<PathBuf>,
    /// Directory holding normalized operation.csv, monitoring.csv, environment.csv.
    #[arg(long, requires = "prototypes")]
    pub input: Option<PathBuf>,
    /// 0-based row of the aligned tables.
    #[arg(long, requires = "prototypes")]
    pub row: Option<usize>,
    #[arg(long, default_value = "pca-ds")]
    pub method: Method,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Only report the interval trace of this hypothesis.
    #[arg(long)]
    pub watch: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Evaluate the CSVs in this directory instead of generating a scenario.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// labels.csv for --data (default: <data>/labels.csv).
    #[arg(long, requires = "data")]
    pub labels: Option<PathBuf>,
    /// Comma-separated observation counts.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 7)]
    pub split_seed: u64,
    #[arg(long, default_value_t = 11)]
    pub excerpt_seed: u64,
    #[arg(long, default_value_t = crate::eval::DEFAULT_TEMPERATURE)]
    pub temperature: f64,
    #[arg(long, default_value_t = crate::eval::DEFAULT_IGNORANCE_FLOOR)]
    pub floor: f64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = crate::eval::DEFAULT_TRAIN_FRACTION)]
    pub train_fraction: f64,
    #[arg(long, default_value = "-5:5:0.01")]
    pub lambda_grid: LambdaGrid,
}

/// An error with its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(EXIT_PARSE, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<TableError> for CliError {
    fn from(e: TableError) -> Self {
        Self::parse(e.to_string())
    }
}

impl From<NormalizeError> for CliError {
    fn from(e: NormalizeError) -> Self {
        let code = match e {
            NormalizeError::ParamMismatch { .. } | NormalizeError::InvalidGrid(_) => EXIT_USAGE,
            NormalizeError::NonFinite | NormalizeError::NonPositiveInput(_) => EXIT_PARSE,
            _ => EXIT_DEGENERATE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<EvidenceError> for CliError {
    fn from(e: EvidenceError) -> Self {
        let code = match e {
            EvidenceError::TotalConflict(_) => EXIT_TOTAL_CONFLICT,
            EvidenceError::InvalidMass(_) | EvidenceError::BadLabel(_) | EvidenceError::OutsideFrame(_) => EXIT_PARSE,
            _ => EXIT_USAGE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::Evidence(e) => e.into(),
            other => Self::new(EXIT_DEGENERATE, other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(m) => Self::usage(format!("invalid scenario config: {m}")),
            SimError::Table(t) => t.into(),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Table(t) => t.into(),
            EvalError::Normalize(n) => n.into(),
            EvalError::Evidence(v) => v.into(),
            EvalError::Fusion(f) => f.into(),
            EvalError::Sim(s) => s.into(),
            EvalError::MissingClass(_) => Self::new(EXIT_DEGENERATE, e.to_string()),
            EvalError::InvalidBuilder(_) => Self::parse(e.to_string()),
            _ => Self::usage(e.to_string()),
        }
    }
}

/// Provenance written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub format_version: u32,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_digest: String,
    pub config: Value,
    pub seeds: BTreeMap<String, u64>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: Value, seeds: BTreeMap<String, u64>, mut outputs: Vec<String>) -> Self {
        outputs.sort();
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            format_version: FORMAT_VERSION,
            config_digest: digest_hex(canonical(&config).as_bytes()),
            config,
            seeds,
            outputs,
        }
    }
}

pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn canonical<T: Serialize>(value: &T) -> String {
    to_canonical_json(value).expect("values serialize to JSON")
}

/// Writes via a temporary file in `dir` and a rename.
fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::new(EXIT_IO, format!("writing {}: {e}", dir.join(name).display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.persist(dir.join(name)).map_err(|e| io(e.error))?;
    Ok(())
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::new(EXIT_IO, format!("creating {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        write_atomic(&self.dir, name, contents.as_ref())?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, canonical(value))
    }

    fn finish(mut self, command: &str, config: Value, seeds: BTreeMap<String, u64>) -> Result<(), CliError> {
        let manifest = RunManifest::new(command, config, seeds, std::mem::take(&mut self.written));
        self.write("manifest.json", canonical(&manifest))
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_slice(&read_file(path)?).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}

/// Splits `path:kind`, else infers the kind from the file stem.
fn input_spec(spec: &str) -> Result<(PathBuf, SourceKind), CliError> {
    if let Some((path, kind)) = spec.rsplit_once(':') {
        if let Ok(kind) = kind.parse::<SourceKind>() {
            return Ok((PathBuf::from(path), kind));
        }
    }
    let path = PathBuf::from(spec);
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let kind = stem.parse::<SourceKind>().map_err(|_| {
        CliError::usage(format!("cannot infer the source of `{spec}`; name it operation/monitoring/environment or add `:kind`"))
    })?;
    Ok((path, kind))
}

/// Parses a source CSV whose columns all belong to `kind`.
fn read_source(bytes: &[u8], kind: SourceKind, path: &Path) -> Result<SampleTable, CliError> {
    let names = read_header_names(bytes).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    let schema: Vec<AttributeMeta> = names.iter().map(|n| AttributeMeta::new(kind, n.as_str(), "")).collect();
    let parsed = parse_csv(bytes, &schema).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    if parsed.dropped_rows > 0 {
        eprintln!("{}: dropped {} malformed rows", path.display(), parsed.dropped_rows);
    }
    Ok(parsed.table)
}

fn read_source_dir(dir: &Path, kinds: &[SourceKind]) -> Result<(Vec<SampleTable>, Vec<Value>), CliError> {
    let mut tables = Vec::new();
    let mut described = Vec::new();
    for kind in kinds {
        let path = dir.join(format!("{kind}.csv"));
        let bytes = read_file(&path)?;
        tables.push(read_source(&bytes, *kind, &path)?);
        described.push(json!({"file": format!("{kind}.csv"), "kind": kind, "sha256": digest_hex(&bytes)}));
    }
    Ok((tables, described))
}

/// Runs the CLI on `args` (first item is the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("gridfuse: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Gen(args) => cmd_gen(args, &cli.out),
        Command::Normalize(args) => cmd_normalize(args, &cli.out),
        Command::Fuse(args) => cmd_fuse(args, &cli.out),
        Command::Eval(args) => cmd_eval(args, &cli.out),
    }
}

pub fn cmd_gen(args: &GenArgs, out: &Path) -> Result<(), CliError> {
    let n = args.scenario.n.ok_or_else(|| CliError::usage("gen requires --n <observations>"))?;
    let cfg = args.scenario.config(n)?;
    let scenario = generate_scenario(&cfg)?;
    let mut outputs = Outputs::create(out)?;
    for kind in SourceKind::ALL {
        outputs.write(&format!("{kind}.csv"), scenario.table(kind).to_csv_string())?;
    }
    outputs.write("labels.csv", scenario.labels_csv())?;
    let config = serde_json::to_value(&cfg).expect("config serializes");
    outputs.finish("gen", config, BTreeMap::from([("seed".to_string(), cfg.seed)]))
}

/// One column of params.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnParams {
    pub lambda: f64,
    pub shift: f64,
    pub mean: f64,
    pub std: f64,
    pub skew_before: f64,
    pub skew_after: f64,
    pub degenerate: bool,
}

impl From<&ColumnReport> for ColumnParams {
    fn from(r: &ColumnReport) -> Self {
        Self {
            lambda: r.lambda,
            shift: r.shift,
            mean: r.mean,
            std: r.std,
            skew_before: r.skew_before,
            skew_after: r.skew_after,
            degenerate: r.degenerate,
        }
    }
}

/// params.json: source → column name → parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub format_version: u32,
    pub sources: BTreeMap<SourceKind, BTreeMap<String, ColumnParams>>,
}

fn reuse_for(params: &ParamsFile, kind: SourceKind, table: &SampleTable) -> Result<BoxCoxParams, CliError> {
    let stored = params.sources.get(&kind).ok_or_else(|| CliError::usage(format!("reused params have no {kind} source")))?;
    let names: Vec<&str> = table.columns().iter().map(|c| c.name.as_str()).collect();
    let mut stored_names: Vec<&str> = stored.keys().map(String::as_str).collect();
    let mut sorted = names.clone();
    sorted.sort_unstable();
    stored_names.sort_unstable();
    if sorted != stored_names {
        return Err(CliError::usage(format!(
            "reused {kind} params cover [{}], input has [{}]",
            stored_names.join(", "),
            names.join(", ")
        )));
    }
    let columns = names.iter().map(|n| BoxCoxParam { lambda: stored[*n].lambda, shift: stored[*n].shift }).collect();
    Ok(BoxCoxParams { columns })
}

pub fn cmd_normalize(args: &NormalizeArgs, out: &Path) -> Result<(), CliError> {
    args.lambda_grid.validate()?;
    let reuse: Option<ParamsFile> = args.reuse_params.as_deref().map(read_json).transpose()?;
    let mut jobs = Vec::new();
    let mut seen_names = Vec::new();
    for spec in &args.inputs {
        let (path, kind) = input_spec(spec)?;
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| CliError::usage(format!("bad input path `{spec}`")))?
            .to_string();
        if seen_names.contains(&name) {
            return Err(CliError::usage(format!("two inputs share the file name `{name}`")));
        }
        if name == "params.json" || name == "manifest.json" {
            return Err(CliError::usage(format!("input name `{name}` collides with an output")));
        }
        seen_names.push(name.clone());
        let bytes = read_file(&path)?;
        let table = read_source(&bytes, kind, &path)?;
        jobs.push((name, kind, table, digest_hex(&bytes)));
    }

    let mut results = Vec::new();
    let mut sources: BTreeMap<SourceKind, BTreeMap<String, ColumnParams>> = BTreeMap::new();
    for (name, kind, table, _) in &jobs {
        let stored = reuse.as_ref().map(|p| reuse_for(p, *kind, table)).transpose()?;
        let (norm, fit) = normalize_table(table, stored.as_ref(), &args.lambda_grid)?;
        if fit.columns.iter().all(|c| c.degenerate) {
            return Err(CliError::new(EXIT_DEGENERATE, format!("{name}: every column is constant")));
        }
        let entry = sources.entry(*kind).or_default();
        for (meta, report) in table.columns().iter().zip(&fit.columns) {
            if entry.insert(meta.name.clone(), report.into()).is_some() {
                return Err(CliError::usage(format!("column `{}` of {kind} appears in two inputs", meta.name)));
            }
        }
        results.push((name.clone(), norm));
    }

    let mut outputs = Outputs::create(out)?;
    for (name, table) in &results {
        outputs.write(name, table.to_csv_string())?;
    }
    outputs.json("params.json", &ParamsFile { format_version: FORMAT_VERSION, sources })?;
    let inputs: Vec<Value> =
        jobs.iter().map(|(name, kind, _, digest)| json!({"file": name, "kind": kind, "sha256": digest})).collect();
    let reused = args.reuse_params.as_deref().map(read_file).transpose()?.map(|b| digest_hex(&b));
    let config = json!({"inputs": inputs, "lambda_grid": args.lambda_grid, "reuse_params_sha256": reused});
    outputs.finish("normalize", config, BTreeMap::new())
}

pub fn cmd_fuse(args: &FuseArgs, out: &Path) -> Result<(), CliError> {
    if !(args.threshold > 0.0 && args.threshold <= 1.0) {
        return Err(CliError::usage(format!("--threshold must lie in (0, 1], got {}", args.threshold)));
    }
    let (masses, inputs) = if let Some(proto_path) = &args.prototypes {
        let builder = EvidenceBuilder::from_json(&read_json::<EvidenceBuilderJson>(proto_path)?)?;
        let dir = args.input.as_deref().expect("clap requires --input");
        let row = args.row.expect("clap requires --row");
        let kinds: Vec<SourceKind> = FUSION_ORDER.iter().copied().filter(|k| builder.prototypes(*k).is_some()).collect();
        let (tables, described) = read_source_dir(dir, &kinds)?;
        let aligned = if tables.len() > 1 { crate::tabular::align_by_timestamp(&tables)? } else { tables[0].clone() };
        if row >= aligned.n_rows() {
            return Err(CliError::usage(format!("--row {row} outside {} aligned rows", aligned.n_rows())));
        }
        let mut masses = Vec::new();
        for kind in &kinds {
            let part = aligned.source_columns(*kind).expect("every kind was read");
            masses.push(builder.build(*kind, part.values().row(row))?);
        }
        let proto_digest = digest_hex(&read_file(proto_path)?);
        (masses, json!({"prototypes_sha256": proto_digest, "tables": described, "row": row}))
    } else {
        if args.masses.len() < 2 {
            return Err(CliError::usage("fuse needs at least two --mass files (or --prototypes/--input/--row)"));
        }
        let mut masses = Vec::new();
        let mut described = Vec::new();
        for path in &args.masses {
            let bytes = read_file(path)?;
            let json: MassFunctionJson =
                serde_json::from_slice(&bytes).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
            masses.push(MassFunction::from_json(&json).map_err(|e| {
                let mut err = CliError::from(e);
                err.message = format!("{}: {}", path.display(), err.message);
                err
            })?);
            described.push(json!({"sha256": digest_hex(&bytes)}));
        }
        (masses, json!({"masses": described}))
    };
    let frame: &Frame = masses[0].frame();
    let watch = match &args.watch {
        Some(label) => Some(
            frame
                .index_of(label)
                .map(|i| frame.singleton(i))
                .ok_or_else(|| CliError::usage(format!("--watch `{label}` is not in the frame")))?,
        ),
        None => None,
    };
    let report = fuse(&masses, args.method, args.threshold)?;
    let mut outputs = Outputs::create(out)?;
    outputs.json("fusion.json", &report.to_json(watch))?;
    let config = json!({
        "inputs": inputs,
        "method": args.method,
        "threshold": args.threshold,
        "watch": args.watch,
    });
    outputs.finish("fuse", config, BTreeMap::new())
}

/// `timestamp,label,…` rows keyed by timestamp.
fn read_labels(path: &Path) -> Result<Vec<(DateTime<Utc>, String)>, CliError> {
    let bytes = read_file(path)?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(bytes.as_slice());
    let perr = |m: String| CliError::parse(format!("{}: {m}", path.display()));
    let header = rdr.headers().map_err(|e| perr(e.to_string()))?.clone();
    if header.get(0) != Some("timestamp") || header.get(1) != Some("label") {
        return Err(perr("expected a `timestamp,label` header".into()));
    }
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| perr(e.to_string()))?;
        let ts = record.get(0).and_then(parse_timestamp).ok_or_else(|| perr(format!("bad timestamp in row {}", i + 1)))?;
        let label = record.get(1).filter(|l| !l.is_empty()).ok_or_else(|| perr(format!("missing label in row {}", i + 1)))?;
        out.push((ts, label.to_string()));
    }
    Ok(out)
}

/// Frame order: the generator manifest beside the labels if there is one,
/// else first appearance.
fn labels_frame(labels_path: &Path, labels: &[(DateTime<Utc>, String)]) -> Vec<String> {
    let manifest = labels_path.with_file_name("manifest.json");
    if let Ok(bytes) = fs::read(&manifest) {
        if let Ok(m) = serde_json::from_slice::<RunManifest>(&bytes) {
            if let Some(h) = m.config.get("hypotheses").and_then(|h| serde_json::from_value::<Vec<String>>(h.clone()).ok()) {
                return h;
            }
        }
    }
    let mut order: Vec<String> = Vec::new();
    for (_, l) in labels {
        if !order.contains(l) {
            order.push(l.clone());
        }
    }
    order
}

pub fn cmd_eval(args: &EvalArgs, out: &Path) -> Result<(), CliError> {
    let mut opts = EvalOptions::for_observations(1);
    opts.methods = Method::ALL.to_vec();
    opts.split_seed = args.split_seed;
    opts.excerpt_seed = args.excerpt_seed;
    opts.temperature = args.temperature;
    opts.ignorance_floor = args.floor;
    opts.threshold = args.threshold;
    opts.train_fraction = args.train_fraction;
    opts.lambda_grid = args.lambda_grid;
    opts.lambda_grid.validate()?;
    if !(args.temperature.is_finite() && args.temperature > 0.0) || !(0.0..1.0).contains(&args.floor) {
        return Err(CliError::usage("--temperature must be > 0 and --floor in [0, 1)"));
    }

    let (result, config, seeds) = if let Some(dir) = &args.data {
        let (tables, described) = read_source_dir(dir, &SourceKind::ALL)?;
        let labels_path = args.labels.clone().unwrap_or_else(|| dir.join("labels.csv"));
        let labels = read_labels(&labels_path)?;
        let frame = Frame::new(args.scenario.hypotheses.clone().unwrap_or_else(|| labels_frame(&labels_path, &labels)))?;
        let by_time: BTreeMap<DateTime<Utc>, &str> = labels.iter().map(|(t, l)| (*t, l.as_str())).collect();
        let aligned = crate::tabular::align_by_timestamp(&tables)?;
        let mut indices = Vec::with_capacity(aligned.n_rows());
        for t in aligned.timestamps() {
            let label = by_time
                .get(t)
                .ok_or_else(|| CliError::parse(format!("no label for {}", crate::tabular::format_timestamp(t))))?;
            let idx = frame.index_of(label).ok_or_else(|| CliError::usage(format!("label `{label}` is not a hypothesis")))?;
            indices.push(idx);
        }
        let n = indices.len();
        opts.sizes = args.sizes.clone().unwrap_or_else(|| EvalOptions::default_sizes(n));
        let result = evaluate_tables(&tables, &indices, &frame, &opts)?;
        let label_digest = digest_hex(&read_file(&labels_path)?);
        let config = json!({"data": described, "labels_sha256": label_digest, "hypotheses": frame.labels(), "options": opts});
        (result, config, BTreeMap::new())
    } else {
        let n = args.scenario.n.ok_or_else(|| CliError::usage("eval requires --n <observations> or --data <dir>"))?;
        let cfg = args.scenario.config(n)?;
        opts.sizes = args.sizes.clone().unwrap_or_else(|| EvalOptions::default_sizes(n));
        let result = crate::eval::run_experiment2(&cfg, &opts)?;
        let config = json!({"scenario": cfg, "options": opts});
        (result, config, BTreeMap::from([("seed".to_string(), cfg.seed)]))
    };

    let mut seeds = seeds;
    seeds.insert("split_seed".into(), args.split_seed);
    seeds.insert("excerpt_seed".into(), args.excerpt_seed);
    let mut outputs = Outputs::create(out)?;
    outputs.json("result.json", &result)?;
    outputs.write("intervals.csv", result.intervals_csv())?;
    outputs.write("accuracy.csv", result.accuracy_csv())?;
    outputs.write("excerpt.csv", result.excerpt.to_csv_string())?;
    outputs.json("prototypes.json", &result.prototypes)?;
    outputs.finish("eval", config, seeds)
}
