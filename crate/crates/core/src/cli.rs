//! `ptfens` command-line interface.
//!
//! Every option can also be given in a `key = value` config file passed with
//! `--config`; keys are the long flag names with `-` or `_`. Flags override the
//! file, the file overrides built-in defaults. Each command writes
//! `manifest_<command>.txt` into the output directory.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error, 3 internal error.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::dataset::{
    ingest, qa_filter, write_removal_log, write_samples, DatasetError, ReasonCode, Schema, SoilSample,
    StratificationScheme, StratumKey,
};
use crate::ensemble::{
    calibrate, calibrate_stratified, load_model, model_rmse, predict_with_model, read_replica_table,
    save_stratified_model, write_calibration_table, write_replica_table, write_weight_file, write_weight_summary,
    EnsembleError, EnsembleModel, GaConfig, PredictionMatrix, StratifiedOptions, StratumOutcome, WeightFileMeta,
    DEFAULT_MIN_STRATUM_POINTS,
};
use crate::mapping::{apply_ensemble_map, read_grid, write_grid, MappingError, SoilLayerStack};
use crate::metrics::{ensemble_n_params, write_report, FitSummary, MetricsError, ReportRow, SelectionContext};
use crate::ptf::{Predictor, PredictorRecord, PtfError, PtfGroup, PtfId, PtfLibrary, UsdaClass};

#[derive(Debug, Parser)]
#[command(name = "ptfens", version, about = "Pedotransfer-function ensembles for soil water retention")]
pub struct Cli {
    /// key = value file with default option values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all random streams
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read a sample file, apply quality control, write the sample store
    Ingest(IngestArgs),
    /// Score individual PTFs (and optionally an ensemble) on a sample store
    Evaluate(EvaluateArgs),
    /// Calibrate ensemble weights with bootstrap replicas
    Calibrate(CalibrateArgs),
    /// Predict water content for a table of predictors
    Predict(PredictArgs),
    /// Produce mean and CV grids from predictor grids
    Map(MapArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Delimited sample file
    #[arg(long)]
    input: Option<PathBuf>,
    /// Column mapping file
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MemberArgs {
    /// Comma-separated PTF names
    #[arg(long)]
    members: Option<String>,
    /// A, B, C, D, all, or available (default)
    #[arg(long)]
    group: Option<String>,
    /// Directory with Rosetta network files
    #[arg(long)]
    ann_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Sample store written by `ingest`
    #[arg(long)]
    samples: Option<PathBuf>,
    #[command(flatten)]
    members: MemberArgs,
    /// Also score this ensemble (weight file or stratified model directory)
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GaArgs {
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    stall_generations: Option<usize>,
    #[arg(long)]
    tournament_size: Option<usize>,
    #[arg(long)]
    crossover_prob: Option<f64>,
    #[arg(long)]
    blend_alpha: Option<f64>,
    #[arg(long)]
    mutation_prob: Option<f64>,
    #[arg(long)]
    mutation_sigma: Option<f64>,
    #[arg(long)]
    elitism: Option<usize>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    samples: Option<PathBuf>,
    #[command(flatten)]
    members: MemberArgs,
    /// global, texture, oc, order, temperature or pressure_head
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated organic carbon bin edges (%)
    #[arg(long)]
    oc_edges: Option<String>,
    /// Bootstrap replica count
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    min_stratum_points: Option<usize>,
    #[command(flatten)]
    ga: GaArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Weight file or stratified model directory
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Predictor table (sand, silt, clay, bulk_density, organic_carbon, texture_class, ...)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma-separated suctions in cm
    #[arg(long)]
    psi: Option<String>,
    #[arg(long)]
    ann_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MapArgs {
    /// Replica weight table written by `calibrate`
    #[arg(long)]
    replicas: Option<PathBuf>,
    #[arg(long)]
    sand: Option<PathBuf>,
    #[arg(long)]
    silt: Option<PathBuf>,
    #[arg(long)]
    clay: Option<PathBuf>,
    #[arg(long)]
    bulk_density: Option<PathBuf>,
    #[arg(long)]
    organic_carbon: Option<PathBuf>,
    /// Integer stratum codes for order or temperature models
    #[arg(long)]
    stratum_raster: Option<PathBuf>,
    #[arg(long)]
    ann_dir: Option<PathBuf>,
}

const CONFIG_KEYS: &[&str] = &[
    "seed",
    "out",
    "threads",
    "input",
    "schema",
    "samples",
    "members",
    "group",
    "ann_dir",
    "weights",
    "scheme",
    "oc_edges",
    "replicas",
    "min_stratum_points",
    "population",
    "generations",
    "stall_generations",
    "tournament_size",
    "crossover_prob",
    "blend_alpha",
    "mutation_prob",
    "mutation_sigma",
    "elitism",
    "psi",
    "sand",
    "silt",
    "clay",
    "bulk_density",
    "organic_carbon",
    "stratum_raster",
];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Data(m) => write!(f, "data: {m}"),
            CliError::Internal(m) => write!(f, "internal: {m}"),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::Config(_) => CliError::Usage(e.to_string()),
            EnsembleError::Dataset(d) => d.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<MappingError> for CliError {
    fn from(e: MappingError) -> Self {
        match e {
            MappingError::Ensemble(e) => e.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PtfError> for CliError {
    fn from(e: PtfError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn io_error(path: &Path, e: impl Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

/// Resolves option values (flag, then config file, then default) and
/// remembers what was used for the manifest.
struct Settings {
    file: BTreeMap<String, String>,
    used: RefCell<BTreeMap<String, String>>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
                let k = k.trim().replace('-', "_");
                if !CONFIG_KEYS.contains(&k.as_str()) {
                    return Err(CliError::Usage(format!("{}:{}: unknown key '{k}'", path.display(), i + 1)));
                }
                file.insert(k, v.trim().to_string());
            }
        }
        Ok(Self { file, used: RefCell::new(BTreeMap::new()) })
    }

    fn get<T: FromStr + Display + Clone>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        let v = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(s) => Some(
                    s.parse::<T>()
                        .map_err(|_| CliError::Usage(format!("config value for '{key}' is invalid: '{s}'")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &v {
            self.used.borrow_mut().insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    fn or<T: FromStr + Display + Clone>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        let v = self.get(key, flag)?.unwrap_or(default);
        self.used.borrow_mut().insert(key.to_string(), v.to_string());
        Ok(v)
    }

    fn path(&self, key: &str, flag: Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
        let s = self.get(key, flag.map(|p| p.display().to_string()))?;
        Ok(s.map(PathBuf::from))
    }

    fn required_path(&self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        self.path(key, flag)?.ok_or_else(|| CliError::Usage(format!("--{} is required", key.replace('_', "-"))))
    }
}

/// Runs the CLI with process arguments and returns the exit code.
pub fn main() -> i32 {
    run(std::env::args_os())
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ptfens: {e}");
            e.exit_code()
        }
    }
}

struct Context {
    settings: Settings,
    seed: u64,
    out: PathBuf,
}

impl Context {
    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.out.join(name);
        File::create(&path).map(BufWriter::new).map_err(|e| io_error(&path, e))
    }

    fn write_manifest(&self, command: &str, lib: Option<&PtfLibrary>) -> Result<(), CliError> {
        let mut m = self.create(&format!("manifest_{command}.txt"))?;
        let mut lines = vec![
            format!("command={command}"),
            format!("ptfens_version={}", env!("CARGO_PKG_VERSION")),
            format!("seed={}", self.seed),
        ];
        for (k, v) in self.settings.used.borrow().iter() {
            lines.push(format!("config.{k}={v}"));
        }
        if let Some(lib) = lib {
            for (id, v) in lib.versions() {
                lines.push(format!("coefficients.{id}={v}"));
            }
        }
        for l in lines {
            writeln!(m, "{l}").map_err(|e| io_error(&self.out, e))?;
        }
        m.flush().map_err(|e| io_error(&self.out, e))
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let settings = Settings::load(cli.config.as_deref())?;
    let seed = settings.or("seed", cli.seed, 0)?;
    let out = PathBuf::from(settings.or("out", cli.out.map(|p| p.display().to_string()), ".".to_string())?);
    if let Some(n) = settings.get("threads", cli.threads)? {
        set_threads(n)?;
    }
    std::fs::create_dir_all(&out).map_err(|e| io_error(&out, e))?;
    let ctx = Context { settings, seed, out };
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Calibrate(a) => cmd_calibrate(&ctx, a),
        Command::Predict(a) => cmd_predict(&ctx, a),
        Command::Map(a) => cmd_map(&ctx, a),
    }
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--threads must be >= 1".into()));
    }
    // a second call in the same process (tests) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: usize) -> Result<(), CliError> {
    Ok(())
}

fn cmd_ingest(ctx: &Context, a: IngestArgs) -> Result<(), CliError> {
    let s = &ctx.settings;
    let input = s.required_path("input", a.input)?;
    let schema_path = s.required_path("schema", a.schema)?;
    let schema = Schema::load(&schema_path)?;
    let (samples, mut log) = ingest(&input, &schema)?;
    let read = samples.len() + log.len();
    let qa = qa_filter(samples);
    log.extend(qa.log);

    write_samples(ctx.create("samples.csv")?, &qa.kept).map_err(|e| io_error(&ctx.out, e))?;
    write_removal_log(ctx.create("removed.csv")?, &log).map_err(|e| io_error(&ctx.out, e))?;

    let sample_level = |r: ReasonCode| {
        !matches!(r, ReasonCode::ThetaGtOne | ReasonCode::ThetaNonPositive | ReasonCode::ThetaGtFcWpMax)
    };
    let removed = log.iter().filter(|e| sample_level(e.reason)).count();
    let dropped = log.len() - removed;
    let mut by_reason: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &log {
        *by_reason.entry(e.reason.code()).or_default() += 1;
    }
    let mut summary = format!("rows={read} kept={} removed={removed} dropped_observations={dropped}\n", qa.kept.len());
    for (code, n) in by_reason {
        summary.push_str(&format!("{code}={n}\n"));
    }
    print!("{summary}");
    let mut f = ctx.create("ingest_summary.txt")?;
    f.write_all(summary.as_bytes()).map_err(|e| io_error(&ctx.out, e))?;
    ctx.write_manifest("ingest", None)
}

fn library(s: &Settings, ann_dir: Option<PathBuf>) -> Result<PtfLibrary, CliError> {
    let mut lib = PtfLibrary::builtin().map_err(|e| CliError::Internal(e.to_string()))?;
    if let Some(dir) = s.path("ann_dir", ann_dir)? {
        lib.load_ann_dir(&dir)?;
    }
    Ok(lib)
}

fn members(s: &Settings, a: &MemberArgs, lib: &PtfLibrary) -> Result<Vec<PtfId>, CliError> {
    let list = s.get("members", a.members.clone())?;
    let group = s.get("group", a.group.clone())?;
    let ids = match (list, group) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --members or --group".into())),
        (Some(l), None) => l
            .split(',')
            .map(|m| m.trim().parse::<PtfId>().map_err(|e| CliError::Usage(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?,
        (None, g) => match g.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None | Some("available") => lib.available(),
            Some("all") => PtfId::ALL.to_vec(),
            Some(g) => g.parse::<PtfGroup>().map_err(|e| CliError::Usage(e.to_string()))?.members(),
        },
    };
    if ids.is_empty() {
        return Err(CliError::Usage("member selection is empty".into()));
    }
    s.used.borrow_mut().insert("resolved_members".into(), ids.iter().map(|id| id.name()).collect::<Vec<_>>().join(","));
    Ok(ids)
}

fn load_samples(path: &Path) -> Result<Vec<SoilSample>, CliError> {
    let (samples, log) = ingest(path, &Schema::canonical())?;
    if let Some(e) = log.first() {
        return Err(CliError::Data(format!(
            "{}: not a clean sample store ({} rejected rows, first: {} {} {})",
            path.display(),
            log.len(),
            e.sample_id,
            e.reason.code(),
            e.detail
        )));
    }
    if samples.is_empty() {
        return Err(CliError::Data(format!("{}: no samples", path.display())));
    }
    Ok(samples)
}

fn cmd_evaluate(ctx: &Context, a: EvaluateArgs) -> Result<(), CliError> {
    let s = &ctx.settings;
    let lib = library(s, a.members.ann_dir.clone())?;
    let ids = members(s, &a.members, &lib)?;
    let samples = load_samples(&s.required_path("samples", a.samples)?)?;
    let mut fits = Vec::new();
    let mut skipped = Vec::new();
    for id in ids {
        match PredictionMatrix::build(&lib, &[id], &samples) {
            Ok(m) => fits.push((id.to_string(), FitSummary::from_residuals(&m.member_column(0), m.observed(), 1)?)),
            Err(e) => skipped.push((id, e.to_string())),
        }
    }
    if fits.is_empty() {
        return Err(CliError::Data("no selected member can be evaluated on these samples".into()));
    }
    let n_points = fits[0].1.n_points;
    let js: Vec<f64> = fits.iter().map(|f| f.1.j).collect();
    let sel = SelectionContext::new(&js, n_points)?;
    if let Some(path) = s.path("weights", a.weights)? {
        let model = load_model(&path)?;
        let matrix = PredictionMatrix::build(&lib, model.members(), &samples)?;
        let rmse = model_rmse(&matrix, &samples, &model)?;
        let strata = match &model {
            EnsembleModel::Global(_) => 1,
            EnsembleModel::Stratified(m) => m.scheme.keys().len(),
        };
        let n_k = ensemble_n_params(model.members().len(), strata);
        fits.push(("ensemble".into(), FitSummary::from_rmse(rmse, matrix.n_points(), n_k)?));
    }
    let rows = fits.into_iter().map(|(name, f)| ReportRow::new(name, f, &sel)).collect::<Result<Vec<_>, _>>()?;
    write_report(ctx.create("evaluation.csv")?, &rows).map_err(|e| io_error(&ctx.out, e))?;
    println!("J*={} sigma_hat2={} n_points={n_points}", sel.j_star, sel.sigma_hat2);
    for r in &rows {
        println!("{:<12} rmse={:.4} aic={:.2} aicc={:.2}", r.model, r.fit.rmse, r.aic, r.aicc);
    }
    let mut f = ctx.create("not_evaluable.csv")?;
    writeln!(f, "ptf_id,reason").map_err(|e| io_error(&ctx.out, e))?;
    for (id, why) in &skipped {
        println!("{id:<12} not evaluable: {why}");
        writeln!(f, "{id},\"{}\"", why.replace('"', "'")).map_err(|e| io_error(&ctx.out, e))?;
    }
    f.flush().map_err(|e| io_error(&ctx.out, e))?;
    ctx.write_manifest("evaluate", Some(&lib))
}

fn ga_config(s: &Settings, a: &GaArgs) -> Result<GaConfig, CliError> {
    let d = GaConfig::default();
    let cfg = GaConfig {
        population: s.or("population", a.population, d.population)?,
        max_generations: s.or("generations", a.generations, d.max_generations)?,
        stall_generations: s.or("stall_generations", a.stall_generations, d.stall_generations)?,
        tournament_size: s.or("tournament_size", a.tournament_size, d.tournament_size)?,
        crossover_prob: s.or("crossover_prob", a.crossover_prob, d.crossover_prob)?,
        blend_alpha: s.or("blend_alpha", a.blend_alpha, d.blend_alpha)?,
        mutation_prob: s.or("mutation_prob", a.mutation_prob, d.mutation_prob)?,
        mutation_sigma: s.or("mutation_sigma", a.mutation_sigma, d.mutation_sigma)?,
        elitism: s.or("elitism", a.elitism, d.elitism)?,
        seed: 0,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_list(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("--{key}: bad number '{}'", x.trim()))))
        .collect()
}

fn cmd_calibrate(ctx: &Context, a: CalibrateArgs) -> Result<(), CliError> {
    let s = &ctx.settings;
    let lib = library(s, a.members.ann_dir.clone())?;
    let ids = members(s, &a.members, &lib)?;
    let samples = load_samples(&s.required_path("samples", a.samples)?)?;
    let mut scheme: StratificationScheme = s.or("scheme", a.scheme, "global".to_string())?.parse()?;
    if let Some(edges) = s.get("oc_edges", a.oc_edges)? {
        match &mut scheme {
            StratificationScheme::OrganicCarbon { edges: e } => {
                *e = parse_list("oc-edges", &edges)?;
                if e.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(CliError::Usage("--oc-edges must be strictly increasing".into()));
                }
            }
            _ => return Err(CliError::Usage("--oc-edges only applies to the oc scheme".into())),
        }
    }
    let n_replicas = s.or("replicas", a.replicas, 100)?;
    if n_replicas == 0 {
        return Err(CliError::Usage("--replicas must be >= 1".into()));
    }
    let ga = ga_config(s, &a.ga)?;
    let min_points = s.or("min_stratum_points", a.min_stratum_points, DEFAULT_MIN_STRATUM_POINTS)?;
    let seed = ctx.seed;
    let write_err = |e: std::io::Error| io_error(&ctx.out, e);

    let global = if scheme == StratificationScheme::Global {
        let result = calibrate(&lib, &ids, &samples, n_replicas, &ga, seed)?;
        let meta = WeightFileMeta {
            scheme: Some("global".into()),
            stratum: None,
            replicas: Some(n_replicas),
            seed: Some(seed),
            oc_edges: None,
        };
        write_weight_file(ctx.create("weights.csv")?, &result.mean_weights, &meta).map_err(write_err)?;
        let models: Vec<_> = result.replicas.iter().map(|r| EnsembleModel::Global(r.weights.clone())).collect();
        write_replica_table(ctx.create("replica_weights.csv")?, &scheme, seed, &models).map_err(write_err)?;
        result
    } else {
        let opts = StratifiedOptions { min_stratum_points: min_points, n_replicas, ga: ga.clone(), seed };
        let cal = calibrate_stratified(&lib, &ids, &samples, &scheme, &opts)?;
        let dir = ctx.out.join("model");
        let files = save_stratified_model(&cal.model, &dir, n_replicas, seed)?;
        let models: Vec<_> = cal.replica_models().into_iter().map(EnsembleModel::Stratified).collect();
        write_replica_table(ctx.create("replica_weights.csv")?, &scheme, seed, &models).map_err(write_err)?;
        let mut f = ctx.create("strata.csv")?;
        writeln!(f, "stratum,outcome,points,mean_cal_rmse,mean_val_rmse").map_err(write_err)?;
        for (k, o) in &cal.outcomes {
            let (outcome, rmse) = match o {
                StratumOutcome::Calibrated(r) => ("calibrated", rmse_means(r)),
                StratumOutcome::WorseThanGlobal(r) => ("fallback_worse_than_global", rmse_means(r)),
                StratumOutcome::TooFewPoints(_) => ("fallback_too_few_points", ",".to_string()),
            };
            writeln!(f, "{k},{outcome},{},{rmse}", cal.points[k]).map_err(write_err)?;
        }
        f.flush().map_err(write_err)?;
        let model = EnsembleModel::Stratified(cal.model.clone());
        let matrix = PredictionMatrix::build(&lib, &ids, &samples)?;
        let pooled = model_rmse(&matrix, &samples, &model)?;
        let global_rmse = model_rmse(&matrix, &samples, &EnsembleModel::Global(cal.global.mean_weights.clone()))?;
        println!(
            "scheme={} strata_with_own_weights={} weight_files={} unassigned_samples={}",
            scheme.name(),
            cal.model.strata.len(),
            files.len(),
            cal.unassigned
        );
        println!("pooled_rmse stratified={pooled:.6} global={global_rmse:.6}");
        cal.global
    };
    write_calibration_table(ctx.create("calibration_replicas.csv")?, &global).map_err(|e| io_error(&ctx.out, e))?;
    write_weight_summary(ctx.create("weights_summary.csv")?, &global).map_err(|e| io_error(&ctx.out, e))?;
    let n = global.replicas.len() as f64;
    let cal_rmse = global.replicas.iter().map(|r| r.cal_rmse).sum::<f64>() / n;
    let vals: Vec<f64> = global.replicas.iter().filter_map(|r| r.val_rmse).collect();
    println!(
        "replicas={n_replicas} mean_cal_rmse={cal_rmse:.6} mean_val_rmse={:.6}",
        vals.iter().sum::<f64>() / vals.len().max(1) as f64
    );
    for ((id, w), sd) in global.members().iter().zip(global.mean_weights.weights()).zip(&global.weight_std) {
        println!("{id:<12} {w:.4} +/- {sd:.4}");
    }
    ctx.write_manifest("calibrate", Some(&lib))
}

fn rmse_means(r: &crate::ensemble::CalibrationResult) -> String {
    let n = r.replicas.len() as f64;
    let cal = r.replicas.iter().map(|x| x.cal_rmse).sum::<f64>() / n;
    let vals: Vec<f64> = r.replicas.iter().filter_map(|x| x.val_rmse).collect();
    let val = if vals.is_empty() { String::new() } else { (vals.iter().sum::<f64>() / vals.len() as f64).to_string() };
    format!("{cal},{val}")
}

fn cmd_predict(ctx: &Context, a: PredictArgs) -> Result<(), CliError> {
    let s = &ctx.settings;
    let lib = library(s, a.ann_dir)?;
    let model = load_model(&s.required_path("weights", a.weights)?)?;
    let input = s.required_path("input", a.input)?;
    let psis = parse_list("psi", &s.or("psi", a.psi, "0,330,15000".to_string())?)?;
    if let Some(p) = psis.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(CliError::Usage(format!("--psi: {p} is not a valid suction")));
    }
    let mut reader =
        csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(&input).map_err(|e| io_error(&input, e))?;
    let header = reader.headers().map_err(|e| io_error(&input, e))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    for id in model.members() {
        for p in crate::ptf::required_inputs(*id) {
            let present = match p {
                Predictor::TextureClass => {
                    col("texture_class").is_some() || ["sand", "silt", "clay"].iter().all(|c| col(c).is_some())
                }
                _ => col(p.name()).is_some(),
            };
            if !present {
                return Err(CliError::Data(format!(
                    "{}: column '{}' required by {id} is missing",
                    input.display(),
                    p.name()
                )));
            }
        }
    }
    let stratified = matches!(model, EnsembleModel::Stratified(_));
    let mut out = ctx.create("predictions.csv")?;
    let write_err = |e: std::io::Error| io_error(&ctx.out, e);
    let mut head = vec!["id".to_string()];
    head.extend(psis.iter().map(|p| format!("theta_{p}")));
    if stratified {
        head.push("fallback".into());
    }
    writeln!(out, "{}", head.join(",")).map_err(write_err)?;
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| io_error(&input, e))?;
        let line = row + 2;
        let cell = |name: &str| col(name).and_then(|i| rec.get(i)).filter(|v| !v.is_empty());
        let num = |name: &str| -> Result<Option<f64>, CliError> {
            cell(name)
                .map(|v| v.parse::<f64>().map_err(|_| CliError::Data(format!("line {line}: bad {name} '{v}'"))))
                .transpose()
        };
        let mut p = PredictorRecord::default();
        if let (Some(sa), Some(si), Some(cl)) = (num("sand")?, num("silt")?, num("clay")?) {
            p = PredictorRecord::from_texture(sa, si, cl);
        }
        p.bulk_density = num("bulk_density")?;
        p.organic_carbon = num("organic_carbon")?;
        if let Some(c) = cell("texture_class") {
            p.texture_class = Some(c.parse::<UsdaClass>().map_err(|e| CliError::Data(format!("line {line}: {e}")))?);
        }
        if let Some(t) = cell("topsoil") {
            p.topsoil = matches!(t.to_ascii_lowercase().as_str(), "1" | "true" | "topsoil" | "yes");
        }
        p.validate().map_err(|e| CliError::Data(format!("line {line}: {e}")))?;
        let hint = cell("stratum").map(str::parse::<StratumKey>).transpose()?;
        let id = cell("sample_id").or(cell("id")).map(str::to_string).unwrap_or_else(|| (row + 1).to_string());
        let mut fields = vec![id];
        let mut fell_back = false;
        for &psi in &psis {
            let pred = predict_with_model(&lib, &model, &p, hint, psi)
                .map_err(|e| CliError::Data(format!("line {line}: {e}")))?;
            fell_back |= pred.used_fallback;
            fields.push(pred.theta.to_string());
        }
        if stratified {
            fields.push(u8::from(fell_back).to_string());
        }
        writeln!(out, "{}", fields.join(",")).map_err(write_err)?;
    }
    out.flush().map_err(write_err)?;
    ctx.write_manifest("predict", Some(&lib))
}

fn cmd_map(ctx: &Context, a: MapArgs) -> Result<(), CliError> {
    let s = &ctx.settings;
    let lib = library(s, a.ann_dir)?;
    let table = s.required_path("replicas", a.replicas)?;
    let text = std::fs::read_to_string(&table).map_err(|e| io_error(&table, e))?;
    let replicas = read_replica_table(&text)?;
    if replicas.len() < 2 {
        return Err(CliError::Data(format!(
            "{}: {} replica(s); the CV maps need at least 2 bootstrap replicas",
            table.display(),
            replicas.len()
        )));
    }
    let grid =
        |key: &str, flag: Option<PathBuf>| -> Result<_, CliError> { Ok(read_grid(&s.required_path(key, flag)?)?) };
    let mut layers = SoilLayerStack::new(
        grid("sand", a.sand)?,
        grid("silt", a.silt)?,
        grid("clay", a.clay)?,
        grid("bulk_density", a.bulk_density)?,
        grid("organic_carbon", a.organic_carbon)?,
    )?;
    if let Some(p) = s.path("stratum_raster", a.stratum_raster)? {
        layers = layers.with_stratum(read_grid(&p)?)?;
    }
    let product = apply_ensemble_map(&lib, &layers, &replicas)?;
    for (stem, g) in product.outputs() {
        write_grid(g, &ctx.out.join(format!("{stem}.asc")))?;
    }
    println!(
        "replicas={} cells={} invalid_cells={} zero_mean_cv_cells={} fallback_cells={}",
        replicas.len(),
        layers.header().ncols * layers.header().nrows,
        product.invalid_cells,
        product.zero_mean_cells,
        product.fallback_cells
    );
    ctx.write_manifest("map", Some(&lib))
}
