//! Command-line front end.
//!
//! Exit status: 0 success, 1 usage, 2 data error, 3 network or credentials.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, Utc};
use clap::{Args, Parser, Subcommand};
use healthcast_core::analysis::{summarize, Horizon};
use healthcast_core::data::IndicatorId;
use healthcast_core::learners::{CartHyperParams, LearnerKind};
use healthcast_core::tuning::{DeConfig, GenerationBest};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::csvio;
use crate::error::Error;
use crate::harness::{self, ExperimentPlan, InputDigest, SkipRecord};
use crate::ingest::{
    aggregate_monthly, derive_meta, is_relevant_url, passes_filters, KeywordDictionary, Miner, RepoId, RepoMeta,
    Token, UreqTransport, DEFAULT_API_BASE, DEFAULT_CLONE_BASE, TOKEN_ENV,
};
use crate::report;
use crate::synth::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Parser)]
#[command(name = "healthcast", version, about = "Forecast open-source project health indicators")]
pub struct Cli {
    /// More logging (-v info, -vv debug); `tune -v` also writes tuning logs.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch repositories' activity and write monthly project CSVs.
    Mine(MineArgs),
    /// Validate and filter a dataset directory.
    Prepare(PrepareArgs),
    /// Generate a seeded synthetic dataset.
    Synth(SynthArgs),
    /// Tune CART per project and indicator; write hyperparameters and trees.
    Tune(TuneArgs),
    /// Run the evaluation grid and write outcomes, reports and a manifest.
    Evaluate(EvaluateArgs),
    /// Re-render report tables from an outcomes CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct MineArgs {
    /// Repositories as owner/name or URLs, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub repos: Vec<String>,
    /// File with one repository per line.
    #[arg(long)]
    pub repo_file: Option<PathBuf>,
    #[arg(long)]
    pub cache: PathBuf,
    /// Replay cached responses and clones only.
    #[arg(long)]
    pub offline: bool,
    /// End of the 30-day window for recent activity (default: today, UTC).
    #[arg(long)]
    pub reference_date: Option<NaiveDate>,
    /// Environment variable holding the API token.
    #[arg(long, default_value = TOKEN_ENV)]
    pub token_env: String,
    #[arg(long, default_value = DEFAULT_API_BASE)]
    pub api_base: String,
    #[arg(long, default_value = DEFAULT_CLONE_BASE)]
    pub clone_base: String,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PrepareArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Directory of per-project metadata JSON written by `mine`.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long)]
    pub min_months: Option<u32>,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub projects: usize,
    #[arg(long)]
    pub months: u32,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long)]
    pub seed: u64,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TuneArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', value_parser = parse_indicator)]
    pub indicators: Option<Vec<IndicatorId>>,
    /// Months between the end of the training window and the last month.
    #[arg(long, default_value_t = 1)]
    pub horizon: u32,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', value_parser = parse_indicator)]
    pub indicators: Option<Vec<IndicatorId>>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,6,12")]
    pub horizons: Vec<u32>,
    #[arg(long, value_delimiter = ',', value_parser = parse_learner)]
    pub learners: Option<Vec<LearnerKind>>,
    /// Train on the first half of each series, test twelve months later.
    #[arg(long)]
    pub midway: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub outcomes: PathBuf,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_indicator(s: &str) -> Result<IndicatorId, String> {
    IndicatorId::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = IndicatorId::ALL.iter().map(|i| i.name()).collect();
        format!("unknown indicator {s:?}; expected one of {}", names.join(", "))
    })
}

fn parse_learner(s: &str) -> Result<LearnerKind, String> {
    s.parse()
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_env("HEALTHCAST_LOG").try_init();
    match dispatch(&cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command; returns the output directory.
pub fn dispatch(cli: &Cli) -> Result<PathBuf, Error> {
    match &cli.command {
        Command::Mine(a) => mine(a),
        Command::Prepare(a) => prepare(a),
        Command::Synth(a) => synth(a),
        Command::Tune(a) => tune(a, cli.verbose > 0),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => render_report(a),
    }
}

fn out_dir(out: &Option<PathBuf>, label: &str) -> Result<PathBuf, Error> {
    let dir = match out {
        Some(d) => d.clone(),
        None => PathBuf::from("runs").join(format!("{}-{label}", Utc::now().format("%Y%m%dT%H%M%SZ"))),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text)
}

#[derive(Serialize)]
struct Manifest<'a, A: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    args: &'a A,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    details: Option<serde_json::Value>,
}

fn manifest<A: Serialize>(
    dir: &Path,
    command: &'static str,
    args: &A,
    seed: Option<u64>,
    inputs: Vec<InputDigest>,
    details: Option<serde_json::Value>,
) -> Result<(), Error> {
    write_json(
        &dir.join("manifest.json"),
        &Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            args,
            seed,
            inputs,
            details,
        },
    )
}

fn slug(project_id: &str) -> String {
    project_id.replace('/', "__")
}

fn mine(a: &MineArgs) -> Result<PathBuf, Error> {
    let mut repos = a.repos.clone();
    if let Some(f) = &a.repo_file {
        let text = fs::read_to_string(f).map_err(|e| Error::io(f, e))?;
        repos.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        );
    }
    if repos.is_empty() {
        return Err(Error::config("no repositories given (--repos or --repo-file)"));
    }
    let ids: Vec<RepoId> = repos.iter().map(|r| RepoId::parse(r)).collect::<Result<_, _>>()?;
    let token = Token::from_env(&a.token_env);
    if token.is_none() && !a.offline {
        log::warn!("{} is not set; using unauthenticated requests", a.token_env);
    }
    let miner = Miner::new(UreqTransport::default(), token, &a.cache)
        .offline(a.offline)
        .api_base(&a.api_base)
        .clone_base(&a.clone_base);
    let reference = a.reference_date.unwrap_or_else(|| Utc::now().date_naive());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    // Everything is fetched before anything is written.
    let mined = pool.install(|| {
        ids.par_iter()
            .map(|id| miner.mine(&id.slug()).map_err(Error::from))
            .collect::<Result<Vec<_>, Error>>()
    })?;
    let mut prepared = Vec::with_capacity(mined.len());
    for m in &mined {
        let series = aggregate_monthly(&m.events, &m.repo.slug())?;
        let meta = derive_meta(m, reference)?;
        prepared.push((m, series, meta));
    }
    let dir = out_dir(&a.out, "mine")?;
    for (m, series, meta) in &prepared {
        let s = slug(&m.repo.slug());
        write_json(&dir.join("events").join(format!("{s}.json")), &m.events)?;
        write_json(&dir.join("meta").join(format!("{s}.json")), meta)?;
        csvio::write_series_file(&dir.join("data"), series)?;
    }
    manifest(
        &dir,
        "mine",
        a,
        None,
        Vec::new(),
        Some(json!({ "reference_date": reference, "repositories": ids.iter().map(RepoId::slug).collect::<Vec<_>>() })),
    )?;
    Ok(dir)
}

#[derive(Serialize)]
struct PrepareEntry {
    file: String,
    project_id: Option<String>,
    accepted: bool,
    reasons: Vec<String>,
}

fn prepare(a: &PrepareArgs) -> Result<PathBuf, Error> {
    let files = csvio::dataset_files(&a.data)?;
    if files.is_empty() {
        return Err(Error::data(format!("no project CSV files in {}", a.data.display())));
    }
    let dict = KeywordDictionary::default();
    let mut entries = Vec::new();
    let mut accepted = Vec::new();
    for f in &files {
        let name = f.file_name().unwrap().to_string_lossy().into_owned();
        let series = match csvio::read_series_file(f) {
            Ok(s) => s,
            Err(e) => {
                entries.push(PrepareEntry {
                    file: name,
                    project_id: None,
                    accepted: false,
                    reasons: vec![e.to_string()],
                });
                continue;
            }
        };
        let mut reasons = Vec::new();
        let mut url = format!("github.com/{}", series.project_id);
        if let Some(meta_dir) = &a.meta {
            let path = meta_dir.join(format!("{}.json", slug(&series.project_id)));
            match fs::read_to_string(&path) {
                Ok(text) => {
                    let meta: RepoMeta = serde_json::from_str(&text)?;
                    url = meta.url.clone();
                    let d = passes_filters(&meta);
                    reasons.extend(d.failed.iter().map(|f| format!("filter {f}")));
                }
                Err(_) => reasons.push("no metadata".to_string()),
            }
        }
        if let Some(word) = dict.matching_word(&url) {
            debug_assert!(!is_relevant_url(&url, &dict));
            reasons.push(format!("url contains {word:?}"));
        }
        if let Some(min) = a.min_months {
            if series.len() < min {
                reasons.push(format!("{} months < {min}", series.len()));
            }
        }
        if reasons.is_empty() {
            accepted.push(f.clone());
        }
        entries.push(PrepareEntry {
            file: name,
            project_id: Some(series.project_id),
            accepted: reasons.is_empty(),
            reasons,
        });
    }
    let dir = out_dir(&a.out, "prepare")?;
    let mut inputs = Vec::new();
    for f in &files {
        inputs.push(harness::digest_file(f)?);
    }
    for f in &accepted {
        let target = dir.join(f.file_name().unwrap());
        fs::copy(f, &target).map_err(|e| Error::io(&target, e))?;
    }
    write_json(&dir.join("prepare.json"), &entries)?;
    manifest(&dir, "prepare", a, None, inputs, Some(json!({ "accepted": accepted.len(), "rejected": entries.len() - accepted.len() })))?;
    Ok(dir)
}

fn synth(a: &SynthArgs) -> Result<PathBuf, Error> {
    let spec = SyntheticSpec {
        projects: a.projects,
        months: a.months,
        noise_scale: a.noise,
        seed: a.seed,
    };
    let series = generate_synthetic(&spec)?;
    let dir = out_dir(&a.out, &format!("seed{}", a.seed))?;
    for s in &series {
        csvio::write_series_file(&dir, s)?;
    }
    manifest(&dir, "synth", a, Some(a.seed), Vec::new(), None)?;
    Ok(dir)
}

#[derive(Serialize)]
struct TuneRecord {
    project_id: String,
    indicator: IndicatorId,
    horizon: u32,
    seed: u64,
    fallback: bool,
    params: CartHyperParams,
    validation_error: Option<f64>,
    evaluations: usize,
    tree: serde_json::Value,
}

fn load_dataset(dir: &Path) -> Result<(Vec<healthcast_core::data::ProjectSeries>, Vec<InputDigest>), Error> {
    let files = csvio::dataset_files(dir)?;
    if files.is_empty() {
        return Err(Error::data(format!("no project CSV files in {}", dir.display())));
    }
    let mut series = Vec::new();
    let mut inputs = Vec::new();
    for f in &files {
        series.push(csvio::read_series_file(f)?);
        inputs.push(harness::digest_file(f)?);
    }
    Ok((series, inputs))
}

fn tune(a: &TuneArgs, verbose: bool) -> Result<PathBuf, Error> {
    if a.horizon == 0 {
        return Err(Error::config("--horizon must be at least 1"));
    }
    let indicators = a.indicators.clone().unwrap_or_else(|| IndicatorId::ALL.to_vec());
    let (series, inputs) = load_dataset(&a.data)?;
    let horizon = Horizon::Months(a.horizon);
    let tasks: Vec<_> = series
        .iter()
        .flat_map(|s| indicators.iter().map(move |&i| (s, i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    let results = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(s, i)| -> Result<Result<(TuneRecord, Vec<GenerationBest>), SkipRecord>, Error> {
                let split = match harness::split(s, i, horizon) {
                    Ok(split) => split,
                    Err(healthcast_core::data::DataError::InsufficientData { reason }) => {
                        return Ok(Err(SkipRecord {
                            project_id: s.project_id.clone(),
                            indicator: i,
                            horizon,
                            learner: LearnerKind::Decart,
                            reason,
                        }))
                    }
                    Err(e) => return Err(e.into()),
                };
                let seed = harness::task_seed(a.seed, &s.project_id, i, horizon, LearnerKind::Decart);
                let (tree, tuned) = harness::tune_or_fallback(&split.train, &DeConfig::default(), seed)?;
                let record = TuneRecord {
                    project_id: s.project_id.clone(),
                    indicator: i,
                    horizon: a.horizon,
                    seed,
                    fallback: tuned.is_none(),
                    params: tuned.as_ref().map_or_else(CartHyperParams::default, |t| t.params),
                    validation_error: tuned.as_ref().map(|t| t.validation_error),
                    evaluations: tuned.as_ref().map_or(0, |t| t.evaluations),
                    tree: report::tree_json(&tree, split.train.feature_names()),
                };
                Ok(Ok((record, tuned.map(|t| t.log).unwrap_or_default())))
            })
            .collect::<Result<Vec<_>, Error>>()
    })?;
    let dir = out_dir(&a.out, &format!("seed{}", a.seed))?;
    let mut records = Vec::new();
    let mut skips = Vec::new();
    for r in results {
        match r {
            Ok((record, log)) => {
                if verbose {
                    let mut text = String::from("generation,best_value\n");
                    for g in &log {
                        text.push_str(&format!("{},{}\n", g.generation, g.best_value));
                    }
                    let name = format!("{}__{}.csv", slug(&record.project_id), record.indicator.name());
                    write(&dir.join("tuning-logs").join(name), text)?;
                }
                records.push(record);
            }
            Err(skip) => skips.push(skip),
        }
    }
    write_json(&dir.join("tuned.json"), &records)?;
    manifest(&dir, "tune", a, Some(a.seed), inputs, Some(json!({ "skips": skips })))?;
    Ok(dir)
}

fn write_reports(dir: &Path, outcomes: &[healthcast_core::analysis::EvalOutcome]) -> Result<(), Error> {
    for (name, text) in report::render(&summarize(outcomes))? {
        write(&dir.join(name), text)?;
    }
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> Result<PathBuf, Error> {
    let plan = ExperimentPlan {
        dataset_dir: a.data.clone(),
        indicators: a.indicators.clone().unwrap_or_else(|| IndicatorId::ALL.to_vec()),
        horizons: a.horizons.clone(),
        learners: a.learners.clone().unwrap_or_else(|| LearnerKind::ALL.to_vec()),
        master_seed: a.seed,
        midway: a.midway,
    };
    plan.validate()?;
    if csvio::dataset_files(&a.data)?.is_empty() {
        return Err(Error::data(format!("no project CSV files in {}", a.data.display())));
    }
    let (results, inputs) = harness::run_experiment(&plan, a.jobs)?;
    let dir = out_dir(&a.out, &format!("seed{}", a.seed))?;
    let mut buf = Vec::new();
    report::write_outcomes(&mut buf, &results.outcomes)?;
    write(&dir.join("outcomes.csv"), buf)?;
    write_reports(&dir, &results.outcomes)?;
    manifest(
        &dir,
        "evaluate",
        a,
        Some(a.seed),
        inputs,
        Some(json!({
            "plan": plan,
            "outcomes": results.outcomes.len(),
            "skips": results.skips,
        })),
    )?;
    Ok(dir)
}

fn render_report(a: &ReportArgs) -> Result<PathBuf, Error> {
    let file = fs::File::open(&a.outcomes).map_err(|e| Error::io(&a.outcomes, e))?;
    let outcomes = report::read_outcomes(file)?;
    let dir = out_dir(&a.out, "report")?;
    write_reports(&dir, &outcomes)?;
    manifest(&dir, "report", a, None, vec![harness::digest_file(&a.outcomes)?], None)?;
    Ok(dir)
}
