//! Command-line surface: `pairs`, `augment`, `score`, `stats` and
//! `errors`. Every command prints one machine-parsable JSON line to
//! standard output and keeps diagnostics on standard error. Exit codes:
//! 0 success, 1 processing failure, 2 flag errors.

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::augment::{
    augment_back_translation, augment_hypernym, augment_mlm, augment_synonym, AugmentError,
    AugmentMethod, AugmentOutcome, AugmentationSpec, HypernymMode,
};
use crate::backends::{
    FixtureMaskedLmBackend, FixtureStore, FixtureTranslationBackend, HttpBackendConfig,
    HttpMaskedLmBackend, HttpTranslationBackend, IdentityTranslation, MockMaskedLm,
    RecordingMaskedLmBackend, RecordingTranslationBackend,
};
use crate::corpus::{concat, filter_pos, parse_corpus, CoarsePos, CorpusDataset};
use crate::dataset_io::{length_stats, read_pairs, write_pairs};
use crate::eval::{error_report_with, first_sense_baseline, score, PredictionSet, DEFAULT_STOP_WORDS, NEAR_MISS_THRESHOLD};
use crate::pairgen::build_pairset;
use crate::wordnet::LexicalDatabase;

#[derive(Parser)]
#[command(
    name = "glossforge",
    version,
    about = "Build, augment and evaluate context-gloss pair datasets"
)]
struct Cli {
    /// Worker threads for parallel stages (0 uses all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build context-gloss pairs from a corpus and a sense inventory.
    Pairs(PairsArgs),
    /// Append augmented records to an existing pair file.
    Augment(AugmentArgs),
    /// Score a prediction set against gold keys.
    Score(ScoreArgs),
    /// Report token-length statistics for a pair file.
    Stats(StatsArgs),
    /// Classify failed predictions by gloss overlap.
    Errors(ErrorsArgs),
}

#[derive(Args)]
struct PairsArgs {
    /// WordNet dict directory.
    #[arg(long, value_name = "DIR")]
    wordnet: PathBuf,
    /// Corpus XML file, repeatable; paired with --gold by position.
    #[arg(long = "xml", value_name = "FILE", required = true)]
    xml: Vec<PathBuf>,
    /// Gold key file, one per --xml.
    #[arg(long = "gold", value_name = "FILE", required = true)]
    gold: Vec<PathBuf>,
    /// Keep only this part of speech (noun, verb, adj or adv).
    #[arg(long, value_name = "POS")]
    pos: Option<String>,
    /// Output pair file (TSV).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Name for the combined dataset when several corpora are given.
    #[arg(long, value_name = "NAME")]
    name: Option<String>,
}

#[derive(Args)]
struct AugmentArgs {
    /// Input pair file.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output pair file (originals plus appended records).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// One of: bt-gloss, bt-context, bt-both, hypernym-replace,
    /// hypernym-concat, hyper-hypo, synonym, mlm.
    #[arg(long, value_name = "METHOD")]
    method: String,
    /// Pivot language for back translation, repeatable.
    #[arg(long = "lang", value_name = "CODE")]
    languages: Vec<String>,
    /// Per-word replacement probability.
    #[arg(long, default_value_t = 0.15, value_name = "P")]
    p: f64,
    /// Candidate list size for masked-LM substitution.
    #[arg(long, default_value_t = 3, value_name = "K")]
    k: usize,
    /// Seed for the per-record random streams.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Append two records per language for bt-both: one with the gloss
    /// translated, one with the context translated.
    #[arg(long)]
    bt_split: bool,
    /// WordNet dict directory (hypernym and synonym methods).
    #[arg(long, value_name = "DIR")]
    wordnet: Option<PathBuf>,
    /// Inference endpoint for back translation and masked-LM methods.
    #[arg(long, env = "GLOSSFORGE_BACKEND_ENDPOINT", value_name = "URL")]
    endpoint: Option<String>,
    /// Fixture file: replayed as-is, or extended when --record is set.
    #[arg(long, value_name = "FILE")]
    fixtures: Option<PathBuf>,
    /// Record fixture misses from the endpoint into --fixtures.
    #[arg(long)]
    record: bool,
    /// Deterministic offline mocks: identity translation and a fixed
    /// masked-LM candidate list.
    #[arg(long)]
    mock: bool,
}

#[derive(Args)]
struct ScoreArgs {
    /// Corpus XML file, repeatable; paired with --gold by position.
    #[arg(long = "xml", value_name = "FILE", required = true)]
    xml: Vec<PathBuf>,
    /// Gold key file, one per --xml.
    #[arg(long = "gold", value_name = "FILE", required = true)]
    gold: Vec<PathBuf>,
    /// Prediction file: one `instance_id sense_key` per line.
    #[arg(long, value_name = "FILE")]
    preds: Option<PathBuf>,
    /// Score the first-sense baseline instead of a prediction file.
    #[arg(long)]
    baseline: bool,
    /// WordNet dict directory (required with --baseline).
    #[arg(long, value_name = "DIR")]
    wordnet: Option<PathBuf>,
    /// Keep only this part of speech before scoring.
    #[arg(long, value_name = "POS")]
    pos: Option<String>,
    /// Name for the combined dataset when several corpora are given.
    #[arg(long, value_name = "NAME")]
    name: Option<String>,
}

#[derive(Args)]
struct StatsArgs {
    /// Pair file to analyze.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
}

#[derive(Args)]
struct ErrorsArgs {
    /// Corpus XML file, repeatable; paired with --gold by position.
    #[arg(long = "xml", value_name = "FILE", required = true)]
    xml: Vec<PathBuf>,
    /// Gold key file, one per --xml.
    #[arg(long = "gold", value_name = "FILE", required = true)]
    gold: Vec<PathBuf>,
    /// Prediction file: one `instance_id sense_key` per line.
    #[arg(long, value_name = "FILE")]
    preds: PathBuf,
    /// WordNet dict directory for gloss lookup.
    #[arg(long, value_name = "DIR")]
    wordnet: PathBuf,
    /// Minimum gloss overlap for a failure to count as a near miss.
    #[arg(long, default_value_t = NEAR_MISS_THRESHOLD, value_name = "T")]
    threshold: f64,
    /// Keep only this part of speech.
    #[arg(long, value_name = "POS")]
    pos: Option<String>,
    /// Name for the combined dataset when several corpora are given.
    #[arg(long, value_name = "NAME")]
    name: Option<String>,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage_fail(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn run_fail(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn chain(err: &dyn std::error::Error) -> String {
    let mut message = err.to_string();
    let mut cursor = err.source();
    while let Some(cause) = cursor {
        let text = cause.to_string();
        // Most error types here already embed their cause in Display.
        if !message.contains(&text) {
            message.push_str(": ");
            message.push_str(&text);
        }
        cursor = cause.source();
    }
    message
}

/// Training recipe emitted beside every written pair file.
#[derive(Serialize)]
struct TrainingRecipe {
    batch_size: u32,
    learning_rate: f64,
    epochs: u32,
    max_sequence_length: u32,
}

const TRAINING_RECIPE: TrainingRecipe = TrainingRecipe {
    batch_size: 96,
    learning_rate: 2e-5,
    epochs: 4,
    max_sequence_length: 128,
};

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

fn write_sidecar(out: &Path) -> Result<(), Failure> {
    let path = sidecar_path(out);
    let body = serde_json::to_string_pretty(&TRAINING_RECIPE).expect("recipe serializes");
    fs::write(&path, body + "\n")
        .map_err(|e| run_fail(format!("{}: {e}", path.display())))
}

fn parse_pos(value: &str) -> Result<CoarsePos, Failure> {
    match value.to_ascii_lowercase().as_str() {
        "noun" => Ok(CoarsePos::Noun),
        "verb" => Ok(CoarsePos::Verb),
        "adj" => Ok(CoarsePos::Adj),
        "adv" => Ok(CoarsePos::Adv),
        other => Err(usage_fail(format!(
            "--pos must be noun, verb, adj or adv, got `{other}`"
        ))),
    }
}

fn load_db(dir: &Path) -> Result<LexicalDatabase, Failure> {
    LexicalDatabase::load(dir).map_err(|e| run_fail(chain(&e)))
}

fn load_corpus(
    xml: &[PathBuf],
    gold: &[PathBuf],
    pos: Option<&str>,
    name: Option<&str>,
) -> Result<CorpusDataset, Failure> {
    if gold.len() != xml.len() {
        return Err(usage_fail(format!(
            "--gold count ({}) must match --xml count ({})",
            gold.len(),
            xml.len()
        )));
    }
    let mut datasets = Vec::new();
    for (xml_path, gold_path) in xml.iter().zip(gold) {
        datasets
            .push(parse_corpus(xml_path, Some(gold_path)).map_err(|e| run_fail(chain(&e)))?);
    }
    let mut dataset = if datasets.len() == 1 {
        datasets.pop().expect("one dataset")
    } else {
        let joined = name.map(str::to_string).unwrap_or_else(|| {
            datasets
                .iter()
                .map(|d| d.name.as_str())
                .collect::<Vec<_>>()
                .join("+")
        });
        concat(&datasets, &joined).map_err(|e| run_fail(chain(&e)))?
    };
    if let Some(pos) = pos {
        dataset = filter_pos(&dataset, parse_pos(pos)?);
    }
    Ok(dataset)
}

#[derive(Serialize)]
struct PairsSummary {
    instances: usize,
    pairs: usize,
    skipped: usize,
}

fn cmd_pairs(args: &PairsArgs) -> Result<String, Failure> {
    let db = load_db(&args.wordnet)?;
    let dataset = load_corpus(&args.xml, &args.gold, args.pos.as_deref(), args.name.as_deref())?;
    let (pairs, stats) = build_pairset(&dataset, &db);
    write_pairs(&pairs, &args.out).map_err(|e| run_fail(chain(&e)))?;
    write_sidecar(&args.out)?;
    let summary = PairsSummary {
        instances: stats.instances,
        pairs: stats.pairs,
        skipped: stats.skipped_unknown_lemma,
    };
    Ok(serde_json::to_string(&summary).expect("summary serializes"))
}

fn augment_fail(err: AugmentError) -> Failure {
    let partial =
        serde_json::to_string(&err.partial).expect("stats serialize");
    log::error!("partial progress: {partial}");
    run_fail(chain(&err))
}

fn bt_run(
    ps: &crate::pairgen::PairSet,
    spec: &AugmentationSpec,
    args: &AugmentArgs,
) -> Result<AugmentOutcome, Failure> {
    if args.mock {
        return augment_back_translation(ps, spec, &IdentityTranslation).map_err(augment_fail);
    }
    match (&args.fixtures, &args.endpoint) {
        (Some(path), _) if !args.record => {
            let store = FixtureStore::load(path).map_err(|e| run_fail(chain(&e)))?;
            let backend = FixtureTranslationBackend::new(&store);
            let outcome = augment_back_translation(ps, spec, &backend).map_err(augment_fail)?;
            log::info!(
                "fixture hit rate {:.3} ({} hits, {} misses)",
                store.hit_rate(),
                store.hits(),
                store.misses()
            );
            Ok(outcome)
        }
        (Some(path), Some(endpoint)) => {
            let store = FixtureStore::recording(path).map_err(|e| run_fail(chain(&e)))?;
            let inner = HttpTranslationBackend::new(HttpBackendConfig::new(endpoint.clone()));
            let backend = RecordingTranslationBackend::new(&store, inner);
            augment_back_translation(ps, spec, &backend).map_err(augment_fail)
        }
        (Some(_), None) => Err(usage_fail("--record needs --endpoint")),
        (None, Some(endpoint)) => {
            let backend = HttpTranslationBackend::new(HttpBackendConfig::new(endpoint.clone()));
            augment_back_translation(ps, spec, &backend).map_err(augment_fail)
        }
        (None, None) => Err(usage_fail(
            "back translation needs --endpoint, --fixtures or --mock",
        )),
    }
}

/// Fixed candidate list for `--mock` masked-LM runs.
const MOCK_MLM_CANDIDATES: [&str; 3] = ["one", "two", "three"];

fn mlm_run(
    ps: &crate::pairgen::PairSet,
    spec: &AugmentationSpec,
    args: &AugmentArgs,
) -> Result<AugmentOutcome, Failure> {
    if args.mock {
        let backend =
            MockMaskedLm::new(MOCK_MLM_CANDIDATES.iter().map(|c| c.to_string()).collect());
        return augment_mlm(ps, spec, &backend).map_err(augment_fail);
    }
    match (&args.fixtures, &args.endpoint) {
        (Some(path), _) if !args.record => {
            let store = FixtureStore::load(path).map_err(|e| run_fail(chain(&e)))?;
            let backend = FixtureMaskedLmBackend::new(&store);
            let outcome = augment_mlm(ps, spec, &backend).map_err(augment_fail)?;
            log::info!(
                "fixture hit rate {:.3} ({} hits, {} misses)",
                store.hit_rate(),
                store.hits(),
                store.misses()
            );
            Ok(outcome)
        }
        (Some(path), Some(endpoint)) => {
            let store = FixtureStore::recording(path).map_err(|e| run_fail(chain(&e)))?;
            let inner = HttpMaskedLmBackend::new(HttpBackendConfig::new(endpoint.clone()));
            let backend = RecordingMaskedLmBackend::new(&store, inner);
            augment_mlm(ps, spec, &backend).map_err(augment_fail)
        }
        (Some(_), None) => Err(usage_fail("--record needs --endpoint")),
        (None, Some(endpoint)) => {
            let backend = HttpMaskedLmBackend::new(HttpBackendConfig::new(endpoint.clone()));
            augment_mlm(ps, spec, &backend).map_err(augment_fail)
        }
        (None, None) => Err(usage_fail(
            "masked-LM substitution needs --endpoint, --fixtures or --mock",
        )),
    }
}

fn cmd_augment(args: &AugmentArgs) -> Result<String, Failure> {
    let method: AugmentMethod = args.method.parse().map_err(usage_fail)?;
    let mut spec = AugmentationSpec::new(method);
    spec.p_replace = args.p;
    spec.k_candidates = args.k;
    spec.seed = args.seed;
    spec.languages = args.languages.clone();
    spec.bt_both_split = args.bt_split;
    spec.validate().map_err(usage_fail)?;

    let ps = read_pairs(&args.input).map_err(|e| run_fail(chain(&e)))?;
    let outcome = match method {
        AugmentMethod::BtGloss | AugmentMethod::BtContext | AugmentMethod::BtBoth => {
            bt_run(&ps, &spec, args)?
        }
        AugmentMethod::Mlm => mlm_run(&ps, &spec, args)?,
        AugmentMethod::HypernymReplace | AugmentMethod::HypernymConcat
        | AugmentMethod::HyperHypo | AugmentMethod::Synonym => {
            let dir = args.wordnet.as_ref().ok_or_else(|| {
                usage_fail(format!("--wordnet is required for method `{method}`"))
            })?;
            let db = load_db(dir)?;
            match method {
                AugmentMethod::HypernymReplace => {
                    augment_hypernym(&ps, &db, HypernymMode::Replace)
                }
                AugmentMethod::HypernymConcat => {
                    augment_hypernym(&ps, &db, HypernymMode::Concat)
                }
                AugmentMethod::HyperHypo => augment_hypernym(&ps, &db, HypernymMode::HyperHypo),
                _ => augment_synonym(&ps, &db, &spec),
            }
        }
    };
    write_pairs(&outcome.pairs, &args.out).map_err(|e| run_fail(chain(&e)))?;
    write_sidecar(&args.out)?;
    Ok(serde_json::to_string(&outcome.stats).expect("stats serialize"))
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

#[derive(Serialize)]
struct ScoreJson {
    total: usize,
    attempted: usize,
    correct: usize,
    precision: f64,
    recall: f64,
    f1: f64,
}

fn cmd_score(args: &ScoreArgs) -> Result<String, Failure> {
    let dataset = load_corpus(&args.xml, &args.gold, args.pos.as_deref(), args.name.as_deref())?;
    let preds = match (&args.preds, args.baseline) {
        (Some(_), true) => {
            return Err(usage_fail("--preds and --baseline are mutually exclusive"))
        }
        (Some(path), false) => PredictionSet::from_file(path).map_err(|e| run_fail(chain(&e)))?,
        (None, true) => {
            let dir = args
                .wordnet
                .as_ref()
                .ok_or_else(|| usage_fail("--baseline needs --wordnet"))?;
            first_sense_baseline(&dataset, &load_db(dir)?)
        }
        (None, false) => return Err(usage_fail("either --preds or --baseline is required")),
    };
    let report = score(&dataset, &preds).map_err(|e| run_fail(chain(&e)))?;
    let json = ScoreJson {
        total: report.total,
        attempted: report.attempted,
        correct: report.correct,
        precision: round4(report.precision),
        recall: round4(report.recall),
        f1: round4(report.f1),
    };
    Ok(serde_json::to_string(&json).expect("report serializes"))
}

fn cmd_stats(args: &StatsArgs) -> Result<String, Failure> {
    let ps = read_pairs(&args.input).map_err(|e| run_fail(chain(&e)))?;
    let stats = length_stats(&ps);
    Ok(serde_json::to_string(&stats).expect("stats serialize"))
}

fn cmd_errors(args: &ErrorsArgs) -> Result<String, Failure> {
    let dataset = load_corpus(&args.xml, &args.gold, args.pos.as_deref(), args.name.as_deref())?;
    let preds = PredictionSet::from_file(&args.preds).map_err(|e| run_fail(chain(&e)))?;
    let db = load_db(&args.wordnet)?;
    let report = error_report_with(&dataset, &preds, &db, args.threshold, DEFAULT_STOP_WORDS)
        .map_err(|e| run_fail(chain(&e)))?;
    Ok(serde_json::to_string(&report).expect("report serializes"))
}

fn dispatch(command: &Command) -> Result<String, Failure> {
    match command {
        Command::Pairs(args) => cmd_pairs(args),
        Command::Augment(args) => cmd_augment(args),
        Command::Score(args) => cmd_score(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Errors(args) => cmd_errors(args),
    }
}

fn with_jobs<R: Send>(jobs: usize, op: impl FnOnce() -> R + Send) -> Result<R, Failure> {
    if jobs == 0 {
        return Ok(op());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| run_fail(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(op))
}

fn exit_code_for(err: &clap::Error) -> i32 {
    match err.kind() {
        ErrorKind::DisplayHelp
        | ErrorKind::DisplayVersion
        | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
        _ => 2,
    }
}

fn run_cli(cli: Cli) -> i32 {
    match with_jobs(cli.jobs, || dispatch(&cli.command)).and_then(|r| r) {
        Ok(json) => {
            println!("{json}");
            0
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

/// Entry point for the `glossforge` binary. Returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = exit_code_for(&err);
            let _ = err.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    run_cli(cli)
}
