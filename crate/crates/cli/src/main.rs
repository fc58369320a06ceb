use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use longicog::evaluation::{
    emit_comparison, emit_report, parse_comparison, parse_report, FoldStrategy, Normalization, ReportFormat,
};
use longicog::experiment::{self, Protocol};
use longicog::features::ingest_features;
use longicog::learners::svm::Gamma;
use longicog::longitudinal::{build_change_dataset, build_state_dataset, export_jsonl, HistoryScheme, PairScheme, StateMode};
use longicog::synth::{describe_cohort, generate_cohort, Schedule, SynthConfig};
use longicog::{load_cohort, save_cohort, validate_cohort, CohortStore, LearnerConfig, LearnerKind, ModalitySpec};

/// Cognitive-state detection and change prediction from longitudinal
/// speech-session features.
#[derive(Debug, Parser)]
#[command(name = "longicog", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded synthetic cohort directory.
    Synth(SynthArgs),
    /// Attach a feature JSONL file to a cohort.
    Ingest(IngestArgs),
    /// Check a cohort for structural problems.
    Validate(CohortArg),
    /// Cross-validate cognitive-state detection.
    Detect(DetectArgs),
    /// Cross-validate change prediction over ordered session pairs.
    Change(ChangeArgs),
    /// Baseline vs. historical state detection side by side.
    Compare(CompareArgs),
    /// Render a saved report or comparison.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct CohortArg {
    /// Cohort directory.
    #[arg(long, default_value = "cohort")]
    cohort: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output cohort directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 35)]
    participants: usize,
    /// Sessions per participant, e.g. 34x7+1x5.
    #[arg(long, default_value = "34x7+1x5")]
    schedule: Schedule,
    /// Questions answered per session.
    #[arg(long, default_value_t = 18)]
    questions: u8,
    /// Modality as name:dimension; repeat for several.
    #[arg(long = "modality", value_name = "NAME:DIM")]
    modalities: Vec<String>,
    /// Class-mean separation on each informative dimension.
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Leading dimensions carrying the class signal.
    #[arg(long, default_value_t = 8)]
    informative_dims: usize,
    /// Noise standard deviation shared by a session's responses.
    #[arg(long, default_value_t = 1.5)]
    session_noise: f64,
    /// Noise standard deviation per response.
    #[arg(long, default_value_t = 0.5)]
    response_noise: f64,
    /// State flip probability at each session boundary.
    #[arg(long, default_value_t = 0.1)]
    p_flip: f64,
    /// Probability that a participant starts in MCI.
    #[arg(long, default_value_t = 20.0 / 35.0)]
    mci_prior: f64,
    /// Mean MoCA score of healthy sessions.
    #[arg(long, default_value_t = 27.3)]
    moca_hc: f64,
    /// Mean MoCA score of MCI sessions.
    #[arg(long, default_value_t = 22.9)]
    moca_mci: f64,
    /// Standard deviation of synthesized MoCA scores.
    #[arg(long, default_value_t = 1.5)]
    moca_sd: f64,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    cohort: CohortArg,
    /// Feature JSONL file.
    #[arg(long)]
    features: PathBuf,
    /// Modality the file belongs to.
    #[arg(long)]
    modality: String,
    /// Declares the modality with this dimension if the cohort lacks it.
    #[arg(long)]
    dimension: Option<usize>,
}

/// Options shared by every cross-validated run. Unset options fall back to
/// the `--config` file, then to built-in defaults.
#[derive(Debug, Args, Default)]
struct ExperimentArgs {
    /// TOML file with experiment settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cohort directory [default: cohort].
    #[arg(long)]
    cohort: Option<PathBuf>,
    /// Modality to use; repeat to fuse several [default: all declared].
    #[arg(long = "modality")]
    modalities: Vec<String>,
    /// dt, rf, svm or nn [default: rf].
    #[arg(long)]
    learner: Option<String>,
    /// Minimum node size for a split (tree and forest).
    #[arg(long)]
    min_samples_split: Option<usize>,
    /// Forest size [default: 100].
    #[arg(long)]
    trees: Option<usize>,
    /// SVM box constraint [default: 1].
    #[arg(long)]
    svm_c: Option<f64>,
    /// RBF gamma as a number or `scale` [default: scale].
    #[arg(long)]
    gamma: Option<String>,
    /// MLP learning rate [default: 0.1].
    #[arg(long)]
    lr: Option<f64>,
    /// MLP epochs [default: 100].
    #[arg(long)]
    epochs: Option<usize>,
    /// MLP mini-batch size [default: 16].
    #[arg(long)]
    batch_size: Option<usize>,
    /// MLP hidden units [default: 64].
    #[arg(long)]
    hidden: Option<usize>,
    /// Number of folds [default: 10].
    #[arg(long)]
    folds: Option<usize>,
    /// stratified or grouped (participant-disjoint) [default: stratified].
    #[arg(long)]
    strategy: Option<String>,
    /// per-fold or global min-max scaling [default: per-fold].
    #[arg(long)]
    normalize: Option<String>,
    /// Seed for folds and learners [default: 42].
    #[arg(long)]
    seed: Option<u64>,
    /// Report JSON path [default: <cohort>/reports/<run>.json].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the markdown rendering here.
    #[arg(long)]
    markdown: Option<PathBuf>,
    /// Write the built samples as JSONL here.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// baseline or historical [default: historical].
    #[arg(long)]
    mode: Option<String>,
    /// History aggregation: mean or ewma:<decay> [default: mean].
    #[arg(long)]
    history: Option<String>,
}

#[derive(Debug, Args)]
struct ChangeArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Pair features: concat or concat+diff [default: concat].
    #[arg(long)]
    pairs: Option<String>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// History aggregation for the historical run [default: mean].
    #[arg(long)]
    history: Option<String>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Report or comparison JSON.
    input: PathBuf,
    /// markdown or json.
    #[arg(long, default_value = "markdown")]
    format: String,
}

/// Keys accepted in a `--config` file; names match the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ConfigFile {
    cohort: Option<PathBuf>,
    modality: Option<Vec<String>>,
    learner: Option<String>,
    min_samples_split: Option<usize>,
    trees: Option<usize>,
    svm_c: Option<f64>,
    gamma: Option<String>,
    lr: Option<f64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    hidden: Option<usize>,
    folds: Option<usize>,
    strategy: Option<String>,
    normalize: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    markdown: Option<PathBuf>,
    export: Option<PathBuf>,
    mode: Option<String>,
    history: Option<String>,
    pairs: Option<String>,
}

struct Resolved {
    cohort: PathBuf,
    protocol: Protocol,
    out: Option<PathBuf>,
    markdown: Option<PathBuf>,
    export: Option<PathBuf>,
    file: ConfigFile,
}

impl ExperimentArgs {
    fn resolve(self) -> Result<Resolved> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ConfigFile::default(),
        };

        let kind: LearnerKind = self.learner.or(file.learner.clone()).as_deref().unwrap_or("rf").parse()?;
        let mut learner = LearnerConfig::new(kind);
        if let Some(v) = self.min_samples_split.or(file.min_samples_split) {
            learner.tree.min_samples_split = v;
            learner.forest.tree.min_samples_split = v;
        }
        if let Some(v) = self.trees.or(file.trees) {
            learner.forest.n_trees = v;
        }
        if let Some(v) = self.svm_c.or(file.svm_c) {
            learner.svm.c = v;
        }
        if let Some(g) = self.gamma.or(file.gamma.clone()) {
            learner.svm.gamma = match g.as_str() {
                "scale" => Gamma::Scale,
                v => Gamma::Value(v.parse().with_context(|| format!("invalid gamma `{v}`"))?),
            };
        }
        if let Some(v) = self.lr.or(file.lr) {
            learner.mlp.learning_rate = v;
        }
        if let Some(v) = self.epochs.or(file.epochs) {
            learner.mlp.epochs = v;
        }
        if let Some(v) = self.batch_size.or(file.batch_size) {
            learner.mlp.batch_size = v;
        }
        if let Some(v) = self.hidden.or(file.hidden) {
            learner.mlp.hidden = v;
        }
        learner.validate()?;

        let modalities = if self.modalities.is_empty() {
            file.modality.clone().unwrap_or_default()
        } else {
            self.modalities
        };
        let mut protocol = Protocol::new(modalities, learner);
        if let Some(k) = self.folds.or(file.folds) {
            protocol.folds = k;
        }
        if let Some(s) = self.strategy.or(file.strategy.clone()) {
            protocol.strategy = s.parse::<FoldStrategy>()?;
        }
        if let Some(s) = self.normalize.or(file.normalize.clone()) {
            protocol.normalization = s.parse::<Normalization>()?;
        }
        if let Some(s) = self.seed.or(file.seed) {
            protocol.seed = s;
        }

        Ok(Resolved {
            cohort: self.cohort.or(file.cohort.clone()).unwrap_or_else(|| PathBuf::from("cohort")),
            protocol,
            out: self.out.or(file.out.clone()),
            markdown: self.markdown.or(file.markdown.clone()),
            export: self.export.or(file.export.clone()),
            file,
        })
    }
}

impl Resolved {
    fn load(&self) -> Result<CohortStore> {
        load_cohort(&self.cohort).with_context(|| format!("loading cohort {}", self.cohort.display()))
    }

    fn report_path(&self, run: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let learner = self.protocol.learner.kind.short_name().to_ascii_lowercase();
            self.cohort.join("reports").join(format!("{run}-{learner}.json"))
        })
    }

    fn write_outputs(&self, run: &str, json: &str, markdown: &str) -> Result<()> {
        let path = self.report_path(run);
        write_file(&path, json)?;
        if let Some(md) = &self.markdown {
            write_file(md, markdown)?;
        }
        print!("{markdown}");
        println!("\nreport written to {}", path.display());
        Ok(())
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn parse_modality(spec: &str) -> Result<ModalitySpec> {
    let (name, dim) = spec
        .split_once(':')
        .with_context(|| format!("modality `{spec}` is not of the form name:dimension"))?;
    let dim = dim.parse().with_context(|| format!("invalid dimension in `{spec}`"))?;
    Ok(ModalitySpec::new(name, dim)?)
}

fn synth(args: SynthArgs) -> Result<()> {
    let mut config = SynthConfig {
        n_participants: args.participants,
        schedule: args.schedule,
        n_questions: args.questions,
        delta: args.delta,
        informative_dims: args.informative_dims,
        session_noise: args.session_noise,
        response_noise: args.response_noise,
        p_flip: args.p_flip,
        mci_prior: args.mci_prior,
        seed: args.seed,
        ..SynthConfig::default()
    };
    config.moca.mean_hc = args.moca_hc;
    config.moca.mean_mci = args.moca_mci;
    config.moca.sd = args.moca_sd;
    if !args.modalities.is_empty() {
        config.modalities = args.modalities.iter().map(|m| parse_modality(m)).collect::<Result<_>>()?;
    }
    let store = generate_cohort(&config)?;
    save_cohort(&store, &args.out)?;
    write_file(&args.out.join("synth.json"), &(serde_json::to_string_pretty(&config)? + "\n"))?;
    let summary = describe_cohort(&store);
    println!(
        "{} participants, {} sessions ({} HC, {} MCI), transitions HC→MCI {} MCI→HC {}",
        summary.participants,
        summary.sessions,
        summary.hc_sessions,
        summary.mci_sessions,
        summary.hc_to_mci,
        summary.mci_to_hc
    );
    println!("cohort written to {}", args.out.display());
    Ok(())
}

fn ingest(args: IngestArgs) -> Result<()> {
    let dir = &args.cohort.cohort;
    let mut store = load_cohort(dir).with_context(|| format!("loading cohort {}", dir.display()))?;
    let spec = match (store.modality(&args.modality), args.dimension) {
        (Some(m), Some(d)) if m.dimension != d => {
            bail!("modality `{}` is declared with dimension {}, not {d}", m.name, m.dimension)
        }
        (Some(m), _) => m.clone(),
        (None, Some(d)) => {
            let spec = ModalitySpec::new(args.modality.clone(), d)?;
            store.add_modality(spec.clone())?;
            spec
        }
        (None, None) => bail!("unknown modality `{}`; pass --dimension to declare it", args.modality),
    };
    let summary = ingest_features(&args.features, &spec, &mut store)?;
    save_cohort(&store, dir)?;
    println!(
        "ingested {} records into {} sessions ({})",
        summary.records, summary.sessions_touched, spec.name
    );
    Ok(())
}

fn validate(args: CohortArg) -> Result<ExitCode> {
    let store = load_cohort(&args.cohort).with_context(|| format!("loading cohort {}", args.cohort.display()))?;
    let report = validate_cohort(&store);
    if report.is_empty() {
        let summary = describe_cohort(&store);
        println!(
            "ok: {} participants, {} sessions, {} modalities",
            summary.participants,
            summary.sessions,
            store.modalities.len()
        );
        return Ok(ExitCode::SUCCESS);
    }
    for finding in &report.findings {
        eprintln!("{finding}");
    }
    eprintln!("{} problem(s) found", report.len());
    Ok(ExitCode::FAILURE)
}

fn pick<T: std::str::FromStr>(flag: Option<String>, file: Option<&String>, default: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let raw = flag.or_else(|| file.cloned()).unwrap_or_else(|| default.to_string());
    Ok(raw.parse()?)
}

fn detect(args: DetectArgs) -> Result<()> {
    let run = args.experiment.resolve()?;
    let mode: StateMode = pick(args.mode, run.file.mode.as_ref(), "historical")?;
    let history: HistoryScheme = pick(args.history, run.file.history.as_ref(), "mean")?;
    let store = run.load()?;
    if let Some(path) = &run.export {
        let samples = build_state_dataset(&store, mode, &modalities_of(&run, &store), history)?;
        export_jsonl(path, &samples)?;
    }
    let report = experiment::detect(&store, &run.protocol, mode, history)?;
    run.write_outputs(
        &format!("detect-{mode}"),
        &emit_report(&report, ReportFormat::Json)?,
        &emit_report(&report, ReportFormat::Markdown)?,
    )
}

fn change(args: ChangeArgs) -> Result<()> {
    let run = args.experiment.resolve()?;
    let pairs: PairScheme = pick(args.pairs, run.file.pairs.as_ref(), "concat")?;
    let store = run.load()?;
    if let Some(path) = &run.export {
        let samples = build_change_dataset(&store, &modalities_of(&run, &store), pairs)?;
        export_jsonl(path, &samples)?;
    }
    let report = experiment::predict_change(&store, &run.protocol, pairs)?;
    run.write_outputs(
        "change",
        &emit_report(&report, ReportFormat::Json)?,
        &emit_report(&report, ReportFormat::Markdown)?,
    )
}

fn compare(args: CompareArgs) -> Result<()> {
    let run = args.experiment.resolve()?;
    let history: HistoryScheme = pick(args.history, run.file.history.as_ref(), "mean")?;
    let store = run.load()?;
    let cmp = experiment::compare(&store, &run.protocol, history)?;
    run.write_outputs(
        "compare",
        &emit_comparison(&cmp, ReportFormat::Json)?,
        &emit_comparison(&cmp, ReportFormat::Markdown)?,
    )
}

fn modalities_of(run: &Resolved, store: &CohortStore) -> Vec<String> {
    if run.protocol.modalities.is_empty() {
        store.modalities.iter().map(|m| m.name.clone()).collect()
    } else {
        run.protocol.modalities.clone()
    }
}

fn report(args: ReportArgs) -> Result<()> {
    let format = match args.format.as_str() {
        "markdown" | "md" => ReportFormat::Markdown,
        "json" => ReportFormat::Json,
        other => bail!("unknown format `{other}` (expected markdown or json)"),
    };
    let text = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let rendered = match parse_report(&text) {
        Ok(report) => emit_report(&report, format)?,
        Err(_) => emit_comparison(
            &parse_comparison(&text).with_context(|| format!("{} is neither a report nor a comparison", args.input.display()))?,
            format,
        )?,
    };
    print!("{rendered}");
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("LONGICOG_THREADS") {
        let n: usize = raw
            .parse()
            .with_context(|| format!("LONGICOG_THREADS must be a positive integer, got `{raw}`"))?;
        if n == 0 {
            bail!("LONGICOG_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Synth(a) => synth(a)?,
        Command::Ingest(a) => ingest(a)?,
        Command::Validate(a) => return validate(a),
        Command::Detect(a) => detect(a)?,
        Command::Change(a) => change(a)?,
        Command::Compare(a) => compare(a)?,
        Command::Report(a) => report(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
