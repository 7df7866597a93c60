//! `aggro` command-line driver.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error. Standard output
//! carries only `weighted_f1=<value>` lines (eval, baseline) or prediction
//! rows (predict); everything else goes to standard error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baseline::{extract_features, forest_predict, load_lexicon, train_forest, ForestConfig};
use crate::corpus::{load_dataset, load_unlabeled, ClassLabel, DatasetFormat, LabeledExample};
use crate::error::{Error, Result};
use crate::eval::{confusion, emit_report, random_baseline, weighted_f1, DEFAULT_TRIALS};
use crate::pipeline::{format_epoch_log, train_from_files, TrainSettings, TrainedModel, Variant};
use crate::preprocess::{tokenize_stage, Lemmatizer, PreprocessOptions};

pub const MODEL_FILE: &str = "model.agrm";
pub const VOCAB_STATS_FILE: &str = "vocab_stats.txt";
pub const EPOCH_LOG_FILE: &str = "epoch_log.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";

#[derive(Debug, Parser)]
#[command(name = "aggro", version, about = "Aggression classifier for social-media posts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the attention LSTM and write a model file.
    Train(TrainArgs),
    /// Score a labelled test set with a trained model.
    Eval(EvalArgs),
    /// Classify single posts or an unlabelled file.
    Predict(PredictArgs),
    /// Train and score the lexicon-feature random forest.
    Baseline(BaselineArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Tsv,
}

impl From<Format> for DatasetFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => DatasetFormat::Csv,
            Format::Tsv => DatasetFormat::Tsv,
        }
    }
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse()
}

/// A count, or `none` for no limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Limit(Option<usize>);

fn parse_limit(s: &str) -> std::result::Result<Limit, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(Limit(None));
    }
    s.parse::<usize>()
        .map(|n| Limit(Some(n)))
        .map_err(|_| format!("expected a non-negative integer or 'none', got {s:?}"))
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Labelled training file (id,text,label).
    #[arg(long)]
    train: PathBuf,
    /// Labelled dev file; without it a stratified slice of --train is held out.
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    dev_fraction: f64,
    /// Preset: eng-a, eng-b, hi-a or custom.
    #[arg(long, default_value = "eng-b", value_parser = parse_variant)]
    variant: Variant,
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Token limit per post, or `none`.
    #[arg(long, value_parser = parse_limit)]
    max_len: Option<Limit>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Early-stopping patience in epochs, or `none`.
    #[arg(long, value_parser = parse_limit)]
    patience: Option<Limit>,
    /// Global gradient-norm clip.
    #[arg(long)]
    clip_norm: Option<f64>,
    #[arg(long)]
    init_scale: Option<f64>,
    /// Enable edit-distance-1 spelling correction.
    #[arg(long)]
    spell: bool,
    /// Extra lemmatizer exceptions, one `surface<TAB>lemma` per line.
    #[arg(long)]
    lemma_exceptions: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    min_freq: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Output directory for metrics.txt, confusion.csv and predictions.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write confusion.svg.
    #[arg(long)]
    svg: bool,
    /// Also print the mean weighted F1 of uniform random guessing.
    #[arg(long)]
    random_baseline: bool,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Seed for the random baseline.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// A single post.
    #[arg(long, required_unless_present = "input", conflicts_with = "input")]
    text: Option<String>,
    /// Unlabelled file: one text column, or id,text.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    pos_lexicon: PathBuf,
    #[arg(long)]
    neg_lexicon: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Tree depth limit, or `none`.
    #[arg(long, default_value = "8", value_parser = parse_limit)]
    max_depth: Limit,
    #[arg(long, default_value_t = 2)]
    min_leaf: usize,
    #[arg(long, default_value_t = 3)]
    features_per_split: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    report: ReportArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Baseline(a) => cmd_baseline(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            1
        }
    }
}

fn describe(e: &Error) -> String {
    match e {
        Error::ModelFile(m) if m.is_corrupt() => format!("corrupt model: {m}"),
        other => other.to_string(),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn train_settings(a: &TrainArgs) -> Result<TrainSettings> {
    let mut cfg = a.variant.config();
    cfg.seed = a.seed;
    if let Some(v) = a.embed_dim {
        cfg.embed_dim = v;
    }
    if let Some(v) = a.hidden_dim {
        cfg.hidden_dim = v;
    }
    if let Some(v) = a.dropout {
        cfg.dropout_rate = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.max_len {
        cfg.max_len = v.0;
    }
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.patience {
        cfg.patience = v.0;
    }
    if let Some(v) = a.clip_norm {
        cfg.clip_norm = Some(v);
    }
    if let Some(v) = a.init_scale {
        cfg.init_scale = v;
    }
    let lemmatizer = match &a.lemma_exceptions {
        Some(p) => Lemmatizer::with_exception_file(p)?,
        None => Lemmatizer::default(),
    };
    Ok(TrainSettings {
        variant: a.variant,
        model: cfg,
        min_freq: a.min_freq,
        dev_fraction: a.dev_fraction,
        enable_spell: a.spell,
        lemmatizer,
        format: a.format.into(),
    })
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let settings = train_settings(&a)?;
    let report = train_from_files(&a.train, a.dev.as_deref(), &settings)?;
    for e in &report.log {
        eprintln!(
            "epoch {:>3}  loss {:.6}  dev weighted F1 {:.4}",
            e.epoch, e.train_loss, e.dev_weighted_f1
        );
    }
    let bytes = report.model.to_file().to_bytes()?;
    let outputs = [
        (MODEL_FILE, bytes),
        (VOCAB_STATS_FILE, report.stats.to_text().into_bytes()),
        (EPOCH_LOG_FILE, format_epoch_log(&report.log).into_bytes()),
    ];
    create_dir(&a.out)?;
    let mut written = Vec::new();
    for (name, contents) in outputs {
        let path = a.out.join(name);
        if let Err(e) = write_file(&path, &contents) {
            for p in written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(e);
        }
        written.push(path);
    }
    Ok(())
}

struct Scored {
    ids: Vec<String>,
    gold: Vec<ClassLabel>,
    pred: Vec<ClassLabel>,
    probs: Vec<[f64; 3]>,
}

fn write_predictions(path: &Path, s: &Scored) -> Result<()> {
    let io = |e: csv::Error| Error::Malformed {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["id", "gold", "predicted", "p_NAG", "p_CAG", "p_OAG"])
        .map_err(io)?;
    for i in 0..s.ids.len() {
        let p = s.probs[i].map(|v| format!("{v:?}"));
        w.write_record([
            s.ids[i].as_str(),
            s.gold[i].name(),
            s.pred[i].name(),
            &p[0],
            &p[1],
            &p[2],
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn report(s: &Scored, args: &ReportArgs, seed: u64) -> Result<()> {
    let m = confusion(&s.gold, &s.pred)?;
    let metrics = weighted_f1(&m);
    emit_report(&metrics, &m, &args.out, args.svg)?;
    write_predictions(&args.out.join(PREDICTIONS_FILE), s)?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "weighted_f1={:?}", metrics.weighted_f1);
    if args.random_baseline {
        let mean = random_baseline(&s.gold, seed, args.trials)?;
        let _ = writeln!(out, "random_baseline_weighted_f1={mean:?}");
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let model = TrainedModel::load(&a.model)?;
    let test = model.load_labeled(&a.test, a.format.into())?;
    if test.examples.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let scored = model.predict_examples(&test.examples)?;
    let s = Scored {
        ids: test.examples.iter().map(|e| e.id.clone()).collect(),
        gold: test.examples.iter().map(|e| e.label).collect(),
        pred: scored.iter().map(|(l, _)| *l).collect(),
        probs: scored.iter().map(|(_, p)| probs3(p.as_slice())).collect(),
    };
    report(&s, &a.report, a.seed)
}

fn probs3(p: &[f64]) -> [f64; 3] {
    [p[0], p[1], p[2]]
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let model = TrainedModel::load(&a.model)?;
    let texts: Vec<String> = match (&a.text, &a.input) {
        (Some(t), _) => vec![t.clone()],
        (None, Some(p)) => load_unlabeled(p, a.format.into())?
            .into_iter()
            .map(|p| p.text)
            .collect(),
        (None, None) => unreachable!("clap enforces one input"),
    };
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let mut out = std::io::stdout().lock();
    for (label, p) in model.predict_texts(&refs)? {
        let _ = writeln!(out, "{label}\t{:.6}\t{:.6}\t{:.6}", p[0], p[1], p[2]);
    }
    Ok(())
}

fn cmd_baseline(a: BaselineArgs) -> Result<()> {
    let lexicon = load_lexicon(&a.pos_lexicon, &a.neg_lexicon)?;
    let opts = PreprocessOptions::default();
    let train = load_dataset(&a.train, a.format.into(), &opts)?;
    let test = load_dataset(&a.test, a.format.into(), &opts)?;
    if test.examples.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let features = |ex: &[LabeledExample]| {
        ex.iter()
            .map(|e| extract_features(&tokenize_stage(&e.raw_text), &lexicon))
            .collect::<Vec<_>>()
    };
    let cfg = ForestConfig {
        num_trees: a.trees,
        max_depth: a.max_depth.0,
        min_leaf: a.min_leaf,
        features_per_split: a.features_per_split,
    };
    let labels: Vec<ClassLabel> = train.examples.iter().map(|e| e.label).collect();
    let forest = train_forest(&features(&train.examples), &labels, &cfg, a.seed)?;
    let votes: Vec<_> = features(&test.examples)
        .iter()
        .map(|f| forest_predict(&forest, f))
        .collect();
    let s = Scored {
        ids: test.examples.iter().map(|e| e.id.clone()).collect(),
        gold: test.examples.iter().map(|e| e.label).collect(),
        pred: votes.iter().map(|(l, _)| *l).collect(),
        probs: votes.iter().map(|(_, p)| *p).collect(),
    };
    report(&s, &a.report, a.seed)
}
