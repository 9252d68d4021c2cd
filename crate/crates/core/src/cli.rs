//! The `nertag` command line: `train`, `predict`, `evaluate` and `inspect`.
//!
//! Settings come from built-in defaults, then an optional flat `key=value`
//! file given with `--config`, then flags; later sources win. Exit codes are
//! 0 on success, 1 for usage errors, 2 for data errors and 3 for numeric
//! failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::conll::{load_embeddings, parse_conll, write_conll, Corpus, EmbeddingSet, ParseOptions};
use crate::error::{Error, Result};
use crate::metrics::{error_breakdown, score, ScoreOptions};
use crate::tagscheme::{repair_bio, RepairMode, TagVocabulary, DEFAULT_ENTITY_TYPES};
use crate::training::{
    load_checkpoint, predict_corpus, save_checkpoint, train_with_progress, Architecture,
    TrainConfig,
};

#[derive(Debug, Parser)]
#[command(
    name = "nertag",
    version,
    about = "Named entity tagging with CRF, BiLSTM-CRF and softmax heads over token embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model, keeping the epoch with the best dev macro-F1
    Train(TrainArgs),
    /// Tag a CoNLL file with a trained model
    Predict(PredictArgs),
    /// Score predicted tags against gold tags
    Evaluate(CompareArgs),
    /// Break prediction errors down by type confusion and span boundary
    Inspect(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Kv,
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key=value settings file; flags override its entries
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// 0-based column holding the token [default: 0]
    #[arg(long, value_name = "N")]
    token_col: Option<usize>,
    /// 0-based column holding the tag [default: last field]
    #[arg(long, value_name = "N")]
    tag_col: Option<usize>,
    /// Comma-separated entity types [default: PER,LOC,GRP,CORP,PROD,CW]
    #[arg(long, value_name = "LIST")]
    types: Option<String>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Labeled training file
    #[arg(long, value_name = "FILE")]
    train_file: Option<PathBuf>,
    /// Labeled dev file used for model selection
    #[arg(long, value_name = "FILE")]
    dev_file: Option<PathBuf>,
    /// Per-sentence token vectors covering the train and dev files
    /// [default: learn an embedding table]
    #[arg(long, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    /// Where to write the checkpoint; the epoch log goes to <FILE>.log
    #[arg(long, value_name = "FILE")]
    checkpoint: Option<PathBuf>,
    /// Model architecture: crf, bilstm-crf or linear [default: crf]
    #[arg(long, value_name = "ARCH")]
    arch: Option<Architecture>,
    /// Training epochs [default: 10]
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    /// Dropout rate in [0, 1); 0.2 to 0.5 works well [default: 0.3]
    #[arg(long, value_name = "RATE")]
    dropout: Option<f64>,
    /// Lowest learning rate of the triangular cycle [default: 1e-6]
    #[arg(long, value_name = "LR")]
    lr_min: Option<f64>,
    /// Highest learning rate of the triangular cycle [default: 1e-4]
    #[arg(long, value_name = "LR")]
    lr_max: Option<f64>,
    /// Learning-rate cycle length in updates [default: two epochs]
    #[arg(long, value_name = "STEPS")]
    cycle_length: Option<usize>,
    /// BiLSTM hidden size per direction [default: 256]
    #[arg(long, value_name = "N")]
    hidden: Option<usize>,
    /// Width of the softmax head's hidden layer [default: 512]
    #[arg(long, value_name = "N")]
    fc_size: Option<usize>,
    /// Width of learned embeddings [default: 64]
    #[arg(long, value_name = "N")]
    embedding_dim: Option<usize>,
    /// Random seed for initialization, shuffling and dropout [default: 42]
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Report format [default: text]
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    common: Common,
    /// Checkpoint written by `train`
    #[arg(long, value_name = "FILE")]
    checkpoint: Option<PathBuf>,
    /// CoNLL file to tag (tag columns, if any, are ignored)
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Per-sentence token vectors for the input, when the model was trained
    /// on supplied vectors
    #[arg(long, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    /// Output file [default: standard output]
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Decode only BIO-valid sequences [default: false for CRF models, true
    /// for linear]
    #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true")]
    constrained: Option<bool>,
    /// Repair decoded tags: strict, convert or ignore [default: leave tags as decoded]
    #[arg(long, value_name = "MODE")]
    repair: Option<RepairMode>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Gold CoNLL file
    #[arg(long, value_name = "FILE")]
    gold: Option<PathBuf>,
    /// Predicted CoNLL file; sentences are matched to gold by id
    #[arg(long, value_name = "FILE")]
    pred: Option<PathBuf>,
    /// How invalid BIO in predictions is handled: strict, convert or ignore
    /// [default: convert]
    #[arg(long, value_name = "MODE")]
    repair: Option<RepairMode>,
    /// Report format [default: text]
    #[arg(long, value_enum)]
    format: Option<Format>,
}

enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

const CLI_KEYS: &[&str] = &[
    "train_file",
    "dev_file",
    "input",
    "gold",
    "pred",
    "checkpoint",
    "embeddings",
    "output",
    "constrained",
    "repair",
    "token_col",
    "tag_col",
    "types",
    "format",
];

/// Entries of a `--config` file, keys normalized to underscores.
#[derive(Default)]
struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = fs::read_to_string(path).map_err(|e| file_error(path, e))?;
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: String| CliError::Usage(format!("{}:{}: {m}", path.display(), i + 1));
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, found `{line}`")))?;
            let key = k.trim().replace('-', "_");
            let value = v.trim().to_string();
            let training = TrainConfig::default()
                .set(&key, &value)
                .map_err(|e| bad(e.to_string()))?;
            if !training && !CLI_KEYS.contains(&key.as_str()) {
                return Err(bad(format!("unknown setting `{key}`")));
            }
            entries.insert(key, value);
        }
        Ok(ConfigFile { entries })
    }

    /// The flag if given, else the file entry.
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.entries
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Usage(format!("config `{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    fn path(&self, flag: Option<PathBuf>, key: &str) -> CliResult<PathBuf> {
        self.pick(flag, key)?.ok_or_else(|| {
            CliError::Usage(format!(
                "missing --{} (or `{key}` in the config file)",
                key.replace('_', "-")
            ))
        })
    }
}

fn file_error(path: &Path, source: std::io::Error) -> Error {
    Error::File {
        path: path.display().to_string(),
        source,
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| file_error(path, e))
}

struct DataOptions {
    tags: TagVocabulary,
    types_given: bool,
    parse: ParseOptions,
}

fn data_options(common: &Common, cfg: &ConfigFile) -> CliResult<DataOptions> {
    let types: Option<String> = cfg.pick(common.types.clone(), "types")?;
    let tags = match &types {
        Some(list) => TagVocabulary::from_type_names(
            list.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty()),
        )
        .map_err(|e| CliError::Usage(format!("--types: {e}")))?,
        None => TagVocabulary::from_type_names(DEFAULT_ENTITY_TYPES.iter().copied())?,
    };
    Ok(DataOptions {
        tags,
        types_given: types.is_some(),
        parse: ParseOptions {
            token_column: cfg.pick(common.token_col, "token_col")?.unwrap_or(0),
            tag_column: cfg.pick(common.tag_col, "tag_col")?,
            has_labels: true,
        },
    })
}

fn read_corpus(path: &Path, tags: &TagVocabulary, options: &ParseOptions) -> Result<Corpus> {
    parse_conll(open(path)?, tags, options).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        Error::UnknownTag { line, tag } => Error::UnknownTag {
            line,
            tag: format!("{tag}` in `{}", path.display()),
        },
        other => other,
    })
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let to_stderr = e.use_stderr();
            let sink: &mut dyn Write = if to_stderr { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return if to_stderr { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Evaluate(a) => cmd_compare(a, false, out),
        Command::Inspect(a) => cmd_compare(a, true, out),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(CliError::Run(e)) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn wants_kv(flag: Option<Format>, cfg: &ConfigFile) -> bool {
    match flag {
        Some(f) => f == Format::Kv,
        None => cfg.entries.get("format").is_some_and(|f| f == "kv"),
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Run(Error::Io(e))
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = ConfigFile::load(a.common.config.as_deref())?;
    let data = data_options(&a.common, &cfg)?;
    let train_path = cfg.path(a.train_file, "train_file")?;
    let dev_path = cfg.path(a.dev_file, "dev_file")?;
    let ckpt_path = cfg.path(a.checkpoint, "checkpoint")?;
    let emb_path: Option<PathBuf> = cfg.pick(a.embeddings, "embeddings")?;
    let kv = wants_kv(a.format, &cfg);

    let mut config = TrainConfig::default();
    for (k, v) in &cfg.entries {
        config.set(k, v).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let flags: [(&str, Option<String>); 10] = [
        ("arch", a.arch.map(|v| v.to_string())),
        ("epochs", a.epochs.map(|v| v.to_string())),
        ("dropout", a.dropout.map(|v| v.to_string())),
        ("lr_min", a.lr_min.map(|v| v.to_string())),
        ("lr_max", a.lr_max.map(|v| v.to_string())),
        ("cycle_length", a.cycle_length.map(|v| v.to_string())),
        ("hidden", a.hidden.map(|v| v.to_string())),
        ("fc_size", a.fc_size.map(|v| v.to_string())),
        ("embedding_dim", a.embedding_dim.map(|v| v.to_string())),
        ("seed", a.seed.map(|v| v.to_string())),
    ];
    for (k, v) in flags.iter().filter_map(|(k, v)| v.as_ref().map(|v| (k, v))) {
        config.set(k, v).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let train = read_corpus(&train_path, &data.tags, &data.parse)?;
    let dev = read_corpus(&dev_path, &data.tags, &data.parse)?;
    let embeddings = match &emb_path {
        Some(p) => {
            let mut all = train.sentences().to_vec();
            all.extend_from_slice(dev.sentences());
            let both = Corpus::new(all, data.tags.clone()).map_err(|e| {
                Error::invalid(format!(
                    "train and dev sentence ids must be distinct to share an embedding file: {e}"
                ))
            })?;
            Some(load_embeddings(open(p)?, &both)?)
        }
        None => None,
    };

    write!(out, "{config}").map_err(io)?;
    let mut lines = Vec::new();
    let outcome = train_with_progress(&train, &dev, &config, embeddings.as_ref(), &mut |e| {
        let _ = writeln!(out, "{e}");
        lines.push(e.to_string());
    })?;
    save_checkpoint(&outcome.checkpoint, &ckpt_path)?;
    let log_path = PathBuf::from(format!("{}.log", ckpt_path.display()));
    fs::write(&log_path, lines.join("\n") + "\n").map_err(|e| file_error(&log_path, e))?;

    writeln!(
        out,
        "best epoch {} of {}; checkpoint written to {}",
        outcome.checkpoint.best_epoch,
        config.epochs,
        ckpt_path.display()
    )
    .map_err(io)?;
    let report = if kv { outcome.dev_report.to_kv() } else { outcome.dev_report.to_string() };
    write!(out, "{report}").map_err(io)?;
    Ok(())
}

fn cmd_predict(a: PredictArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = ConfigFile::load(a.common.config.as_deref())?;
    let data = data_options(&a.common, &cfg)?;
    let ckpt_path = cfg.path(a.checkpoint, "checkpoint")?;
    let input_path = cfg.path(a.input, "input")?;
    let emb_path: Option<PathBuf> = cfg.pick(a.embeddings, "embeddings")?;
    let output: Option<PathBuf> = cfg.pick(a.output, "output")?;
    let constrained: Option<bool> = cfg.pick(a.constrained, "constrained")?;
    let repair: Option<RepairMode> = cfg.pick(a.repair, "repair")?;

    let checkpoint = load_checkpoint(&ckpt_path)?;
    let model = &checkpoint.model;
    if data.types_given {
        model.ensure_vocabulary(&data.tags)?;
    }
    let options = ParseOptions {
        has_labels: false,
        ..data.parse
    };
    let input = read_corpus(&input_path, model.tags(), &options)?;
    let embeddings: Option<EmbeddingSet> = match &emb_path {
        Some(p) => Some(load_embeddings(open(p)?, &input)?),
        None => None,
    };
    let constrained = constrained.unwrap_or(model.architecture().constrained_by_default());
    let mut predicted = predict_corpus(model, &input, embeddings.as_ref(), constrained)?;
    if let Some(mode) = repair {
        for tags in &mut predicted {
            *tags = repair_bio(model.tags(), tags, mode)?;
        }
    }
    let tagged = input.with_tags(predicted)?;
    match output {
        Some(path) => {
            let mut buf = Vec::new();
            write_conll(&tagged, &mut buf)?;
            fs::write(&path, buf).map_err(|e| file_error(&path, e))?;
        }
        None => write_conll(&tagged, &mut *out)?,
    }
    Ok(())
}

/// Predicted tags rearranged into gold order by sentence id.
fn align(gold: &Corpus, pred: &Corpus) -> Result<Vec<Vec<usize>>> {
    if gold.len() != pred.len() {
        return Err(Error::Shape(format!(
            "gold has {} sentences, predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    gold.sentences()
        .iter()
        .map(|g| {
            let p = pred
                .get(&g.id)
                .ok_or_else(|| Error::invalid(format!("no prediction for sentence `{}`", g.id)))?;
            if p.tokens != g.tokens {
                return Err(Error::Shape(format!(
                    "sentence `{}`: gold has {} tokens, prediction has {} (or the tokens differ)",
                    g.id,
                    g.len(),
                    p.len()
                )));
            }
            Ok(p.tags.clone().expect("parsed with labels"))
        })
        .collect()
}

fn cmd_compare(a: CompareArgs, inspect: bool, out: &mut dyn Write) -> CliResult<()> {
    let cfg = ConfigFile::load(a.common.config.as_deref())?;
    let data = data_options(&a.common, &cfg)?;
    let gold_path = cfg.path(a.gold, "gold")?;
    let pred_path = cfg.path(a.pred, "pred")?;
    let repair: Option<RepairMode> = cfg.pick(a.repair, "repair")?;
    let kv = wants_kv(a.format, &cfg);

    let gold = read_corpus(&gold_path, &data.tags, &data.parse)?;
    let pred = read_corpus(&pred_path, &data.tags, &data.parse)?;
    let predicted = align(&gold, &pred)?;
    let options = ScoreOptions {
        repair: repair.unwrap_or_default(),
    };
    let report = score(&gold, &predicted, options)?;
    let text = if inspect {
        let breakdown = error_breakdown(&gold, &predicted, options)?;
        if kv {
            format!(
                "{}false_negatives={}\nfalse_positives={}\nboundary_errors={}\ntype_errors={}\n",
                report.to_kv(),
                breakdown.false_negatives.len(),
                breakdown.false_positives.len(),
                breakdown.boundary_errors.len(),
                breakdown.type_errors.len()
            )
        } else {
            breakdown.render(&report)
        }
    } else if kv {
        report.to_kv()
    } else {
        format!(
            "{report}invalid transitions in predictions: {}\n",
            report.invalid_transitions
        )
    };
    write!(out, "{text}").map_err(io)?;
    Ok(())
}
