//! `mteval` — train and run MT evaluation models, build human-judgment
//! targets, and evaluate metrics at segment level.
//!
//! Exit codes: 0 success, 1 data validation failure, 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser)]
#[command(name = "mteval", version, about = "MT evaluation models and metrics")]
struct Cli {
    /// Bound on scoring parallelism (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log verbosity: error, warn, info, debug, trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LexicalMetric {
    Bleu,
    Chrf,
}

#[derive(Subcommand)]
enum Command {
    /// Train a regression model on scored tuples.
    TrainEstimator {
        #[arg(long)]
        config: PathBuf,
        /// Eval-tuple TSV: src, hyp, ref, score.
        #[arg(long)]
        data: PathBuf,
        /// Checkpoint output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a ranking model on relative-ranking pairs.
    TrainRanker {
        #[arg(long)]
        config: PathBuf,
        /// Ranking TSV: lang-pair, seg-id, systems, texts.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score segments with a trained model.
    Score {
        #[arg(long)]
        model: PathBuf,
        /// Triple TSV (src, hyp, ref[, score]) or ranking TSV.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Score from the reference anchor alone (ranking models only).
        #[arg(long)]
        reference_only: bool,
    },
    /// Build regression targets from post-edited data.
    Hter {
        /// Post-edit TSV: src, hyp, ref, pe.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Plain edit distance without block shifts.
        #[arg(long)]
        no_shifts: bool,
    },
    /// Score severity-annotated data onto [0, 1] regression targets.
    MqmScore {
        /// Annotation TSV: src, hyp, ref, minor, major, critical.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert direct assessments into relative-ranking pairs.
    DarrConvert {
        /// Assessment TSV: lang-pair, seg-id, system, src, hyp, ref, da-score.
        #[arg(long)]
        data: PathBuf,
        /// Minimum score difference (strict) for a pair to count.
        #[arg(long, default_value_t = 25.0)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlate metric scores with ranking pairs.
    Evaluate {
        /// Pair-score TSV produced by `score` on a ranking file.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Built-in lexical metric to score with instead.
        #[arg(long)]
        metric: Option<LexicalMetric>,
        #[arg(long)]
        darr: PathBuf,
        /// Comma-separated top-system slice sizes, e.g. 10,8,6,4.
        #[arg(long)]
        top_n: Option<String>,
        /// Assessment TSV for deriving system rankings (needed by --top-n).
        #[arg(long)]
        da: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare reference-only and source+reference ranking models.
    AblateSource {
        #[arg(long)]
        config: PathBuf,
        /// Training ranking TSV.
        #[arg(long)]
        train: PathBuf,
        /// Held-out ranking TSV to evaluate both arms on.
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Errors that are the caller's fault (flag combinations, not file contents).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::TrainEstimator { config, data, out } => {
            commands::train_estimator(&config, &data, &out)
        }
        Command::TrainRanker { config, data, out } => commands::train_ranker(&config, &data, &out),
        Command::Score {
            model,
            data,
            out,
            reference_only,
        } => commands::score(&model, &data, &out, reference_only),
        Command::Hter { data, out, no_shifts } => commands::hter(&data, &out, no_shifts),
        Command::MqmScore { data, out } => commands::mqm_score(&data, &out),
        Command::DarrConvert { data, threshold, out } => {
            commands::darr_convert(&data, threshold, &out)
        }
        Command::Evaluate {
            scores,
            metric,
            darr,
            top_n,
            da,
            out,
        } => {
            let source = match (scores, metric) {
                (Some(path), None) => commands::ScoreSource::File(path),
                (None, Some(LexicalMetric::Bleu)) => commands::ScoreSource::Bleu,
                (None, Some(LexicalMetric::Chrf)) => commands::ScoreSource::Chrf,
                _ => {
                    return Err(UsageError(
                        "evaluate needs exactly one of --scores or --metric".into(),
                    )
                    .into())
                }
            };
            let top_n = match top_n {
                None => None,
                Some(list) => Some(parse_top_n(&list)?),
            };
            commands::evaluate(source, &darr, top_n, da.as_deref(), &out)
        }
        Command::AblateSource {
            config,
            train,
            test,
            out,
        } => commands::ablate_source(&config, &train, &test, &out),
    }
}

fn parse_top_n(spec: &str) -> anyhow::Result<Vec<usize>> {
    spec.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| UsageError(format!("bad --top-n entry {part:?}")).into())
        })
        .collect()
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.is::<UsageError>() {
        2
    } else {
        1
    }
}

fn init_logging(level: &str) {
    let filter = match level {
        "error" | "warn" | "info" | "debug" | "trace" => level,
        other => {
            eprintln!("unknown log level {other:?}, using warn");
            "warn"
        }
    };
    let _ = env_logger::Builder::new()
        .parse_filters(filter)
        .format_timestamp(None)
        .try_init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli.log_level);
    let threads = cli.threads;
    let result = mteval::parallel::with_thread_limit(threads, || run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            for cause in err.chain().skip(1) {
                eprintln!("  caused by: {cause}");
            }
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// First non-comment line of a file, for schema sniffing.
pub(crate) fn peek_header(path: &Path) -> anyhow::Result<String> {
    use std::io::BufRead;
    let file = std::fs::File::open(path)
        .map_err(|e| anyhow::anyhow!("cannot open {}: {e}", path.display()))?;
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if !line.starts_with('#') {
            return Ok(line);
        }
    }
    anyhow::bail!("{} is empty", path.display())
}
