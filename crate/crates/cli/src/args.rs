use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mtkit::corpus::Subset;
use mtkit::decoding::StopRule;
use mtkit::{Direction, LanguageTag, Temperature};

#[derive(Debug, Parser)]
#[command(name = "mtkit", version, about = "Many-to-many translation data and training toolkit")]
pub struct Cli {
    /// Seed for every random choice in the command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reformat, deduplicate and filter raw parallel files into clean shards.
    Preprocess(PreprocessArgs),
    /// Train the shared subword model on the shards of a corpus manifest.
    TrainTokenizer(TokenizerArgs),
    /// Compute direction weights and draw a batch schedule.
    Sample(SampleArgs),
    /// Back-translate or self-train monolingual text into tagged pairs.
    Augment(AugmentArgs),
    /// Print the group model serving a target language.
    Route(RouteArgs),
    /// Train the least-squares toy suite with temperature or robust weights.
    TrainToy(ToyArgs),
    /// Beam-search translation with the toy lexicon model.
    Decode(DecodeArgs),
    /// Score hypotheses with subword BLEU and ChrF++ per direction and category.
    Evaluate(EvaluateArgs),
    /// Execute a run manifest stage by stage.
    Run(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Preprocess(_) => "preprocess",
            Command::TrainTokenizer(_) => "train-tokenizer",
            Command::Sample(_) => "sample",
            Command::Augment(_) => "augment",
            Command::Route(_) => "route",
            Command::TrainToy(_) => "train-toy",
            Command::Decode(_) => "decode",
            Command::Evaluate(_) => "evaluate",
            Command::Run(_) => "run",
        }
    }
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Directory of raw files named `<src>-<tgt>.{tsv,jsonl,html}`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Corpus manifest to write.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Filter policy (JSON); defaults apply when omitted.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Directory for the cleaned JSONL shards.
    #[arg(long)]
    pub out: PathBuf,
    /// Count lengths in subword tokens instead of whitespace words.
    #[arg(long)]
    pub tokenizer: Option<PathBuf>,
    /// Directory of `<lang>.txt` samples for the language detector.
    #[arg(long)]
    pub langid_samples: Option<PathBuf>,
    /// Subset flags for every direction (default: the built-in direction table).
    #[arg(long, value_delimiter = ',')]
    pub subsets: Option<Vec<Subset>>,
}

#[derive(Debug, Args)]
pub struct TokenizerArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    pub alpha: f64,
    #[arg(long, default_value_t = 4096)]
    pub vocab_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleMode {
    Temperature,
    Dro,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = SampleMode::Temperature)]
    pub mode: SampleMode,
    /// Temperature; in dro mode it sets the reference distribution.
    #[arg(long, default_value = "3.3333333333333335")]
    pub tau: Temperature,
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    /// JSON map from direction to baseline loss.
    #[arg(long)]
    pub baselines: Option<PathBuf>,
    /// JSON map from direction to current loss (required in dro mode).
    #[arg(long)]
    pub losses: Option<PathBuf>,
    /// Only directions flagged with this subset.
    #[arg(long)]
    pub subset: Option<Subset>,
    #[arg(long, default_value_t = 1000)]
    pub batches: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AugmentMode {
    Bt,
    St,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long, value_enum)]
    pub mode: AugmentMode,
    /// Monolingual text, one sentence per line (target side for bt, source side for st).
    #[arg(long)]
    pub mono: PathBuf,
    #[arg(long)]
    pub src: LanguageTag,
    #[arg(long)]
    pub tgt: LanguageTag,
    /// `identity` or `toy-model:<path>`.
    #[arg(long, default_value = "identity")]
    pub translator: String,
    /// Cap on emitted pairs (default: 1M English-centric, 500k otherwise).
    #[arg(long)]
    pub cap: Option<usize>,
    #[arg(long, default_value = "TBD0")]
    pub tag: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    #[arg(long)]
    pub target: LanguageTag,
    /// JSON model registry keyed by group id.
    #[arg(long)]
    pub registry: PathBuf,
    /// Group table override (JSON).
    #[arg(long)]
    pub groups: Option<PathBuf>,
    /// Also write the decision as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ToyMode {
    Erm,
    Dro,
}

#[derive(Debug, Args)]
pub struct ToyArgs {
    /// Task suite (JSON).
    #[arg(long)]
    pub suite: PathBuf,
    #[arg(long, value_enum, default_value_t = ToyMode::Erm)]
    pub mode: ToyMode,
    #[arg(long, default_value = "1")]
    pub tau: Temperature,
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lr: f64,
    #[arg(long, default_value_t = 10)]
    pub checkpoint_every: usize,
    /// JSON array of per-task baseline losses (dro mode).
    #[arg(long)]
    pub baselines: Option<PathBuf>,
    /// Number of trailing checkpoints to average.
    #[arg(long, default_value_t = 10)]
    pub average: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Lexicon model (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// JSONL sentence pairs, or plain text when `--direction` is given.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub direction: Option<Direction>,
    #[arg(long, default_value_t = 4)]
    pub beam: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lenpen: f64,
    #[arg(long, default_value_t = 128)]
    pub max_len: usize,
    #[arg(long, value_parser = parse_stop, default_value = "finished")]
    pub stop: StopRule,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_stop(s: &str) -> Result<StopRule, String> {
    match s {
        "finished" => Ok(StopRule::Finished),
        "bound" => Ok(StopRule::Bound),
        _ => Err(format!("unknown stop rule `{s}` (expected finished or bound)")),
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub tokenizer: PathBuf,
    /// One direction per line, aligned with the hypotheses.
    #[arg(long)]
    pub directions: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Where to write the completed record (default: `<manifest>.record.json`).
    #[arg(long)]
    pub record: Option<PathBuf>,
}
