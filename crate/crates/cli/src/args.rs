use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "evbias", version, about = "Corpus-level event gender-bias analysis")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,

    /// More log output (repeatable).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,

    /// Only log errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand. Each overrides the matching key of
/// the config file.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Corpus JSONL.
    #[arg(long, global = true, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Annotation JSONL from an external detector, used instead of the lexicon.
    #[arg(long, global = true, value_name = "FILE")]
    pub annotations: Option<PathBuf>,
    /// Trigger lexicon (`lemma[<TAB>type]` lines).
    #[arg(long, global = true, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    /// Biography section to analyse (default: career).
    #[arg(long, global = true)]
    pub section: Option<String>,
    /// Restrict to one occupation.
    #[arg(long, global = true)]
    pub occupation: Option<String>,
    /// Events per gender in the top lists.
    #[arg(short = 'k', long = "top", global = true)]
    pub k: Option<usize>,
    /// Minimum combined count for an event to be ranked.
    #[arg(long, global = true)]
    pub min_count: Option<u64>,
    /// Add 0.5 to every count so one-sided events are ranked.
    #[arg(long, global = true)]
    pub smoothing: bool,
    /// Recall gap above which counts are calibrated (`inf` disables).
    #[arg(long, global = true)]
    pub gate: Option<f64>,
    /// Most skewed events per gender considered for harvesting.
    #[arg(long, global = true)]
    pub window: Option<usize>,
    /// Leading context sentences kept in templates.
    #[arg(long, global = true)]
    pub context: Option<usize>,
    /// Substitution names, `F|M<TAB>name` lines.
    #[arg(long, global = true, value_name = "FILE")]
    pub names: Option<PathBuf>,
    /// Pronoun and attribute swap table.
    #[arg(long, global = true, value_name = "FILE")]
    pub swaps: Option<PathBuf>,
    /// WEAT attribute words, `A|B<TAB>token` lines.
    #[arg(long, global = true, value_name = "FILE")]
    pub attributes: Option<PathBuf>,
    /// Stop words excluded from WEAT*, one per line.
    #[arg(long, global = true, value_name = "FILE")]
    pub stop_words: Option<PathBuf>,
    /// Text vectors, `token f1 … fd` per line.
    #[arg(long, global = true, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Review file of templates.
    #[arg(long, global = true, value_name = "FILE")]
    pub review: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Balance female/male documents per occupation by seeded downsampling.
    #[arg(long, global = true)]
    pub balance: bool,
    /// Seed for balanced downsampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

impl ConfigArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.to_string_lossy().into_owned());
        let overrides: Vec<(&str, Option<String>)> = vec![
            ("corpus", path(&self.corpus)),
            ("annotations", path(&self.annotations)),
            ("lexicon", path(&self.lexicon)),
            ("section", self.section.clone()),
            ("occupation", self.occupation.clone()),
            ("k", self.k.map(|v| v.to_string())),
            ("min_count", self.min_count.map(|v| v.to_string())),
            ("smoothing", self.smoothing.then(|| "true".into())),
            ("gate", self.gate.map(|v| v.to_string())),
            ("window", self.window.map(|v| v.to_string())),
            ("context", self.context.map(|v| v.to_string())),
            ("names", path(&self.names)),
            ("swaps", path(&self.swaps)),
            ("attributes", path(&self.attributes)),
            ("stop_words", path(&self.stop_words)),
            ("embeddings", path(&self.embeddings)),
            ("review", path(&self.review)),
            ("out", path(&self.out)),
            ("balance", self.balance.then(|| "true".into())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("threads", self.threads.map(|v| v.to_string())),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, &v, None).map_err(CliError::Validation)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus and print its statistics table.
    Ingest,
    /// Detect event triggers and write them as annotation JSONL.
    Detect,
    /// Rank events by odds ratio and write the top lists.
    Rank,
    /// Harvest templates, generate synthetic data, or calibrate the ranking.
    Calibrate(CalibrateArgs),
    /// Score event lists and slice vocabularies against gender attributes.
    Weat(WeatArgs),
    /// Percentiles of the extracted events in each gender's frequency list.
    Percentile,
    /// Score a detector against gold annotations.
    Eval(EvalArgs),
    /// Write the combined markdown report and its data files.
    Report,
}

#[derive(Debug, Default, Args)]
pub struct CalibrateArgs {
    /// Write candidate templates to review.jsonl instead of calibrating.
    #[arg(long, conflicts_with = "emit_synthetic")]
    pub harvest: bool,
    /// Harvest these events instead of the most skewed ones.
    #[arg(long = "event", value_name = "LEMMA")]
    pub events: Vec<String>,
    /// Write the synthetic instances of verified templates as corpus JSONL.
    #[arg(long)]
    pub emit_synthetic: bool,
    /// External detections over the synthetic corpus, used instead of the lexicon.
    #[arg(long, value_name = "FILE")]
    pub synthetic_annotations: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct WeatArgs {
    /// Comma-separated female event words (default: the female top list).
    #[arg(long, value_delimiter = ',')]
    pub female_events: Vec<String>,
    /// Comma-separated male event words (default: the male top list).
    #[arg(long, value_delimiter = ',')]
    pub male_events: Vec<String>,
}

#[derive(Debug, Default, Args)]
pub struct EvalArgs {
    /// Gold annotation JSONL.
    #[arg(long, value_name = "FILE")]
    pub gold: PathBuf,
    /// Predicted annotation JSONL (default: the lexicon detector).
    #[arg(long, value_name = "FILE")]
    pub predicted: Option<PathBuf>,
    /// Match on lemma within a sentence instead of exact spans.
    #[arg(long)]
    pub relaxed: bool,
}
