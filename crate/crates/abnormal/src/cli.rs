//! Command-line front end. Flags override values from `--config`.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use abnormal_core::Strategy;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{InputFormat, RunConfig};
use crate::corpus::SubsetFormat;
use crate::error::{AppError, Result};
use crate::exec::{with_threads, Rayon};
use crate::pipeline::{run_analyze, run_sample, run_score};
use crate::synth::{synth_corpus, write_jsonl, SynthSpec};

pub const DEFAULT_BUCKET_WIDTH: usize = 250;

#[derive(Debug, Parser)]
#[command(name = "abnormal", version, about = "Score QA contexts by abnormality and prune the corpus")]
pub struct Cli {
    /// JSON run configuration; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the density table and moment model, and score every example.
    Score(ScoreArgs),
    /// Select low, high and mean-proximal examples and write the subset.
    Sample(SampleArgs),
    /// Summary statistics, histogram and length correlation report.
    Analyze(AnalyzeArgs),
    /// Write a seeded synthetic JSONL corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// SQuAD v1.1 JSON or JSONL corpus.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// JSONL field holding the context.
    #[arg(long)]
    pub context_field: Option<String>,
    #[arg(long)]
    pub title_field: Option<String>,
    #[arg(long)]
    pub id_field: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub io: InputArgs,
    /// n-gram order.
    #[arg(long)]
    pub order: Option<usize>,
    /// Cap on the feature vector length.
    #[arg(long)]
    pub max_length: Option<usize>,
    /// Keep letter case.
    #[arg(long)]
    pub no_lowercase: bool,
    /// Keep leading and trailing punctuation on tokens.
    #[arg(long)]
    pub keep_punctuation: bool,
    /// Shrinkage base as a fraction of trace(Σ)/d.
    #[arg(long)]
    pub eps_base: Option<f64>,
    #[arg(long)]
    pub eps_growth: Option<f64>,
    #[arg(long)]
    pub eps_max_power: Option<u32>,
    /// Start the shrinkage schedule at the first nonzero ε.
    #[arg(long)]
    pub no_eps_zero: bool,
    /// Also write features.bin / features.json.
    #[arg(long)]
    pub save_features: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Global,
    Bucketed,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub io: InputArgs,
    /// Scores CSV (default: <out>/scores.csv).
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Sets all three set sizes.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub k_low: Option<usize>,
    #[arg(long)]
    pub k_high: Option<usize>,
    #[arg(long)]
    pub k_mean: Option<usize>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Character-length bucket width; implies `--strategy bucketed`.
    #[arg(long)]
    pub bucket_width: Option<usize>,
    /// Let the three sets overlap.
    #[arg(long)]
    pub overlap: bool,
    #[arg(long, value_enum)]
    pub subset_format: Option<SubsetFormat>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// n-gram orders for the length correlation, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<usize>>,
    /// Histogram bin count.
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output JSONL file.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub contexts: usize,
    #[arg(long, default_value_t = 200)]
    pub vocabulary: usize,
    #[arg(long, default_value_t = 20)]
    pub min_tokens: usize,
    #[arg(long, default_value_t = 400)]
    pub max_tokens: usize,
    /// Word frequency exponent; 0 draws words uniformly.
    #[arg(long, default_value_t = 1.0)]
    pub zipf: f64,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl InputArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(p) = &self.input {
            cfg.input = Some(p.clone());
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(f) = &self.context_field {
            cfg.fields.context = f.clone();
        }
        if let Some(f) = &self.title_field {
            cfg.fields.title = f.clone();
        }
        if let Some(f) = &self.id_field {
            cfg.fields.id = f.clone();
        }
    }
}

impl ScoreArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        self.io.apply(cfg);
        if let Some(o) = self.order {
            cfg.order = o;
        }
        if self.max_length.is_some() {
            cfg.max_length = self.max_length;
        }
        if self.no_lowercase {
            cfg.tokenizer.lowercase = false;
        }
        if self.keep_punctuation {
            cfg.tokenizer.strip_edge_punctuation = false;
        }
        if let Some(v) = self.eps_base {
            cfg.epsilon.base_factor = v;
        }
        if let Some(v) = self.eps_growth {
            cfg.epsilon.growth = v;
        }
        if let Some(v) = self.eps_max_power {
            cfg.epsilon.max_power = v;
        }
        if self.no_eps_zero {
            cfg.epsilon.try_zero = false;
        }
        if self.save_features {
            cfg.save_features = true;
        }
    }
}

impl SampleArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        self.io.apply(cfg);
        if let Some(s) = &self.scores {
            cfg.scores = Some(s.clone());
        }
        let sel = &mut cfg.selection;
        if let Some(k) = self.k {
            sel.k_low = k;
            sel.k_high = k;
            sel.k_mean = k;
        }
        if let Some(k) = self.k_low {
            sel.k_low = k;
        }
        if let Some(k) = self.k_high {
            sel.k_high = k;
        }
        if let Some(k) = self.k_mean {
            sel.k_mean = k;
        }
        let current_width = match sel.strategy {
            Strategy::Bucketed { bucket_width } => Some(bucket_width),
            Strategy::Global => None,
        };
        sel.strategy = match (self.strategy, self.bucket_width) {
            (Some(StrategyArg::Global), _) => Strategy::Global,
            (_, Some(w)) => Strategy::Bucketed { bucket_width: w },
            (Some(StrategyArg::Bucketed), None) => Strategy::Bucketed {
                bucket_width: current_width.unwrap_or(DEFAULT_BUCKET_WIDTH),
            },
            (None, None) => sel.strategy,
        };
        if self.overlap {
            sel.disjoint = false;
        }
        if let Some(f) = self.subset_format {
            cfg.subset_format = f;
        }
    }
}

impl AnalyzeArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        self.io.apply(cfg);
        if let Some(s) = &self.scores {
            cfg.scores = Some(s.clone());
        }
        if let Some(o) = &self.orders {
            cfg.orders = o.clone();
        }
        if let Some(b) = self.bins {
            cfg.bins = b;
        }
    }
}

fn base_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if cfg.threads == Some(0) {
        return Err(AppError::Config("--threads must be at least 1".into()));
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<String> {
    let mut cfg = base_config(&cli)?;
    match &cli.command {
        Command::Score(a) => {
            a.apply(&mut cfg);
            let rec = with_threads(cfg.threads, || run_score(&Rayon, &cfg))?;
            Ok(format!(
                "scored {} examples: d = {}, epsilon = {:e}, mean score = {}",
                rec.n, rec.d, rec.epsilon, rec.score_mean
            ))
        }
        Command::Sample(a) => {
            a.apply(&mut cfg);
            let rec = run_sample(&cfg)?;
            Ok(format!(
                "wrote {} records to {}",
                rec.written,
                cfg.output_dir.join(&rec.subset_file).display()
            ))
        }
        Command::Analyze(a) => {
            a.apply(&mut cfg);
            let manifest = with_threads(cfg.threads, || run_analyze(&Rayon, &cfg))?;
            Ok(format!(
                "wrote {} report files to {}",
                manifest.files.len() + 1,
                cfg.output_dir.join("report").display()
            ))
        }
        Command::Synth(a) => {
            let spec = SynthSpec {
                contexts: a.contexts,
                vocabulary: a.vocabulary,
                min_tokens: a.min_tokens,
                max_tokens: a.max_tokens,
                zipf_exponent: a.zipf,
                seed: a.seed.unwrap_or(cfg.seed),
            };
            let corpus = synth_corpus(&spec)?;
            let result = File::create(&a.out)
                .map_err(|e| AppError::io(&a.out, e))
                .and_then(|f| write_jsonl(&corpus, BufWriter::new(f)));
            if let Err(e) = result {
                let _ = std::fs::remove_file(&a.out);
                return Err(e);
            }
            Ok(format!("wrote {} contexts to {}", corpus.len(), a.out.display()))
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
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
    match execute(cli) {
        Ok(msg) => {
            eprintln!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
