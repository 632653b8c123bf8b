use std::fs;
use std::path::{Path, PathBuf};

use abnormal_core::{EpsilonPolicy, SelectionSpec, TokenizerConfig};
use serde::{Deserialize, Serialize};

use crate::corpus::{FieldMap, SubsetFormat};
use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// `.jsonl` / `.ndjson` are JSONL, anything else SQuAD.
    Auto,
    Squad,
    Jsonl,
}

impl InputFormat {
    pub fn resolve(self, path: &Path) -> InputFormat {
        match self {
            InputFormat::Auto => match path.extension().and_then(|e| e.to_str()) {
                Some("jsonl" | "ndjson") => InputFormat::Jsonl,
                _ => InputFormat::Squad,
            },
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InputFormat::Auto => "auto",
            InputFormat::Squad => "squad",
            InputFormat::Jsonl => "jsonl",
        }
    }
}

/// Everything a pipeline run depends on. Serializable to and from the
/// `--config` JSON file; command-line flags override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub format: InputFormat,
    pub fields: FieldMap,
    /// n-gram order used for scoring.
    pub order: usize,
    pub tokenizer: TokenizerConfig,
    /// Feature length cap; `None` pads to the longest context.
    pub max_length: Option<usize>,
    pub epsilon: EpsilonPolicy,
    pub selection: SelectionSpec,
    pub subset_format: SubsetFormat,
    pub output_dir: PathBuf,
    /// Scores CSV read by `sample`/`analyze`; defaults to `<output_dir>/scores.csv`.
    pub scores: Option<PathBuf>,
    /// Orders for the length/score correlation in `analyze`.
    pub orders: Vec<usize>,
    pub bins: usize,
    /// Only used for synthetic data generation.
    pub seed: u64,
    pub threads: Option<usize>,
    pub save_features: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            format: InputFormat::Auto,
            fields: FieldMap::default(),
            order: 1,
            tokenizer: TokenizerConfig::default(),
            max_length: None,
            epsilon: EpsilonPolicy::default(),
            selection: SelectionSpec::default(),
            subset_format: SubsetFormat::Jsonl,
            output_dir: PathBuf::from("out"),
            scores: None,
            orders: vec![1],
            bins: 100,
            seed: 0,
            threads: None,
            save_features: false,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => AppError::Config(format!("config file {} not found", path.display())),
            _ => AppError::io(path, e),
        })?;
        serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
    }

    pub fn input_path(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| AppError::Config("no input file given (--input or config `input`)".into()))
    }

    pub fn scores_path(&self) -> PathBuf {
        self.scores
            .clone()
            .unwrap_or_else(|| self.output_dir.join("scores.csv"))
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(AppError::Config("n-gram order must be at least 1".into()));
        }
        if self.orders.contains(&0) {
            return Err(AppError::Config("analysis orders must be at least 1".into()));
        }
        if self.bins < 1 {
            return Err(AppError::Config("histogram needs at least 1 bin".into()));
        }
        if self.max_length == Some(0) {
            return Err(AppError::Config("max_length must be at least 1".into()));
        }
        if let abnormal_core::Strategy::Bucketed { bucket_width: 0 } = self.selection.strategy {
            return Err(AppError::Config("bucket width must be at least 1".into()));
        }
        Ok(())
    }
}
