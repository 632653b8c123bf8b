//! The `score`, `sample` and `analyze` stages.
//!
//! `score` writes into the output directory:
//! `density.csv`/`density.json`, `model.bin`/`model.json`, `scores.csv` and
//! the run record `scores.json` (plus `features.bin`/`features.json` when
//! asked). `sample` and `analyze` refuse to run when the input file or
//! `scores.csv` no longer match the hashes in `scores.json`.
//!
//! Every stage computes all of its outputs in memory before touching the
//! output directory, and no output depends on the thread count.

use std::fs;
use std::path::{Path, PathBuf};

use abnormal_core::{
    build_matrix, fit_density, fit_moments, moments_stats, pearson, regularized_factorize, score_all, select,
    Corpus, DensityTable, EpsilonPolicy, Executor, FactoredModel, FeatureMatrix, PolicyEcho, ScoreVector,
    Selection, TokenizerConfig,
};
use serde::{Deserialize, Serialize};

use crate::config::{InputFormat, RunConfig};
use crate::corpus::{ingest_jsonl, ingest_squad, write_subset, FieldMap, SubsetFormat};
use crate::error::{AppError, Result};
use crate::formats::{
    json_bytes, read_scores, read_selection_csv, sha256_hex, write_all_or_nothing, write_density,
    write_features, write_model, write_scores, write_selection_csv,
};
use crate::report::{emit_report, Manifest, ManifestEntry, PearsonEntry, ReportInputs};

pub struct LoadedInput {
    pub path: PathBuf,
    pub format: InputFormat,
    pub corpus: Corpus,
    pub sha256: String,
    pub bytes: usize,
}

pub fn load_input(path: &Path, format: InputFormat, fields: &FieldMap) -> Result<LoadedInput> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => AppError::MissingInput(path.to_path_buf()),
        _ => AppError::io(path, e),
    })?;
    let format = format.resolve(path);
    let source = path.display().to_string();
    let corpus = match format {
        InputFormat::Jsonl => ingest_jsonl(bytes.as_slice(), fields, &source)?,
        _ => ingest_squad(bytes.as_slice(), &source)?,
    };
    if corpus.is_empty() {
        return Err(AppError::Schema {
            path: "$".into(),
            message: format!("{source} contains no examples"),
        });
    }
    Ok(LoadedInput {
        path: path.to_path_buf(),
        format,
        corpus,
        sha256: sha256_hex(&bytes),
        bytes: bytes.len(),
    })
}

/// Feature settings that determine a model; their hash is stored with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub order: usize,
    pub tokenizer: TokenizerConfig,
    pub max_length: Option<usize>,
}

impl FeatureConfig {
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(&serde_json::to_vec(self)?))
    }
}

pub struct Scored {
    pub table: DensityTable,
    pub model: FactoredModel,
    pub scores: ScoreVector,
    pub truncated_rows: usize,
    /// Kept only when requested; it can be large.
    pub matrix: Option<FeatureMatrix>,
}

/// Density table, moments, factorization and scores for one corpus.
pub fn score_corpus<E: Executor + ?Sized>(
    exec: &E,
    corpus: &Corpus,
    features: &FeatureConfig,
    policy: &EpsilonPolicy,
    keep_matrix: bool,
) -> Result<Scored> {
    let table = fit_density(corpus, features.order, &features.tokenizer)?;
    let matrix = build_matrix(exec, corpus, &table, features.max_length)?;
    let moments = fit_moments(exec, &matrix)?;
    let model = regularized_factorize(moments, policy)?;
    let scores = score_all(exec, &model, &matrix)?;
    let truncated_rows = matrix.truncated().iter().filter(|&&t| t).count();
    Ok(Scored {
        table,
        model,
        scores,
        truncated_rows,
        matrix: keep_matrix.then_some(matrix),
    })
}

/// Contents of `scores.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub input: PathBuf,
    pub input_format: InputFormat,
    pub input_sha256: String,
    pub fields: FieldMap,
    pub source: String,
    pub n: usize,
    pub d: usize,
    pub features: FeatureConfig,
    pub feature_config_hash: String,
    pub epsilon_policy: EpsilonPolicy,
    pub epsilon: f64,
    pub score_mean: f64,
    pub truncated_rows: usize,
    pub scores_sha256: String,
}

fn features_of(cfg: &RunConfig) -> FeatureConfig {
    FeatureConfig {
        order: cfg.order,
        tokenizer: cfg.tokenizer,
        max_length: cfg.max_length,
    }
}

pub fn run_score<E: Executor + ?Sized>(exec: &E, cfg: &RunConfig) -> Result<ScoreRecord> {
    cfg.validate()?;
    let input = load_input(cfg.input_path()?, cfg.format, &cfg.fields)?;
    let features = features_of(cfg);
    let hash = features.hash()?;
    let scored = score_corpus(exec, &input.corpus, &features, &cfg.epsilon, cfg.save_features)?;

    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let (mut csv, mut json) = (Vec::new(), Vec::new());
    write_density(&scored.table, &mut csv, &mut json)?;
    files.push(("density.csv".into(), csv));
    files.push(("density.json".into(), json));

    let (mut bin, mut json) = (Vec::new(), Vec::new());
    write_model(&scored.model, &hash, &mut bin, &mut json)?;
    files.push(("model.bin".into(), bin));
    files.push(("model.json".into(), json));

    if let Some(m) = &scored.matrix {
        let (mut bin, mut json) = (Vec::new(), Vec::new());
        write_features(m, &mut bin, &mut json)?;
        files.push(("features.bin".into(), bin));
        files.push(("features.json".into(), json));
    }

    let mut scores_csv = Vec::new();
    write_scores(&input.corpus, &scored.scores, &mut scores_csv)?;
    let record = ScoreRecord {
        input: input.path.clone(),
        input_format: input.format,
        input_sha256: input.sha256.clone(),
        fields: cfg.fields.clone(),
        source: input.corpus.source_descriptor().to_string(),
        n: input.corpus.len(),
        d: scored.model.dim(),
        features,
        feature_config_hash: hash,
        epsilon_policy: cfg.epsilon,
        epsilon: scored.scores.epsilon,
        score_mean: scored.scores.mean(),
        truncated_rows: scored.truncated_rows,
        scores_sha256: sha256_hex(&scores_csv),
    };
    files.push(("scores.csv".into(), scores_csv));
    files.push(("scores.json".into(), json_bytes(&record)?));
    write_all_or_nothing(&cfg.output_dir, &files)?;
    Ok(record)
}

/// A scoring run re-read from disk and checked against its inputs.
pub struct ScoredRun {
    pub record: ScoreRecord,
    pub input: LoadedInput,
    pub scores: ScoreVector,
    pub scores_path: PathBuf,
}

fn read_or_missing(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => AppError::MissingInput(path.to_path_buf()),
        _ => AppError::io(path, e),
    })
}

pub fn load_scored_run(cfg: &RunConfig) -> Result<ScoredRun> {
    let scores_path = cfg.scores_path();
    let record_path = scores_path.with_extension("json");
    let scores_bytes = read_or_missing(&scores_path)?;
    let record: ScoreRecord = serde_json::from_slice(&read_or_missing(&record_path)?).map_err(|e| {
        AppError::Schema {
            path: record_path.display().to_string(),
            message: e.to_string(),
        }
    })?;
    if sha256_hex(&scores_bytes) != record.scores_sha256 {
        return Err(AppError::Stale(format!(
            "{} does not match the hash recorded in {}",
            scores_path.display(),
            record_path.display()
        )));
    }
    let (path, format, fields) = match &cfg.input {
        Some(p) => (p.clone(), cfg.format, cfg.fields.clone()),
        None => (record.input.clone(), record.input_format, record.fields.clone()),
    };
    let input = load_input(&path, format, &fields)?;
    if input.sha256 != record.input_sha256 {
        return Err(AppError::Stale(format!(
            "{} changed since it was scored; rerun `score`",
            path.display()
        )));
    }
    let rows = read_scores(scores_bytes.as_slice())?;
    if rows.len() != input.corpus.len() {
        return Err(AppError::Stale(format!(
            "{} scores for {} examples",
            rows.len(),
            input.corpus.len()
        )));
    }
    if let Some((row, _)) = rows.iter().zip(&input.corpus).find(|(r, ex)| r.id != ex.id) {
        return Err(AppError::Stale(format!("score row {} has id `{}`", row.ordinal, row.id)));
    }
    let scores = ScoreVector {
        scores: rows.into_iter().map(|r| r.score).collect(),
        epsilon: record.epsilon,
    };
    Ok(ScoredRun {
        record,
        input,
        scores,
        scores_path,
    })
}

/// Contents of `selection.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub policy: PolicyEcho,
    pub epsilon: f64,
    pub input_sha256: String,
    pub scores_sha256: String,
    pub subset_file: String,
    pub subset_format: SubsetFormat,
    pub subset_sha256: String,
    pub selection_sha256: String,
    pub written: usize,
}

pub fn run_sample(cfg: &RunConfig) -> Result<SampleRecord> {
    cfg.validate()?;
    let run = load_scored_run(cfg)?;
    let corpus = &run.input.corpus;
    let selection = select(&run.scores.scores, &corpus.char_lengths(), &cfg.selection)?;

    let mut subset = Vec::new();
    let written = write_subset(corpus, &selection, &run.scores, &mut subset, cfg.subset_format)?;
    let mut selection_csv = Vec::new();
    write_selection_csv(corpus, &selection, &run.scores, &mut selection_csv)?;
    let subset_file = match cfg.subset_format {
        SubsetFormat::Jsonl => "subset.jsonl",
        SubsetFormat::Squad => "subset.json",
    };
    let record = SampleRecord {
        policy: selection.policy.clone(),
        epsilon: run.record.epsilon,
        input_sha256: run.record.input_sha256.clone(),
        scores_sha256: run.record.scores_sha256.clone(),
        subset_file: subset_file.into(),
        subset_format: cfg.subset_format,
        subset_sha256: sha256_hex(&subset),
        selection_sha256: sha256_hex(&selection_csv),
        written,
    };
    let files = vec![
        (subset_file.to_string(), subset),
        ("selection.csv".to_string(), selection_csv),
        ("selection.json".to_string(), json_bytes(&record)?),
    ];
    write_all_or_nothing(&cfg.output_dir, &files)?;
    Ok(record)
}

/// The selection written by `sample` for these exact scores, if any.
fn current_selection(cfg: &RunConfig, run: &ScoredRun) -> Result<Option<(Selection, ManifestEntry)>> {
    let csv_path = cfg.output_dir.join("selection.csv");
    let json_path = cfg.output_dir.join("selection.json");
    let (Ok(csv), Ok(json)) = (fs::read(&csv_path), fs::read(&json_path)) else {
        return Ok(None);
    };
    let Ok(record) = serde_json::from_slice::<SampleRecord>(&json) else {
        return Ok(None);
    };
    if record.scores_sha256 != run.record.scores_sha256 || record.selection_sha256 != sha256_hex(&csv) {
        eprintln!("note: ignoring {} (written for other scores)", csv_path.display());
        return Ok(None);
    }
    let mut selection = read_selection_csv(csv.as_slice())?;
    selection.policy = record.policy;
    let entry = ManifestEntry {
        file: csv_path.display().to_string(),
        bytes: csv.len(),
        sha256: record.selection_sha256,
    };
    Ok(Some((selection, entry)))
}

pub fn run_analyze<E: Executor + ?Sized>(exec: &E, cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let run = load_scored_run(cfg)?;
    let corpus = &run.input.corpus;
    let stats = moments_stats(&run.scores.scores)?;
    let lengths: Vec<f64> = corpus.iter().map(|e| e.char_length as f64).collect();

    let mut orders = cfg.orders.clone();
    orders.sort_unstable();
    orders.dedup();
    let mut pearson_by_order = Vec::with_capacity(orders.len());
    for order in orders {
        let other;
        let scores = if order == run.record.features.order {
            &run.scores.scores
        } else {
            let features = FeatureConfig { order, ..run.record.features.clone() };
            other = score_corpus(exec, corpus, &features, &run.record.epsilon_policy, false)?.scores;
            &other.scores
        };
        pearson_by_order.push(match pearson(&lengths, scores) {
            Ok(r) => PearsonEntry { order, r: Some(r), status: "ok".into() },
            Err(abnormal_core::Error::Undefined(_)) => PearsonEntry { order, r: None, status: "undefined".into() },
            Err(e) => return Err(e.into()),
        });
    }

    let mut inputs = vec![
        ManifestEntry {
            file: run.input.path.display().to_string(),
            bytes: run.input.bytes,
            sha256: run.input.sha256.clone(),
        },
        ManifestEntry {
            file: run.scores_path.display().to_string(),
            bytes: fs::metadata(&run.scores_path).map(|m| m.len() as usize).unwrap_or(0),
            sha256: run.record.scores_sha256.clone(),
        },
    ];
    let selection = match current_selection(cfg, &run)? {
        Some((sel, entry)) => {
            inputs.push(entry);
            sel
        }
        None => Selection::empty(),
    };
    let report = ReportInputs {
        corpus,
        scores: &run.scores,
        selection: &selection,
        stats: &stats,
        pearson_by_order: &pearson_by_order,
        order: run.record.features.order,
        dim: run.record.d,
        bins: cfg.bins,
        inputs,
    };
    emit_report(&report, &cfg.output_dir.join("report"))
}
