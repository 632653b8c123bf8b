//! On-disk artifact formats.
//!
//! | artifact       | payload                                  | sidecar                       |
//! |----------------|------------------------------------------|-------------------------------|
//! | density table  | CSV `ngram_key,count`                    | JSON `n, total, tokenizer`    |
//! | feature matrix | LE f64, row-major                        | JSON `rows, cols, true_lengths` |
//! | moment model   | LE f64: mean, covariance, factor         | JSON `n, d, epsilon, hash`    |
//! | scores         | CSV `ordinal,id,char_length,score`       | JSON run record (pipeline)    |
//! | selection      | CSV `ordinal,id,category,score,char_length` | JSON manifest (pipeline)  |
//!
//! Floats in CSV use Rust's shortest round-trip formatting.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use abnormal_core::linalg::Cholesky;
use abnormal_core::{
    Category, Corpus, DensityTable, FactoredModel, FeatureMatrix, MomentModel, ScoreVector, Selection,
    TokenizerConfig,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn f64s_to_le(values: &[f64], out: &mut Vec<u8>) {
    out.reserve(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn le_to_f64s(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(AppError::Consistency(format!(
            "binary payload of {} bytes is not a whole number of f64 values",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHeader {
    pub n: usize,
    pub total: u64,
    pub entries: usize,
    pub tokenizer: TokenizerConfig,
}

pub fn write_density(table: &DensityTable, csv_sink: impl Write, json_sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(csv_sink);
    w.write_record(["ngram_key", "count"])?;
    for (key, count) in table.iter() {
        w.write_record([key, &count.to_string()])?;
    }
    w.flush()?;
    let header = DensityHeader {
        n: table.order(),
        total: table.total(),
        entries: table.len(),
        tokenizer: *table.tokenizer(),
    };
    write_json(json_sink, &header)
}

pub fn read_density(csv_source: impl Read, json_source: impl Read) -> Result<DensityTable> {
    let header: DensityHeader = serde_json::from_reader(json_source)?;
    let mut counts = BTreeMap::new();
    for row in csv::Reader::from_reader(csv_source).deserialize() {
        let (key, count): (String, u64) = row?;
        counts.insert(key, count);
    }
    let table = DensityTable::from_counts(header.n, header.tokenizer, counts)?;
    if table.total() != header.total {
        return Err(AppError::Consistency(format!(
            "density header total {} does not match counts {}",
            header.total,
            table.total()
        )));
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub rows: usize,
    pub cols: usize,
    pub true_lengths: Vec<usize>,
    pub truncated: Vec<bool>,
}

pub fn write_features(m: &FeatureMatrix, mut bin_sink: impl Write, json_sink: impl Write) -> Result<()> {
    let mut buf = Vec::new();
    f64s_to_le(m.values(), &mut buf);
    bin_sink.write_all(&buf)?;
    bin_sink.flush()?;
    write_json(
        json_sink,
        &FeatureSidecar {
            rows: m.rows(),
            cols: m.cols(),
            true_lengths: m.true_lengths().to_vec(),
            truncated: m.truncated().to_vec(),
        },
    )
}

pub fn read_features(mut bin_source: impl Read, json_source: impl Read) -> Result<FeatureMatrix> {
    let side: FeatureSidecar = serde_json::from_reader(json_source)?;
    let mut bytes = Vec::new();
    bin_source.read_to_end(&mut bytes)?;
    let values = le_to_f64s(&bytes)?;
    Ok(FeatureMatrix::from_parts(
        side.rows,
        side.cols,
        values,
        side.true_lengths,
        side.truncated,
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub feature_config_hash: String,
}

pub fn write_model(model: &FactoredModel, feature_config_hash: &str, mut bin_sink: impl Write, json_sink: impl Write) -> Result<()> {
    let m = model.moments();
    let mut buf = Vec::new();
    f64s_to_le(m.mean(), &mut buf);
    f64s_to_le(m.covariance(), &mut buf);
    f64s_to_le(model.factor().lower(), &mut buf);
    bin_sink.write_all(&buf)?;
    bin_sink.flush()?;
    write_json(
        json_sink,
        &ModelSidecar {
            n: m.samples(),
            d: m.dim(),
            epsilon: model.epsilon(),
            feature_config_hash: feature_config_hash.to_string(),
        },
    )
}

pub fn read_model(mut bin_source: impl Read, json_source: impl Read) -> Result<(FactoredModel, ModelSidecar)> {
    let side: ModelSidecar = serde_json::from_reader(json_source)?;
    let mut bytes = Vec::new();
    bin_source.read_to_end(&mut bytes)?;
    let values = le_to_f64s(&bytes)?;
    let d = side.d;
    if values.len() != d + 2 * d * d {
        return Err(AppError::Consistency(format!(
            "model payload holds {} values, expected {} for d = {d}",
            values.len(),
            d + 2 * d * d
        )));
    }
    let mean = values[..d].to_vec();
    let cov = values[d..d + d * d].to_vec();
    let lower = values[d + d * d..].to_vec();
    let moments = MomentModel::from_parts(mean, cov, side.n)?;
    let factor = Cholesky::from_lower(lower, d).ok_or_else(|| AppError::Consistency("bad factor".into()))?;
    Ok((FactoredModel::from_parts(moments, side.epsilon, factor)?, side))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub ordinal: usize,
    pub id: String,
    pub char_length: usize,
    pub score: f64,
}

pub fn write_scores(corpus: &Corpus, scores: &ScoreVector, sink: impl Write) -> Result<()> {
    if corpus.len() != scores.len() {
        return Err(AppError::Consistency(format!(
            "{} scores for {} examples",
            scores.len(),
            corpus.len()
        )));
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["ordinal", "id", "char_length", "score"])?;
    for (ex, s) in corpus.iter().zip(&scores.scores) {
        w.write_record([
            ex.ordinal.to_string(),
            ex.id.clone(),
            ex.char_length.to_string(),
            s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scores(source: impl Read) -> Result<Vec<ScoreRow>> {
    let mut rows = Vec::new();
    for (k, row) in csv::Reader::from_reader(source).deserialize().enumerate() {
        let row: ScoreRow = row?;
        if row.ordinal != k {
            return Err(AppError::Consistency(format!(
                "scores row {k} carries ordinal {}",
                row.ordinal
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub ordinal: usize,
    pub id: String,
    pub category: String,
    pub score: f64,
    pub char_length: usize,
}

pub fn write_selection_csv(corpus: &Corpus, selection: &Selection, scores: &ScoreVector, sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["ordinal", "id", "category", "score", "char_length"])?;
    for (i, cat) in selection.entries() {
        let ex = corpus.get(i).ok_or(abnormal_core::Error::Bounds {
            expected: corpus.len(),
            found: i,
        })?;
        w.write_record([
            i.to_string(),
            ex.id.clone(),
            cat.as_str().to_string(),
            scores.scores[i].to_string(),
            ex.char_length.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a selection CSV back into its three lists (policy echo is not stored here).
pub fn read_selection_csv(source: impl Read) -> Result<Selection> {
    let mut sel = Selection::empty();
    for row in csv::Reader::from_reader(source).deserialize() {
        let row: SelectionRow = row?;
        match Category::parse(&row.category) {
            Some(Category::Low) => sel.low.push(row.ordinal),
            Some(Category::High) => sel.high.push(row.ordinal),
            Some(Category::Mutual) => sel.mean_proximal.push(row.ordinal),
            _ => {
                return Err(AppError::Schema {
                    path: format!("selection row {}", row.ordinal),
                    message: format!("unknown category `{}`", row.category),
                })
            }
        }
    }
    Ok(sel)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(mut sink: impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut sink, value)?;
    sink.write_all(b"\n")?;
    sink.flush()?;
    Ok(())
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_json(&mut buf, value)?;
    Ok(buf)
}

/// Writes each `(file name, bytes)` pair into `dir` in order. If any write
/// fails, the files already written by this call are removed.
pub fn write_all_or_nothing(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(AppError::io(&path, e));
        }
        written.push(path);
    }
    Ok(())
}
