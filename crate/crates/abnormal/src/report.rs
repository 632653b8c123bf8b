//! Report bundle: per-example scores with categories, the score histogram,
//! and `summary.json`.
//!
//! `summary.json` layout:
//!
//! ```text
//! {
//!   "n", "d", "order", "epsilon", "source",
//!   "stats":     { n, mean, variance, skewness, excess_kurtosis, min, max },
//!   "leptokurtic": bool | null,
//!   "pearson_by_order": [ { "order", "r" (null if undefined), "status" } ],
//!   "exemplars": { "lowest" | "highest" | "nearest_mean": { ordinal, id, title, score } },
//!   "selection": { "low", "mutual", "high", "unselected" }
//! }
//! ```
//!
//! `manifest.json` lists every emitted file with its SHA-256.

use std::path::Path;

use abnormal_core::{histogram, label_all, Category, Corpus, DistributionStats, ScoreVector, Selection};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::formats::{json_bytes, sha256_hex, write_all_or_nothing};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PearsonEntry {
    pub order: usize,
    pub r: Option<f64>,
    /// `ok`, or `undefined` when either input is constant.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub ordinal: usize,
    pub id: String,
    pub title: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplars {
    pub lowest: Exemplar,
    pub highest: Exemplar,
    pub nearest_mean: Exemplar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub low: usize,
    pub mutual: usize,
    pub high: usize,
    pub unselected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub d: usize,
    pub order: usize,
    pub epsilon: f64,
    pub source: String,
    pub stats: DistributionStats,
    pub leptokurtic: Option<bool>,
    pub pearson_by_order: Vec<PearsonEntry>,
    pub exemplars: Exemplars,
    pub selection: CategoryCounts,
    pub histogram_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
    /// Content hashes of the artifacts the report was built from.
    pub inputs: Vec<ManifestEntry>,
}

pub struct ReportInputs<'a> {
    pub corpus: &'a Corpus,
    pub scores: &'a ScoreVector,
    pub selection: &'a Selection,
    pub stats: &'a DistributionStats,
    pub pearson_by_order: &'a [PearsonEntry],
    pub order: usize,
    pub dim: usize,
    pub bins: usize,
    pub inputs: Vec<ManifestEntry>,
}

/// Lowest ordinal wins every tie.
pub fn exemplars(corpus: &Corpus, scores: &[f64]) -> Option<Exemplars> {
    if scores.is_empty() || corpus.len() != scores.len() {
        return None;
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let argbest = |key: &dyn Fn(f64) -> f64| {
        (0..scores.len())
            .min_by(|&a, &b| key(scores[a]).total_cmp(&key(scores[b])).then(a.cmp(&b)))
            .expect("nonempty")
    };
    let make = |i: usize| {
        let ex = &corpus.examples()[i];
        Exemplar {
            ordinal: i,
            id: ex.id.clone(),
            title: ex.title.clone(),
            score: scores[i],
        }
    };
    Some(Exemplars {
        lowest: make(argbest(&|s| s)),
        highest: make(argbest(&|s| -s)),
        nearest_mean: make(argbest(&|s| (s - mean).abs())),
    })
}

fn csv_bytes(build: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        build(&mut w)?;
        w.flush()?;
    }
    Ok(buf)
}

/// Writes `scores.csv`, `histogram.csv`, `summary.json` and `manifest.json`
/// into `out_dir`.
pub fn emit_report(inputs: &ReportInputs<'_>, out_dir: &Path) -> Result<Manifest> {
    let corpus = inputs.corpus;
    let scores = &inputs.scores.scores;
    let n = corpus.len();
    if scores.len() != n || inputs.stats.n != n {
        return Err(AppError::Consistency(format!(
            "corpus has {n} examples, scores {}, stats {}",
            scores.len(),
            inputs.stats.n
        )));
    }
    let labels = label_all(n, inputs.selection)?;
    let hist = histogram(scores, inputs.bins)?;
    let ex = exemplars(corpus, scores).ok_or_else(|| AppError::Consistency("no scores".into()))?;

    let scores_csv = csv_bytes(|w| {
        w.write_record(["ordinal", "id", "title", "char_length", "score", "category"])?;
        for (e, (s, cat)) in corpus.iter().zip(scores.iter().zip(&labels)) {
            w.write_record([
                e.ordinal.to_string(),
                e.id.clone(),
                e.title.clone(),
                e.char_length.to_string(),
                s.to_string(),
                cat.as_str().to_string(),
            ])?;
        }
        Ok(())
    })?;

    let histogram_csv = csv_bytes(|w| {
        w.write_record(["bin", "lower", "upper", "count", "density"])?;
        for (b, &count) in hist.counts.iter().enumerate() {
            let (lo, hi) = (hist.edges[b], hist.edges[b + 1]);
            let density = count as f64 / (n as f64 * (hi - lo));
            w.write_record([
                b.to_string(),
                lo.to_string(),
                hi.to_string(),
                count.to_string(),
                density.to_string(),
            ])?;
        }
        Ok(())
    })?;

    let count = |c: Category| labels.iter().filter(|&&l| l == c).count();
    let summary = Summary {
        n,
        d: inputs.dim,
        order: inputs.order,
        epsilon: inputs.scores.epsilon,
        source: corpus.source_descriptor().to_string(),
        stats: *inputs.stats,
        leptokurtic: inputs.stats.excess_kurtosis.map(|k| k > 0.0),
        pearson_by_order: inputs.pearson_by_order.to_vec(),
        exemplars: ex,
        selection: CategoryCounts {
            low: count(Category::Low),
            mutual: count(Category::Mutual),
            high: count(Category::High),
            unselected: count(Category::Unselected),
        },
        histogram_bins: inputs.bins,
    };
    let summary_json = json_bytes(&summary)?;

    let mut files: Vec<(String, Vec<u8>)> = vec![
        ("scores.csv".into(), scores_csv),
        ("histogram.csv".into(), histogram_csv),
        ("summary.json".into(), summary_json),
    ];
    let manifest = Manifest {
        files: files
            .iter()
            .map(|(name, bytes)| ManifestEntry {
                file: name.clone(),
                bytes: bytes.len(),
                sha256: sha256_hex(bytes),
            })
            .collect(),
        inputs: inputs.inputs.clone(),
    };
    files.push(("manifest.json".into(), json_bytes(&manifest)?));
    write_all_or_nothing(out_dir, &files)?;
    Ok(manifest)
}
