//! Positional n-gram density features.
//!
//! Every context becomes a row whose `i`-th coordinate is the corpus-wide
//! relative frequency of the context's `i`-th n-gram. Rows are back padded
//! with zeros to a common length so that one covariance matrix covers them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Executor};

/// Joins the tokens of one n-gram key.
pub const NGRAM_SEPARATOR: char = '\u{1F}';

const ROW_BLOCK: usize = 64;

/// Token normalization applied before n-gram extraction. Splitting is always
/// on Unicode whitespace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub strip_edge_punctuation: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            strip_edge_punctuation: true,
        }
    }
}

fn is_punctuation(c: char) -> bool {
    c.general_category_group() == GeneralCategoryGroup::Punctuation
}

pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let trimmed = if cfg.strip_edge_punctuation {
                raw.trim_matches(is_punctuation)
            } else {
                raw
            };
            if trimmed.is_empty() {
                return None;
            }
            Some(if cfg.lowercase {
                trimmed.to_lowercase()
            } else {
                String::from(trimmed)
            })
        })
        .collect()
}

/// Overlapping stride-1 n-grams, each keyed as its tokens joined by
/// [`NGRAM_SEPARATOR`].
pub fn ngrams<S: AsRef<str>>(tokens: &[S], order: usize) -> Result<Vec<String>> {
    if order < 1 {
        return Err(Error::Parameter("n-gram order must be at least 1".into()));
    }
    if tokens.len() < order {
        return Ok(Vec::new());
    }
    Ok(tokens
        .windows(order)
        .map(|w| {
            let mut key = String::from(w[0].as_ref());
            for t in &w[1..] {
                key.push(NGRAM_SEPARATOR);
                key.push_str(t.as_ref());
            }
            key
        })
        .collect())
}

/// Corpus-wide n-gram occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityTable {
    order: usize,
    tokenizer: TokenizerConfig,
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl DensityTable {
    /// Rebuilds a table from stored counts; zero counts are rejected.
    pub fn from_counts(
        order: usize,
        tokenizer: TokenizerConfig,
        counts: BTreeMap<String, u64>,
    ) -> Result<Self> {
        if order < 1 {
            return Err(Error::Parameter("n-gram order must be at least 1".into()));
        }
        if counts.values().any(|&c| c == 0) {
            return Err(Error::Parameter("density table contains a zero count".into()));
        }
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(Error::Fit(alloc::format!(
                "corpus yields no n-grams at order {order}"
            )));
        }
        Ok(DensityTable {
            order,
            tokenizer,
            counts,
            total,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn tokenizer(&self) -> &TokenizerConfig {
        &self.tokenizer
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// Relative frequency of `key`; 0 for n-grams never seen at fit time.
    pub fn density(&self, key: &str) -> f64 {
        self.count(key) as f64 / self.total as f64
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `(key, count)` pairs in ascending key order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &c)| (k.as_str(), c))
    }

    /// N-gram keys of one context under this table's tokenizer and order.
    pub fn keys_for(&self, text: &str) -> Vec<String> {
        let tokens = tokenize(text, &self.tokenizer);
        // order >= 1 is a construction invariant
        ngrams(&tokens, self.order).unwrap_or_default()
    }
}

/// Counts n-grams over every context, once per example.
pub fn fit_density(corpus: &Corpus, order: usize, cfg: &TokenizerConfig) -> Result<DensityTable> {
    if order < 1 {
        return Err(Error::Parameter("n-gram order must be at least 1".into()));
    }
    if corpus.is_empty() {
        return Err(Error::Fit("cannot fit a density table on an empty corpus".into()));
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for ex in corpus {
        let tokens = tokenize(&ex.context, cfg);
        for key in ngrams(&tokens, order)? {
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    DensityTable::from_counts(order, *cfg, counts)
}

/// One feature row before it is placed in a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub values: Vec<f64>,
    /// Unpadded positions.
    pub true_length: usize,
    /// The n-gram sequence was longer than the row and was cut.
    pub truncated: bool,
}

/// Positional densities of `keys`, zero padded (or truncated) to `width`.
pub fn featurize_example<S: AsRef<str>>(keys: &[S], table: &DensityTable, width: usize) -> FeatureRow {
    let mut values = vec![0.0; width];
    let true_length = keys.len().min(width);
    for (slot, key) in values.iter_mut().zip(keys) {
        *slot = table.density(key.as_ref());
    }
    FeatureRow {
        values,
        true_length,
        truncated: keys.len() > width,
    }
}

/// Dense row-major `rows × cols` matrix of positional densities.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    true_lengths: Vec<usize>,
    truncated: Vec<bool>,
}

impl FeatureMatrix {
    /// Wraps raw row-major values. Every row's true length is taken as `cols`.
    pub fn from_rows(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Bounds {
                expected: rows * cols,
                found: values.len(),
            });
        }
        Ok(FeatureMatrix {
            rows,
            cols,
            values,
            true_lengths: vec![cols; rows],
            truncated: vec![false; rows],
        })
    }

    /// Wraps raw values with explicit per-row metadata.
    pub fn from_parts(
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        true_lengths: Vec<usize>,
        truncated: Vec<bool>,
    ) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Bounds {
                expected: rows * cols,
                found: values.len(),
            });
        }
        if true_lengths.len() != rows || truncated.len() != rows {
            return Err(Error::Bounds {
                expected: rows,
                found: true_lengths.len().min(truncated.len()),
            });
        }
        if true_lengths.iter().any(|&t| t > cols) {
            return Err(Error::Parameter("true length exceeds column count".into()));
        }
        Ok(FeatureMatrix {
            rows,
            cols,
            values,
            true_lengths,
            truncated,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn true_lengths(&self) -> &[usize] {
        &self.true_lengths
    }

    pub fn truncated(&self) -> &[bool] {
        &self.truncated
    }

    pub fn any_truncated(&self) -> bool {
        self.truncated.iter().any(|&t| t)
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }
}

/// Featurizes every example in ordinal order. The width is the longest
/// n-gram sequence in the corpus, optionally capped by `max_width`.
pub fn build_matrix<E: Executor + ?Sized>(
    exec: &E,
    corpus: &Corpus,
    table: &DensityTable,
    max_width: Option<usize>,
) -> Result<FeatureMatrix> {
    if max_width == Some(0) {
        return Err(Error::Parameter("feature length cap must be at least 1".into()));
    }
    let examples = corpus.examples();
    let sequences: Vec<Vec<f64>> = map_indexed(exec, examples.len(), ROW_BLOCK, &|i| {
        table
            .keys_for(&examples[i].context)
            .iter()
            .map(|k| table.density(k))
            .collect()
    });
    let longest = sequences.iter().map(Vec::len).max().unwrap_or(0);
    let cols = match max_width {
        Some(cap) => longest.min(cap),
        None => longest,
    };
    if cols == 0 {
        return Err(Error::Fit(alloc::format!(
            "corpus yields no n-grams at order {}",
            table.order()
        )));
    }

    let rows = sequences.len();
    let mut values = vec![0.0; rows * cols];
    let mut true_lengths = Vec::with_capacity(rows);
    let mut truncated = Vec::with_capacity(rows);
    for (row, seq) in values.chunks_exact_mut(cols).zip(&sequences) {
        let used = seq.len().min(cols);
        row[..used].copy_from_slice(&seq[..used]);
        true_lengths.push(used);
        truncated.push(seq.len() > cols);
    }
    FeatureMatrix::from_parts(rows, cols, values, true_lengths, truncated)
}
