//! Seeded synthetic corpora: contexts of i.i.d. words from a fixed random
//! vocabulary with Zipf-distributed frequencies, and token counts uniform in
//! a closed range. An exponent of 0 gives a uniform word distribution, which
//! makes every density nearly equal.

use std::io::Write;

use abnormal_core::Corpus;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub contexts: usize,
    pub vocabulary: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Word `k` (0-based) has weight `1 / (k + 1)^zipf_exponent`.
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            contexts: 5000,
            vocabulary: 200,
            min_tokens: 20,
            max_tokens: 400,
            zipf_exponent: 1.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    fn check(&self) -> Result<()> {
        if self.contexts == 0 || self.vocabulary == 0 {
            return Err(AppError::Config("synthetic corpus needs contexts and a vocabulary".into()));
        }
        if self.min_tokens == 0 || self.min_tokens > self.max_tokens {
            return Err(AppError::Config(format!(
                "token range [{}, {}] is empty or starts at 0",
                self.min_tokens, self.max_tokens
            )));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return Err(AppError::Config(format!("invalid Zipf exponent {}", self.zipf_exponent)));
        }
        Ok(())
    }
}

/// Distinct lowercase words of 2 to 10 letters.
fn vocabulary(rng: &mut ChaCha8Rng, size: usize) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut words = Vec::with_capacity(size);
    while words.len() < size {
        let len = rng.random_range(2..=10);
        let w: String = (0..len).map(|_| char::from(b'a' + rng.random_range(0..26u8))).collect();
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

pub fn synth_corpus(spec: &SynthSpec) -> Result<Corpus> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let words = vocabulary(&mut rng, spec.vocabulary);
    let weights = (0..spec.vocabulary).map(|k| ((k + 1) as f64).powf(-spec.zipf_exponent));
    let pick = WeightedIndex::new(weights).map_err(|e| AppError::Config(format!("vocabulary weights: {e}")))?;
    let records: Vec<(String, String, String)> = (0..spec.contexts)
        .map(|k| {
            let len = rng.random_range(spec.min_tokens..=spec.max_tokens);
            let text: Vec<&str> = (0..len)
                .map(|_| words[pick.sample(&mut rng)].as_str())
                .collect();
            (format!("synth-{k}"), "synthetic".to_string(), text.join(" "))
        })
        .collect();
    Ok(Corpus::from_texts(
        records,
        &format!(
            "synthetic seed={} contexts={} vocabulary={} zipf={} tokens=[{},{}]",
            spec.seed, spec.contexts, spec.vocabulary, spec.zipf_exponent, spec.min_tokens, spec.max_tokens
        ),
    ))
}

/// One `{"id", "title", "context"}` object per line.
pub fn write_jsonl(corpus: &Corpus, mut sink: impl Write) -> Result<()> {
    for ex in corpus {
        let line = serde_json::json!({ "id": ex.id, "title": ex.title, "context": ex.context });
        serde_json::to_writer(&mut sink, &line)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}
