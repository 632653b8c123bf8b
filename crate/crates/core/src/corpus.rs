//! Corpus records. Parsing and writing live in the std companion crate.

use alloc::string::String;
use alloc::vec::Vec;

/// One corpus record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    /// Zero-based position in ingestion order.
    pub ordinal: usize,
    pub id: String,
    pub title: String,
    /// Raw context text, never normalized.
    pub context: String,
    /// Unicode scalar values in `context`.
    pub char_length: usize,
    /// Original record object (compact JSON) carried through to subset output.
    pub passthrough: Option<String>,
}

impl Example {
    pub fn new(ordinal: usize, id: String, title: String, context: String) -> Self {
        let char_length = context.chars().count();
        Example {
            ordinal,
            id,
            title,
            context,
            char_length,
            passthrough: None,
        }
    }

    pub fn with_passthrough(mut self, raw: String) -> Self {
        self.passthrough = Some(raw);
        self
    }

    pub fn length_is_consistent(&self) -> bool {
        self.char_length == self.context.chars().count()
    }
}

/// Ordered examples plus a description of where they came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    examples: Vec<Example>,
    source_descriptor: String,
}

impl Corpus {
    /// Builds a corpus, renumbering ordinals to `0..n` in the given order.
    pub fn new(mut examples: Vec<Example>, source_descriptor: String) -> Self {
        for (k, ex) in examples.iter_mut().enumerate() {
            ex.ordinal = k;
        }
        Corpus {
            examples,
            source_descriptor,
        }
    }

    /// Builds a corpus from `(id, title, context)` triples.
    pub fn from_texts<I, S>(records: I, source_descriptor: &str) -> Self
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: Into<String>,
    {
        let examples = records
            .into_iter()
            .enumerate()
            .map(|(k, (id, title, context))| Example::new(k, id.into(), title.into(), context.into()))
            .collect();
        Corpus::new(examples, source_descriptor.into())
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn get(&self, ordinal: usize) -> Option<&Example> {
        self.examples.get(ordinal)
    }

    pub fn source_descriptor(&self) -> &str {
        &self.source_descriptor
    }

    pub fn char_lengths(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.char_length).collect()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Example> {
        self.examples.iter()
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Example;
    type IntoIter = core::slice::Iter<'a, Example>;

    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}
