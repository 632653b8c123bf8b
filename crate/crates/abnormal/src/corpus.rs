//! Reading SQuAD v1.1 / JSONL corpora and writing pruned subsets.
//!
//! SQuAD input yields one example per question-answer record, so a paragraph
//! with five questions contributes its context five times. The original qa
//! object is kept verbatim and written back out with the subset.

use std::io::{BufRead, Read, Write};

use abnormal_core::{Category, Corpus, Example, ScoreVector, Selection};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{AppError, Result};

/// Field names looked up in each JSONL object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldMap {
    pub context: String,
    pub title: String,
    pub id: String,
}

impl Default for FieldMap {
    fn default() -> Self {
        FieldMap {
            context: "context".into(),
            title: "title".into(),
            id: "id".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SubsetFormat {
    Jsonl,
    Squad,
}

/// Converts serde_json's 1-based line/column into a byte offset.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let mut start = 0;
    if line > 1 {
        let mut seen = 1;
        for (i, &b) in bytes.iter().enumerate() {
            if b == b'\n' {
                seen += 1;
                if seen == line {
                    start = i + 1;
                    break;
                }
            }
        }
    }
    (start + column.saturating_sub(1)).min(bytes.len())
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| AppError::Schema {
        path: format!("{path}.{key}"),
        message: "missing required field".into(),
    })
}

fn string_field(obj: &Map<String, Value>, key: &str, path: &str) -> Result<String> {
    match field(obj, key, path)? {
        Value::String(s) => Ok(s.clone()),
        _ => Err(AppError::Schema {
            path: format!("{path}.{key}"),
            message: "expected a string".into(),
        }),
    }
}

fn array_field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Vec<Value>> {
    match field(obj, key, path)? {
        Value::Array(a) => Ok(a),
        _ => Err(AppError::Schema {
            path: format!("{path}.{key}"),
            message: "expected an array".into(),
        }),
    }
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| AppError::Schema {
        path: path.to_string(),
        message: "expected an object".into(),
    })
}

/// Parses a SQuAD v1.1 document: articles, then paragraphs, then qas.
pub fn ingest_squad(mut stream: impl Read, source: &str) -> Result<Corpus> {
    let mut bytes = Vec::new();
    stream.read_to_end(&mut bytes)?;
    let doc: Value = serde_json::from_slice(&bytes).map_err(|e| AppError::Parse {
        offset: byte_offset(&bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let root = object(&doc, "$")?;
    let articles = array_field(root, "data", "$")?;

    let mut examples = Vec::new();
    for (a, article) in articles.iter().enumerate() {
        let apath = format!("$.data[{a}]");
        let article = object(article, &apath)?;
        let title = string_field(article, "title", &apath)?;
        for (p, paragraph) in array_field(article, "paragraphs", &apath)?.iter().enumerate() {
            let ppath = format!("{apath}.paragraphs[{p}]");
            let paragraph = object(paragraph, &ppath)?;
            let context = string_field(paragraph, "context", &ppath)?;
            for (q, qa) in array_field(paragraph, "qas", &ppath)?.iter().enumerate() {
                let qpath = format!("{ppath}.qas[{q}]");
                let qa_obj = object(qa, &qpath)?;
                let id = string_field(qa_obj, "id", &qpath)?;
                let raw = serde_json::to_string(qa)?;
                examples.push(
                    Example::new(examples.len(), id, title.clone(), context.clone()).with_passthrough(raw),
                );
            }
        }
    }
    Ok(Corpus::new(
        examples,
        format!("squad-v1.1 {source} (one example per qa record)"),
    ))
}

/// Parses one JSON object per nonempty line.
///
/// Missing title/id default to `""` / `line-<k>` (1-based line number). An
/// object-valued `qa` field is carried through as the record's passthrough,
/// which lets JSONL subsets be written back out as SQuAD.
pub fn ingest_jsonl(stream: impl BufRead, fields: &FieldMap, source: &str) -> Result<Corpus> {
    let mut examples = Vec::new();
    for (k, line) in stream.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| AppError::Line {
            line: line_no,
            message: format!("invalid JSON: {e}"),
        })?;
        let obj = value.as_object().ok_or_else(|| AppError::Line {
            line: line_no,
            message: "expected a JSON object".into(),
        })?;
        let text_of = |key: &str| -> Result<Option<String>> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::String(s)) => Ok(Some(s.clone())),
                Some(_) => Err(AppError::Schema {
                    path: format!("line {line_no}: {key}"),
                    message: "expected a string".into(),
                }),
            }
        };
        let context = text_of(&fields.context)?.ok_or_else(|| AppError::Schema {
            path: format!("line {line_no}: {}", fields.context),
            message: "missing context field".into(),
        })?;
        let title = text_of(&fields.title)?.unwrap_or_default();
        let id = text_of(&fields.id)?.unwrap_or_else(|| format!("line-{line_no}"));
        let mut ex = Example::new(examples.len(), id, title, context);
        if let Some(qa @ Value::Object(_)) = obj.get("qa") {
            ex = ex.with_passthrough(serde_json::to_string(qa)?);
        }
        examples.push(ex);
    }
    Ok(Corpus::new(examples, format!("jsonl {source}")))
}

#[derive(Serialize)]
struct SubsetRecord<'a> {
    ordinal: usize,
    id: &'a str,
    title: &'a str,
    context: &'a str,
    char_length: usize,
    category: &'static str,
    score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    qa: Option<Value>,
}

fn passthrough(ex: &Example) -> Result<Option<Value>> {
    Ok(match &ex.passthrough {
        Some(raw) => Some(serde_json::from_str(raw)?),
        None => None,
    })
}

/// Writes the selected examples in ascending ordinal order, each tagged with
/// its category and score. Returns the number of records written.
pub fn write_subset(
    corpus: &Corpus,
    selection: &Selection,
    scores: &ScoreVector,
    mut sink: impl Write,
    format: SubsetFormat,
) -> Result<usize> {
    let n = corpus.len();
    if scores.len() != n {
        return Err(AppError::Consistency(format!(
            "{} scores for {n} examples",
            scores.len()
        )));
    }
    let entries = selection.entries();
    if let Some(&(bad, _)) = entries.iter().find(|(i, _)| *i >= n) {
        return Err(abnormal_core::Error::Bounds {
            expected: n,
            found: bad,
        }
        .into());
    }

    match format {
        SubsetFormat::Jsonl => {
            for &(i, cat) in &entries {
                let ex = &corpus.examples()[i];
                let rec = SubsetRecord {
                    ordinal: i,
                    id: &ex.id,
                    title: &ex.title,
                    context: &ex.context,
                    char_length: ex.char_length,
                    category: cat.as_str(),
                    score: scores.scores[i],
                    qa: passthrough(ex)?,
                };
                serde_json::to_writer(&mut sink, &rec)?;
                sink.write_all(b"\n")?;
            }
        }
        SubsetFormat::Squad => {
            let doc = squad_document(corpus, &entries, scores)?;
            serde_json::to_writer(&mut sink, &doc)?;
            sink.write_all(b"\n")?;
        }
    }
    sink.flush()?;
    Ok(entries.len())
}

/// A context with its annotated qa objects.
type Paragraph = (String, Vec<Value>);

/// Regroups entries by title (first appearance), then by context within a
/// title.
fn squad_document(corpus: &Corpus, entries: &[(usize, Category)], scores: &ScoreVector) -> Result<Value> {
    let mut articles: Vec<(String, Vec<Paragraph>)> = Vec::new();
    for &(i, cat) in entries {
        let ex = &corpus.examples()[i];
        let mut qa = match passthrough(ex)? {
            Some(Value::Object(m)) => m,
            _ => {
                let mut m = Map::new();
                m.insert("id".into(), Value::String(ex.id.clone()));
                m
            }
        };
        qa.insert("category".into(), Value::String(cat.as_str().into()));
        qa.insert("abnormality_score".into(), serde_json::json!(scores.scores[i]));
        qa.insert("ordinal".into(), serde_json::json!(i));

        let a = match articles.iter().position(|(t, _)| *t == ex.title) {
            Some(a) => a,
            None => {
                articles.push((ex.title.clone(), Vec::new()));
                articles.len() - 1
            }
        };
        let paragraphs = &mut articles[a].1;
        match paragraphs.iter_mut().find(|(c, _)| *c == ex.context) {
            Some((_, qas)) => qas.push(Value::Object(qa)),
            None => paragraphs.push((ex.context.clone(), vec![Value::Object(qa)])),
        }
    }
    let data: Vec<Value> = articles
        .into_iter()
        .map(|(title, paragraphs)| {
            serde_json::json!({
                "title": title,
                "paragraphs": paragraphs
                    .into_iter()
                    .map(|(context, qas)| serde_json::json!({ "context": context, "qas": qas }))
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(serde_json::json!({ "version": "1.1", "data": data }))
}
