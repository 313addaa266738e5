use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use super::{
    validate, validate_example, AnnotatedDocument, CorpusRecord, EntityMention, SentenceSpan,
    SummaryExample, Token,
};
use crate::error::CorpusError;

const DOC_KEYS: &[&str] = &["doc_id", "text", "tokens", "sentences", "entities"];
const TOKEN_KEYS: &[&str] = &["i", "text", "start", "end", "head", "deprel"];
const SENTENCE_KEYS: &[&str] = &["tok_start", "tok_end", "start", "end"];
const ENTITY_KEYS: &[&str] = &["tok_start", "tok_end", "label", "surface"];
const EXAMPLE_KEYS: &[&str] = &["document", "summary"];

#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Ignore unknown keys instead of rejecting them.
    pub lenient: bool,
    /// Top-level keys handed back to the caller instead of being checked.
    pub carry: &'static [&'static str],
}

/// One decoded corpus line.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub line: usize,
    pub record: CorpusRecord,
    /// Values of the `carry` keys present on this line.
    pub extras: Map<String, Value>,
}

/// Error produced while decoding one JSON value: `(field path, message)`.
type FieldError = (String, String);

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn as_object<'a>(value: &'a Value, path: &str) -> Result<&'a Map<String, Value>, FieldError> {
    value
        .as_object()
        .ok_or_else(|| (path_or_root(path), "expected an object".to_string()))
}

fn path_or_root(path: &str) -> String {
    if path.is_empty() {
        "$".to_string()
    } else {
        path.to_string()
    }
}

fn check_keys(
    obj: &Map<String, Value>,
    allowed: &[&str],
    path: &str,
    opts: ReadOptions,
) -> Result<(), FieldError> {
    for key in allowed {
        if !obj.contains_key(*key) {
            return Err((join(path, key), "missing field".to_string()));
        }
    }
    if !opts.lenient {
        if let Some(key) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err((join(path, key), "unknown field".to_string()));
        }
    }
    Ok(())
}

fn field<T: DeserializeOwned>(obj: &Map<String, Value>, key: &str, path: &str) -> Result<T, FieldError> {
    let value = obj.get(key).cloned().unwrap_or(Value::Null);
    serde_json::from_value(value).map_err(|e| (join(path, key), e.to_string()))
}

fn items<T: DeserializeOwned>(
    obj: &Map<String, Value>,
    key: &str,
    keys: &[&str],
    path: &str,
    opts: ReadOptions,
) -> Result<Vec<T>, FieldError> {
    let arr = obj
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| (join(path, key), "expected an array".to_string()))?;
    arr.iter()
        .enumerate()
        .map(|(i, item)| {
            let item_path = format!("{}[{i}]", join(path, key));
            let item_obj = as_object(item, &item_path)?;
            check_keys(item_obj, keys, &item_path, opts)?;
            let mut pruned = Map::new();
            for k in keys {
                pruned.insert((*k).to_string(), item_obj[*k].clone());
            }
            serde_json::from_value(Value::Object(pruned)).map_err(|e| (item_path, e.to_string()))
        })
        .collect()
}

/// Decodes one document object, reporting the path of the first bad field.
pub fn parse_document_value(
    value: &Value,
    path: &str,
    opts: ReadOptions,
) -> Result<AnnotatedDocument, (String, String)> {
    let obj = as_object(value, path)?;
    check_keys(obj, DOC_KEYS, path, opts)?;
    Ok(AnnotatedDocument {
        doc_id: field(obj, "doc_id", path)?,
        text: field(obj, "text", path)?,
        tokens: items::<Token>(obj, "tokens", TOKEN_KEYS, path, opts)?,
        sentences: items::<SentenceSpan>(obj, "sentences", SENTENCE_KEYS, path, opts)?,
        entities: items::<EntityMention>(obj, "entities", ENTITY_KEYS, path, opts)?,
    })
}

/// Decodes a document or summary-example record (without validating it).
pub fn parse_record_value(value: &Value, opts: ReadOptions) -> Result<CorpusRecord, (String, String)> {
    let obj = as_object(value, "")?;
    if obj.contains_key("document") {
        check_keys(obj, EXAMPLE_KEYS, "", opts)?;
        Ok(CorpusRecord::Example(SummaryExample {
            document: parse_document_value(&obj["document"], "document", opts)?,
            summary: parse_document_value(&obj["summary"], "summary", opts)?,
        }))
    } else {
        parse_document_value(value, "", opts).map(CorpusRecord::Document)
    }
}

pub(crate) fn validate_record(record: &CorpusRecord, line: usize) -> Result<(), CorpusError> {
    let res = match record {
        CorpusRecord::Document(d) => validate(d),
        CorpusRecord::Example(e) => validate_example(e),
    };
    res.map_err(|violations| CorpusError::Invalid {
        line,
        doc_id: record.doc_id().to_string(),
        violations,
    })
}

/// Decodes and validates one corpus line. Duplicate ids are not detected here.
pub fn parse_line(line: &str, line_no: usize, opts: ReadOptions) -> Result<CorpusEntry, CorpusError> {
    let mut value: Value = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
        line: line_no,
        path: "$".into(),
        message: e.to_string(),
    })?;
    let mut extras = Map::new();
    if let Value::Object(obj) = &mut value {
        for key in opts.carry {
            if let Some(v) = obj.remove(*key) {
                extras.insert((*key).to_string(), v);
            }
        }
    }
    let record = parse_record_value(&value, opts).map_err(|(path, message)| CorpusError::Parse {
        line: line_no,
        path,
        message,
    })?;
    validate_record(&record, line_no)?;
    Ok(CorpusEntry {
        line: line_no,
        record,
        extras,
    })
}

/// Non-blank lines with their 1-based line numbers, not yet decoded.
pub fn numbered_lines<R: BufRead>(source: R) -> impl Iterator<Item = io::Result<(usize, String)>> {
    source.lines().enumerate().filter_map(|(i, line)| match line {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(e) => Some(Err(e)),
    })
}

/// Streaming reader over line-delimited corpus records.
///
/// Yields records in file order. Blank lines are skipped but still counted
/// for line numbers. Duplicate `doc_id`s within one stream are rejected.
pub struct CorpusReader<R> {
    lines: io::Lines<R>,
    line_no: usize,
    opts: ReadOptions,
    seen: HashSet<String>,
}

impl<R: BufRead> CorpusReader<R> {
    /// Like [`Iterator::next`], but keeps the line number and carried keys.
    pub fn next_entry(&mut self) -> Option<Result<CorpusEntry, CorpusError>> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(CorpusError::Io(e))),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let entry = match parse_line(&line, self.line_no, self.opts) {
                Ok(r) => r,
                Err(e) => return Some(Err(e)),
            };
            if !self.seen.insert(entry.record.doc_id().to_string()) {
                return Some(Err(CorpusError::DuplicateId {
                    line: self.line_no,
                    doc_id: entry.record.doc_id().to_string(),
                }));
            }
            return Some(Ok(entry));
        }
    }

    pub fn entries(mut self) -> impl Iterator<Item = Result<CorpusEntry, CorpusError>> {
        std::iter::from_fn(move || self.next_entry())
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<CorpusRecord, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_entry().map(|r| r.map(|e| e.record))
    }
}

pub fn read_corpus<R: BufRead>(source: R, opts: ReadOptions) -> CorpusReader<R> {
    CorpusReader {
        lines: source.lines(),
        line_no: 0,
        opts,
        seen: HashSet::new(),
    }
}

/// Writes one record as a single canonical JSON line.
pub fn write_record<W: Write, T: Serialize + ?Sized>(out: &mut W, record: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")
}

pub fn write_corpus<'a, W: Write>(
    mut out: W,
    records: impl IntoIterator<Item = &'a CorpusRecord>,
) -> io::Result<()> {
    for record in records {
        write_record(&mut out, record)?;
    }
    out.flush()
}
