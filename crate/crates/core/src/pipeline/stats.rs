use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::{normalize_surface, CorpusRecord};

/// Corpus-level counts. For summary examples, `sentences` and `entities`
/// describe the document side and the `summary_*` fields the summary side.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StatsTable {
    pub records: usize,
    pub documents: usize,
    pub summaries: usize,
    pub sentences: usize,
    pub tokens: usize,
    pub entities: BTreeMap<String, usize>,
    pub summary_sentences: usize,
    pub summary_entities: BTreeMap<String, usize>,
    /// Summary entities whose surface no document entity shares.
    pub hallucinated: usize,
}

impl StatsTable {
    pub fn add(&mut self, record: &CorpusRecord) {
        self.records += 1;
        let doc = match record {
            CorpusRecord::Document(d) => d,
            CorpusRecord::Example(e) => &e.document,
        };
        self.documents += 1;
        self.sentences += doc.sentences.len();
        self.tokens += doc.tokens.len();
        for e in &doc.entities {
            *self.entities.entry(e.label.clone()).or_insert(0) += 1;
        }
        if let CorpusRecord::Example(ex) = record {
            self.summaries += 1;
            self.summary_sentences += ex.summary.sentences.len();
            let known: HashSet<String> = doc.entities.iter().map(|e| normalize_surface(&e.surface)).collect();
            for e in &ex.summary.entities {
                *self.summary_entities.entry(e.label.clone()).or_insert(0) += 1;
                if !known.contains(&normalize_surface(&e.surface)) {
                    self.hallucinated += 1;
                }
            }
        }
    }

    pub fn total_entities(&self) -> usize {
        self.entities.values().sum()
    }

    /// Two-column `key<TAB>value` rendering.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let mut row = |k: &str, v: usize| {
            let _ = writeln!(out, "{k}\t{v}");
        };
        row("records", self.records);
        row("documents", self.documents);
        row("summaries", self.summaries);
        row("sentences", self.sentences);
        row("tokens", self.tokens);
        row("entities", self.total_entities());
        for (label, n) in &self.entities {
            row(&format!("entities.{label}"), *n);
        }
        row("summary_sentences", self.summary_sentences);
        for (label, n) in &self.summary_entities {
            row(&format!("summary_entities.{label}"), *n);
        }
        row("hallucinated", self.hallucinated);
        out
    }
}

pub fn stats<'a>(records: impl IntoIterator<Item = &'a CorpusRecord>) -> StatsTable {
    let mut table = StatsTable::default();
    for r in records {
        table.add(r);
    }
    table
}
