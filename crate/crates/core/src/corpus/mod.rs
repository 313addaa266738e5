//! Annotated corpus data model.
//!
//! A corpus is a sequence of [`AnnotatedDocument`]s (or [`SummaryExample`]
//! pairs) carrying tokens, sentence spans, entity mentions and per-token
//! dependency arcs. All offsets are byte offsets into the UTF-8 `text`.

mod builder;
mod io;
mod validate;

pub use builder::DocBuilder;
pub use io::{
    numbered_lines, parse_document_value, parse_line, parse_record_value, read_corpus, write_corpus, write_record,
    CorpusEntry, CorpusReader, ReadOptions,
};
pub use validate::{validate, validate_example, Violation, ViolationKind};

use serde::{Deserialize, Serialize};
use std::ops::Range;

/// A single token with its dependency arc.
///
/// `head == index` marks a root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    #[serde(rename = "i")]
    pub index: usize,
    pub text: String,
    #[serde(rename = "start")]
    pub char_start: usize,
    #[serde(rename = "end")]
    pub char_end: usize,
    #[serde(rename = "head")]
    pub head_index: usize,
    pub deprel: String,
}

impl Token {
    pub fn is_root(&self) -> bool {
        self.head_index == self.index
    }

    pub fn span(&self) -> Range<usize> {
        self.char_start..self.char_end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSpan {
    #[serde(rename = "tok_start")]
    pub token_start: usize,
    #[serde(rename = "tok_end")]
    pub token_end: usize,
    #[serde(rename = "start")]
    pub char_start: usize,
    #[serde(rename = "end")]
    pub char_end: usize,
}

impl SentenceSpan {
    pub fn tokens(&self) -> Range<usize> {
        self.token_start..self.token_end
    }

    pub fn chars(&self) -> Range<usize> {
        self.char_start..self.char_end
    }
}

/// A named-entity mention over a token range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    #[serde(rename = "tok_start")]
    pub token_start: usize,
    #[serde(rename = "tok_end")]
    pub token_end: usize,
    pub label: String,
    pub surface: String,
}

impl EntityMention {
    pub fn tokens(&self) -> Range<usize> {
        self.token_start..self.token_end
    }

    pub fn overlaps(&self, other: &EntityMention) -> bool {
        self.token_start < other.token_end && other.token_start < self.token_end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub text: String,
    pub tokens: Vec<Token>,
    pub sentences: Vec<SentenceSpan>,
    pub entities: Vec<EntityMention>,
}

impl AnnotatedDocument {
    /// Byte range covered by a token range. Empty ranges map to an empty span.
    pub fn char_range(&self, tokens: Range<usize>) -> Range<usize> {
        if tokens.is_empty() {
            return 0..0;
        }
        self.tokens[tokens.start].char_start..self.tokens[tokens.end - 1].char_end
    }

    pub fn mention_range(&self, mention: &EntityMention) -> Range<usize> {
        self.char_range(mention.tokens())
    }

    pub fn sentence_text(&self, index: usize) -> &str {
        &self.text[self.sentences[index].chars()]
    }

    /// Entities fully contained in the given sentence.
    pub fn entities_in_sentence(&self, index: usize) -> impl Iterator<Item = &EntityMention> {
        let span = self.sentences[index].tokens();
        self.entities
            .iter()
            .filter(move |e| e.token_start >= span.start && e.token_end <= span.end)
    }

    /// Index of the sentence containing `token`.
    pub fn sentence_of(&self, token: usize) -> Option<usize> {
        self.sentences
            .iter()
            .position(|s| s.token_start <= token && token < s.token_end)
    }

    /// Direct children of every token, in token order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.tokens.len()];
        for tok in &self.tokens {
            if !tok.is_root() && tok.head_index < self.tokens.len() {
                children[tok.head_index].push(tok.index);
            }
        }
        children
    }
}

/// A document paired with its reference summary. Both sides carry their own
/// annotations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryExample {
    pub document: AnnotatedDocument,
    pub summary: AnnotatedDocument,
}

/// One line of a corpus file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusRecord {
    Document(AnnotatedDocument),
    Example(SummaryExample),
}

impl CorpusRecord {
    pub fn doc_id(&self) -> &str {
        match self {
            CorpusRecord::Document(d) => &d.doc_id,
            CorpusRecord::Example(e) => &e.document.doc_id,
        }
    }

    /// Every annotated document carried by the record.
    pub fn documents(&self) -> Vec<&AnnotatedDocument> {
        match self {
            CorpusRecord::Document(d) => vec![d],
            CorpusRecord::Example(e) => vec![&e.document, &e.summary],
        }
    }
}

impl Serialize for CorpusRecord {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            CorpusRecord::Document(d) => d.serialize(serializer),
            CorpusRecord::Example(e) => e.serialize(serializer),
        }
    }
}

/// Case-folded, whitespace-collapsed form used for entity surface matching.
pub fn normalize_surface(surface: &str) -> String {
    surface
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}
