use std::fmt;

use super::{AnnotatedDocument, SummaryExample};

/// The invariant a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    EmptyDocId,
    TokenIndex,
    TokenSpan,
    TokenBounds,
    CharBoundary,
    TokenText,
    TokenOrder,
    HeadOutOfRange,
    DependencyCycle,
    HeadCrossesSentence,
    EmptyDeprel,
    SentencePartition,
    SentenceOffsets,
    EntityBounds,
    EntityOverlap,
    EntityAlignment,
    EmptyLabel,
}

impl ViolationKind {
    pub fn name(self) -> &'static str {
        match self {
            ViolationKind::EmptyDocId => "empty doc_id",
            ViolationKind::TokenIndex => "token index mismatch",
            ViolationKind::TokenSpan => "empty token span",
            ViolationKind::TokenBounds => "token span out of bounds",
            ViolationKind::CharBoundary => "offset splits character",
            ViolationKind::TokenText => "token text mismatch",
            ViolationKind::TokenOrder => "token order",
            ViolationKind::HeadOutOfRange => "head out of range",
            ViolationKind::DependencyCycle => "dependency cycle",
            ViolationKind::HeadCrossesSentence => "head crosses sentence",
            ViolationKind::EmptyDeprel => "empty deprel",
            ViolationKind::SentencePartition => "sentence partition",
            ViolationKind::SentenceOffsets => "sentence offsets",
            ViolationKind::EntityBounds => "entity out of range",
            ViolationKind::EntityOverlap => "entity overlap",
            ViolationKind::EntityAlignment => "EntityMention alignment",
            ViolationKind::EmptyLabel => "empty entity label",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// JSON-style path of the offending field, e.g. `tokens[3].head`.
    pub path: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.kind, self.path, self.detail)
    }
}

struct Collector {
    prefix: String,
    out: Vec<Violation>,
}

impl Collector {
    fn push(&mut self, kind: ViolationKind, path: impl fmt::Display, detail: impl Into<String>) {
        let path = if self.prefix.is_empty() {
            path.to_string()
        } else {
            format!("{}.{}", self.prefix, path)
        };
        self.out.push(Violation {
            kind,
            path,
            detail: detail.into(),
        });
    }
}

/// Checks every document invariant and reports all violations found.
pub fn validate(doc: &AnnotatedDocument) -> Result<(), Vec<Violation>> {
    let mut c = Collector {
        prefix: String::new(),
        out: Vec::new(),
    };
    check_document(doc, &mut c);
    if c.out.is_empty() {
        Ok(())
    } else {
        Err(c.out)
    }
}

pub fn validate_example(example: &SummaryExample) -> Result<(), Vec<Violation>> {
    let mut c = Collector {
        prefix: "document".into(),
        out: Vec::new(),
    };
    check_document(&example.document, &mut c);
    c.prefix = "summary".into();
    check_document(&example.summary, &mut c);
    if c.out.is_empty() {
        Ok(())
    } else {
        Err(c.out)
    }
}

fn check_document(doc: &AnnotatedDocument, c: &mut Collector) {
    use ViolationKind::*;

    if doc.doc_id.is_empty() {
        c.push(EmptyDocId, "doc_id", "doc_id must be non-empty");
    }

    let n = doc.tokens.len();
    let text = &doc.text;
    let mut spans_ok = vec![false; n];
    let mut prev_end: Option<usize> = None;
    for (pos, tok) in doc.tokens.iter().enumerate() {
        if tok.index != pos {
            c.push(
                TokenIndex,
                format_args!("tokens[{pos}].i"),
                format!("expected {pos}, found {}", tok.index),
            );
        }
        let mut span_ok = true;
        if tok.char_start >= tok.char_end {
            c.push(
                TokenSpan,
                format_args!("tokens[{pos}].start"),
                format!("start {} not before end {}", tok.char_start, tok.char_end),
            );
            span_ok = false;
        }
        if tok.char_end > text.len() {
            c.push(
                TokenBounds,
                format_args!("tokens[{pos}].end"),
                format!("end {} beyond text length {}", tok.char_end, text.len()),
            );
            span_ok = false;
        } else {
            for (field, off) in [("start", tok.char_start), ("end", tok.char_end)] {
                if off <= text.len() && !text.is_char_boundary(off) {
                    c.push(
                        CharBoundary,
                        format_args!("tokens[{pos}].{field}"),
                        format!("offset {off} is inside a multi-byte character"),
                    );
                    span_ok = false;
                }
            }
        }
        if span_ok && text[tok.span()] != *tok.text {
            c.push(
                TokenText,
                format_args!("tokens[{pos}].text"),
                format!("{:?} does not match covered text {:?}", tok.text, &text[tok.span()]),
            );
        }
        if let Some(prev) = prev_end {
            if tok.char_start < prev {
                c.push(
                    TokenOrder,
                    format_args!("tokens[{pos}].start"),
                    format!("start {} overlaps previous token ending at {prev}", tok.char_start),
                );
                span_ok = false;
            }
        }
        prev_end = Some(tok.char_end);
        spans_ok[pos] = span_ok;
        if tok.deprel.is_empty() {
            c.push(EmptyDeprel, format_args!("tokens[{pos}].deprel"), "deprel must be non-empty");
        }
        if tok.head_index >= n {
            c.push(
                HeadOutOfRange,
                format_args!("tokens[{pos}].head"),
                format!("head {} but only {n} tokens", tok.head_index),
            );
        }
    }

    // Cycle detection: a head chain longer than n steps never reaches a root.
    let heads_valid = doc.tokens.iter().all(|t| t.head_index < n);
    if heads_valid {
        let mut state = vec![0u8; n]; // 0 unknown, 1 reaches root
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while state[cur] == 0 && !doc.tokens[cur].is_root() && steps <= n {
                cur = doc.tokens[cur].head_index;
                steps += 1;
            }
            if steps > n {
                c.push(
                    DependencyCycle,
                    format_args!("tokens[{start}].head"),
                    "head chain does not reach a root",
                );
            } else {
                let mut cur = start;
                while state[cur] == 0 {
                    state[cur] = 1;
                    if doc.tokens[cur].is_root() {
                        break;
                    }
                    cur = doc.tokens[cur].head_index;
                }
            }
        }
    }

    // Sentences partition the tokens exactly.
    let mut expected_start = 0;
    let mut sentence_of = vec![usize::MAX; n];
    for (si, sent) in doc.sentences.iter().enumerate() {
        if sent.token_start != expected_start || sent.token_end <= sent.token_start || sent.token_end > n
        {
            c.push(
                SentencePartition,
                format_args!("sentences[{si}]"),
                format!(
                    "token range {}..{} does not continue partition at {expected_start} of {n}",
                    sent.token_start, sent.token_end
                ),
            );
        } else {
            for slot in &mut sentence_of[sent.token_start..sent.token_end] {
                *slot = si;
            }
            let first = &doc.tokens[sent.token_start];
            let last = &doc.tokens[sent.token_end - 1];
            if sent.char_start != first.char_start || sent.char_end != last.char_end {
                c.push(
                    SentenceOffsets,
                    format_args!("sentences[{si}]"),
                    format!(
                        "chars {}..{} but tokens cover {}..{}",
                        sent.char_start, sent.char_end, first.char_start, last.char_end
                    ),
                );
            }
        }
        expected_start = sent.token_end.max(expected_start);
    }
    if expected_start != n {
        c.push(
            SentencePartition,
            "sentences",
            format!("sentences cover {expected_start} of {n} tokens"),
        );
    }
    for tok in &doc.tokens {
        if tok.head_index < n
            && sentence_of[tok.index] != usize::MAX
            && sentence_of[tok.head_index] != usize::MAX
            && sentence_of[tok.index] != sentence_of[tok.head_index]
        {
            c.push(
                HeadCrossesSentence,
                format_args!("tokens[{}].head", tok.index),
                format!("head {} lies in another sentence", tok.head_index),
            );
        }
    }

    // Entities.
    for (ei, ent) in doc.entities.iter().enumerate() {
        if ent.label.is_empty() {
            c.push(EmptyLabel, format_args!("entities[{ei}].label"), "label must be non-empty");
        }
        if ent.token_start >= ent.token_end || ent.token_end > n {
            c.push(
                EntityBounds,
                format_args!("entities[{ei}]"),
                format!("token range {}..{} invalid for {n} tokens", ent.token_start, ent.token_end),
            );
            continue;
        }
        if spans_ok[ent.tokens()].iter().all(|ok| *ok) {
            let covered = &text[doc.mention_range(ent)];
            if covered != ent.surface {
                c.push(
                    EntityAlignment,
                    format_args!("entities[{ei}].surface"),
                    format!("{:?} does not match covered text {covered:?}", ent.surface),
                );
            }
        }
    }
    let mut order: Vec<usize> = (0..doc.entities.len())
        .filter(|&i| {
            let e = &doc.entities[i];
            e.token_start < e.token_end && e.token_end <= n
        })
        .collect();
    order.sort_by_key(|&i| (doc.entities[i].token_start, doc.entities[i].token_end));
    for pair in order.windows(2) {
        let (a, b) = (&doc.entities[pair[0]], &doc.entities[pair[1]]);
        if a.overlaps(b) {
            c.push(
                EntityOverlap,
                format_args!("entities[{}]", pair[1]),
                format!("overlaps entities[{}]", pair[0]),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocBuilder;

    fn sample() -> AnnotatedDocument {
        DocBuilder::new("d1")
            .sentence("Arteta|nsubj|1 retired|ROOT|1 +.|punct|1")
            .entity(0, 0, 1, "PERSON")
            .sentence("He|nsubj|1 left|ROOT|1 Arsenal|dobj|1 +.|punct|1")
            .entity(1, 2, 3, "ORG")
            .build()
    }

    fn kinds(doc: &AnnotatedDocument) -> Vec<ViolationKind> {
        validate(doc).err().unwrap_or_default().into_iter().map(|v| v.kind).collect()
    }

    #[test]
    fn valid_record_is_ok() {
        assert_eq!(validate(&sample()), Ok(()));
    }

    #[test]
    fn head_equal_to_token_count_is_out_of_range() {
        let mut doc = sample();
        doc.tokens[0].head_index = doc.tokens.len();
        let v = validate(&doc).unwrap_err();
        assert!(v.iter().any(|v| v.kind.name() == "head out of range"));
    }

    #[test]
    fn overlapping_entities_reported() {
        let mut doc = sample();
        doc.entities.push(doc.entities[1].clone());
        assert!(kinds(&doc).contains(&ViolationKind::EntityOverlap));
        assert_eq!(ViolationKind::EntityOverlap.name(), "entity overlap");
    }

    #[test]
    fn reports_all_violations_not_just_first() {
        let mut doc = sample();
        doc.doc_id.clear();
        doc.tokens[1].head_index = 99;
        doc.entities[0].surface = "Artet".into();
        let k = kinds(&doc);
        assert!(k.contains(&ViolationKind::EmptyDocId));
        assert!(k.contains(&ViolationKind::HeadOutOfRange));
        assert!(k.contains(&ViolationKind::EntityAlignment));
    }

    #[test]
    fn detects_cycles() {
        let mut doc = sample();
        doc.tokens[0].head_index = 2;
        doc.tokens[2].head_index = 0;
        doc.tokens[1].head_index = 0;
        assert!(kinds(&doc).contains(&ViolationKind::DependencyCycle));
    }

    #[test]
    fn rejects_offsets_inside_multibyte_chars() {
        let doc = DocBuilder::new("u").sentence("Zürich|ROOT|0").build();
        assert_eq!(validate(&doc), Ok(()));
        let mut bad = doc.clone();
        bad.tokens[0].char_end = 2; // inside 'ü'
        assert!(kinds(&bad).contains(&ViolationKind::CharBoundary));
    }

    #[test]
    fn sentence_gap_and_cross_sentence_head() {
        let mut doc = sample();
        doc.sentences[1].token_start = 4;
        assert!(kinds(&doc).contains(&ViolationKind::SentencePartition));

        let mut doc = sample();
        doc.tokens[3].head_index = 1;
        assert!(kinds(&doc).contains(&ViolationKind::HeadCrossesSentence));
    }

    #[test]
    fn empty_document_is_valid() {
        let doc = DocBuilder::new("empty").build();
        assert_eq!(validate(&doc), Ok(()));
    }
}
