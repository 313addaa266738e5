use super::{AnnotatedDocument, EntityMention, SentenceSpan, Token};

/// Incremental constructor for annotated documents.
///
/// Sentences are written in a compact `text|deprel|head` notation, one entry
/// per whitespace-separated token. `head` is the sentence-relative index of the
/// governing token (a token pointing at itself is the root). A leading `+`
/// glues the token to its predecessor without a space:
///
/// ```
/// use factsum_core::corpus::DocBuilder;
///
/// let doc = DocBuilder::new("d")
///     .sentence("Arteta|nsubj|1 retired|ROOT|1 +.|punct|1")
///     .entity(0, 0, 1, "PERSON")
///     .build();
/// assert_eq!(doc.text, "Arteta retired.");
/// ```
#[derive(Debug, Clone)]
pub struct DocBuilder {
    doc: AnnotatedDocument,
    sentence_starts: Vec<usize>,
}

impl DocBuilder {
    pub fn new(doc_id: impl Into<String>) -> Self {
        DocBuilder {
            doc: AnnotatedDocument {
                doc_id: doc_id.into(),
                text: String::new(),
                tokens: Vec::new(),
                sentences: Vec::new(),
                entities: Vec::new(),
            },
            sentence_starts: Vec::new(),
        }
    }

    /// Appends a sentence in `text|deprel|head` notation.
    ///
    /// Panics on malformed notation; intended for fixtures and generators.
    pub fn sentence(self, notation: &str) -> Self {
        let toks: Vec<(String, String, usize, bool)> = notation
            .split_whitespace()
            .map(|item| {
                let mut parts = item.rsplitn(3, '|');
                let head = parts.next().and_then(|h| h.parse().ok());
                let deprel = parts.next();
                let text = parts.next();
                let (Some(head), Some(deprel), Some(text)) = (head, deprel, text) else {
                    panic!("malformed token notation {item:?}");
                };
                let (text, glued) = match text.strip_prefix('+') {
                    Some(rest) if !rest.is_empty() => (rest, true),
                    _ => (text, false),
                };
                (text.to_string(), deprel.to_string(), head, glued)
            })
            .collect();
        self.sentence_tokens(
            toks.iter()
                .map(|(t, d, h, g)| (t.as_str(), d.as_str(), *h, *g)),
        )
    }

    /// Appends a sentence from `(text, deprel, sentence-relative head, glued)` tuples.
    pub fn sentence_tokens<'a>(
        mut self,
        tokens: impl IntoIterator<Item = (&'a str, &'a str, usize, bool)>,
    ) -> Self {
        let base = self.doc.tokens.len();
        self.sentence_starts.push(base);
        for (k, (text, deprel, head, glued)) in tokens.into_iter().enumerate() {
            let first_in_doc = self.doc.text.is_empty();
            if !first_in_doc && !(glued && k > 0) {
                self.doc.text.push(' ');
            }
            let start = self.doc.text.len();
            self.doc.text.push_str(text);
            self.doc.tokens.push(Token {
                index: base + k,
                text: text.to_string(),
                char_start: start,
                char_end: self.doc.text.len(),
                head_index: base + head,
                deprel: deprel.to_string(),
            });
        }
        let end = self.doc.tokens.len();
        if end > base {
            self.doc.sentences.push(SentenceSpan {
                token_start: base,
                token_end: end,
                char_start: self.doc.tokens[base].char_start,
                char_end: self.doc.tokens[end - 1].char_end,
            });
        } else {
            self.sentence_starts.pop();
        }
        self
    }

    /// Marks tokens `start..end` (relative to sentence `sentence`) as an entity.
    pub fn entity(mut self, sentence: usize, start: usize, end: usize, label: &str) -> Self {
        let base = self.sentence_starts[sentence];
        let (ts, te) = (base + start, base + end);
        let surface = self.doc.text[self.doc.char_range(ts..te)].to_string();
        self.doc.entities.push(EntityMention {
            token_start: ts,
            token_end: te,
            label: label.to_string(),
            surface,
        });
        self
    }

    pub fn sentence_count(&self) -> usize {
        self.doc.sentences.len()
    }

    pub fn build(mut self) -> AnnotatedDocument {
        self.doc.entities.sort_by_key(|e| e.token_start);
        self.doc
    }
}
