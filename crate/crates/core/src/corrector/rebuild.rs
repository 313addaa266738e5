//! Carries token, sentence, entity and dependency annotations over to the
//! corrected summary text.

use std::collections::{BTreeSet, HashMap};

use super::{Edit, EditOrigin};
use crate::corpus::{AnnotatedDocument, EntityMention, SentenceSpan, Token};

/// Where a token of the rebuilt summary came from.
enum Source {
    Original(usize),
    /// Token `doc_token` of a document entity spliced in for summary mention `mention`.
    Spliced { mention: usize, doc_token: usize },
}

pub(super) fn rebuild_summary(
    summary: &AnnotatedDocument,
    document: &AnnotatedDocument,
    new_text: &str,
    planned: &[(Edit, EditOrigin)],
    removal: &BTreeSet<usize>,
) -> AnnotatedDocument {
    let n = summary.tokens.len();
    // Shift applied to an original offset lying outside every edit interior.
    let shift_at = |offset: usize| -> isize {
        planned
            .iter()
            .filter(|(e, _)| e.summary_char_range[1] <= offset)
            .map(|(e, _)| e.new_text.len() as isize - (e.summary_char_range[1] - e.summary_char_range[0]) as isize)
            .sum()
    };
    let map_offset = |offset: usize| -> usize { (offset as isize + shift_at(offset)) as usize };

    let mut replaced_by: HashMap<usize, (usize, usize, usize)> = HashMap::new(); // token -> (mention, source, edit start)
    for (edit, origin) in planned {
        if let EditOrigin::Replace { mention, source } = origin {
            for t in summary.entities[*mention].tokens() {
                replaced_by.insert(t, (*mention, *source, edit.summary_char_range[0]));
            }
        }
    }

    let mut sources: Vec<Source> = Vec::new();
    let mut new_tokens: Vec<Token> = Vec::new();
    let mut token_sentence: Vec<usize> = Vec::new();
    let mut new_index: Vec<Option<usize>> = vec![None; n];
    let mut mention_root: HashMap<usize, usize> = HashMap::new();

    for t in 0..n {
        if removal.contains(&t) {
            continue;
        }
        let sentence = summary.sentence_of(t).unwrap_or(0);
        if let Some(&(mention, source, edit_start)) = replaced_by.get(&t) {
            let m = &summary.entities[mention];
            if t == m.token_start {
                let ent = &document.entities[source];
                let base_doc = document.tokens[ent.token_start].char_start;
                let base_new = map_offset(edit_start);
                let first_new = new_tokens.len();
                for dt in ent.tokens() {
                    let dtok = &document.tokens[dt];
                    let start = base_new + (dtok.char_start - base_doc);
                    let end = base_new + (dtok.char_end - base_doc);
                    new_tokens.push(Token {
                        index: new_tokens.len(),
                        text: new_text[start..end].to_string(),
                        char_start: start,
                        char_end: end,
                        head_index: usize::MAX,
                        deprel: dtok.deprel.clone(),
                    });
                    sources.push(Source::Spliced { mention, doc_token: dt });
                    token_sentence.push(sentence);
                }
                let root = ent
                    .tokens()
                    .position(|dt| !ent.tokens().contains(&document.tokens[dt].head_index) || document.tokens[dt].is_root())
                    .unwrap_or(0);
                mention_root.insert(mention, first_new + root);
            }
            new_index[t] = mention_root.get(&mention).copied();
            continue;
        }
        let tok = &summary.tokens[t];
        let (start, end) = (map_offset(tok.char_start), map_offset(tok.char_end));
        new_index[t] = Some(new_tokens.len());
        new_tokens.push(Token {
            index: new_tokens.len(),
            text: new_text[start..end].to_string(),
            char_start: start,
            char_end: end,
            head_index: usize::MAX,
            deprel: tok.deprel.clone(),
        });
        sources.push(Source::Original(t));
        token_sentence.push(sentence);
    }

    // Nearest surviving ancestor of original token `t`, or None when the
    // chain ends at a removed root.
    let surviving_head = |t: usize| -> Option<usize> {
        let mut h = summary.tokens[t].head_index;
        if h == t {
            return None;
        }
        let mut steps = 0;
        while removal.contains(&h) && steps <= n {
            let next = summary.tokens[h].head_index;
            if next == h {
                return None;
            }
            h = next;
            steps += 1;
        }
        new_index[h]
    };

    for (i, source) in sources.iter().enumerate() {
        let head = match *source {
            Source::Original(t) => surviving_head(t),
            Source::Spliced { mention, doc_token } => {
                let ent = summary.entities.get(mention).expect("mention exists");
                let doc_ent_range = splice_range(&sources, i, mention);
                let dtok = &document.tokens[doc_token];
                let doc_first = match sources[doc_ent_range.start] {
                    Source::Spliced { doc_token, .. } => doc_token,
                    Source::Original(_) => unreachable!(),
                };
                let doc_len = doc_ent_range.len();
                if !dtok.is_root() && (doc_first..doc_first + doc_len).contains(&dtok.head_index) {
                    Some(doc_ent_range.start + (dtok.head_index - doc_first))
                } else if Some(&i) == mention_root.get(&mention) {
                    let root = ent
                        .tokens()
                        .find(|&t| !ent.tokens().contains(&summary.tokens[t].head_index) || summary.tokens[t].is_root())
                        .unwrap_or(ent.token_start);
                    new_tokens[i].deprel = summary.tokens[root].deprel.clone();
                    surviving_head(root)
                } else {
                    mention_root.get(&mention).copied()
                }
            }
        };
        new_tokens[i].head_index = head.filter(|h| *h != i).unwrap_or(i);
    }

    let mut sentences: Vec<SentenceSpan> = Vec::new();
    let mut start = 0;
    while start < new_tokens.len() {
        let mut end = start + 1;
        while end < new_tokens.len() && token_sentence[end] == token_sentence[start] {
            end += 1;
        }
        sentences.push(SentenceSpan {
            token_start: start,
            token_end: end,
            char_start: new_tokens[start].char_start,
            char_end: new_tokens[end - 1].char_end,
        });
        start = end;
    }

    let mut entities: Vec<EntityMention> = Vec::new();
    for (mi, m) in summary.entities.iter().enumerate() {
        if m.tokens().any(|t| removal.contains(&t)) {
            continue;
        }
        let range = if let Some(&root) = mention_root.get(&mi) {
            splice_range(&sources, root, mi)
        } else {
            let (Some(first), Some(last)) = (new_index[m.token_start], new_index[m.token_end - 1]) else {
                continue;
            };
            first..last + 1
        };
        let chars = new_tokens[range.start].char_start..new_tokens[range.end - 1].char_end;
        entities.push(EntityMention {
            token_start: range.start,
            token_end: range.end,
            label: m.label.clone(),
            surface: new_text[chars].to_string(),
        });
    }

    AnnotatedDocument {
        doc_id: summary.doc_id.clone(),
        text: new_text.to_string(),
        tokens: new_tokens,
        sentences,
        entities,
    }
}

/// Range of rebuilt tokens spliced in for `mention`, given any index inside it.
fn splice_range(sources: &[Source], at: usize, mention: usize) -> std::ops::Range<usize> {
    let belongs = |i: usize| matches!(sources[i], Source::Spliced { mention: m, .. } if m == mention);
    let mut start = at;
    while start > 0 && belongs(start - 1) {
        start -= 1;
    }
    let mut end = at + 1;
    while end < sources.len() && belongs(end) {
        end += 1;
    }
    start..end
}
