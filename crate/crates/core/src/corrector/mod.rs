//! Hallucination detection and repair for reference summaries.
//!
//! A summary entity is hallucinated when no document entity has the same
//! normalized surface. Repairs either swap in a shorter document entity of the
//! same label whose words are all contained in the hallucinated one, or delete
//! the entity together with its dependency-attached words.

mod prune;
mod rebuild;

pub use prune::remove_entity_with_deps;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_surface, AnnotatedDocument, EntityMention, SummaryExample};
use crate::error::CorrectorError;
use crate::rouge::rouge_tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionStatus {
    Factual,
    Hallucinated,
}

impl fmt::Display for MentionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MentionStatus::Factual => "factual",
            MentionStatus::Hallucinated => "hallucinated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HallucinationReport {
    pub mention: EntityMention,
    pub status: MentionStatus,
    pub replacement: Option<EntityMention>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionStrategy {
    Replace,
    Remove,
    #[default]
    Combined,
}

impl FromStr for CorrectionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "replace" => Ok(CorrectionStrategy::Replace),
            "remove" => Ok(CorrectionStrategy::Remove),
            "combined" => Ok(CorrectionStrategy::Combined),
            other => Err(format!("unknown strategy {other:?} (replace|remove|combined)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Replace,
    Remove,
}

/// One change to the original summary text. Ranges refer to the original.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub kind: EditKind,
    pub summary_char_range: [usize; 2],
    pub original_text: String,
    pub new_text: String,
    pub removed_token_indices: Vec<usize>,
}

impl Edit {
    pub fn range(&self) -> Range<usize> {
        self.summary_char_range[0]..self.summary_char_range[1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectedSummary {
    pub text: String,
    /// Non-overlapping, sorted by start offset.
    pub edits: Vec<Edit>,
    /// The corrected summary with annotations carried over from the original:
    /// removed tokens dropped, replacements spliced in, offsets shifted.
    pub summary: AnnotatedDocument,
    pub hallucinated: usize,
    pub replaced: usize,
    pub removed: usize,
}

impl CorrectedSummary {
    pub fn changed(&self) -> bool {
        !self.edits.is_empty()
    }
}

/// Replays edits right-to-left over `original`.
pub fn apply_edits(original: &str, edits: &[Edit]) -> String {
    let mut order: Vec<&Edit> = edits.iter().collect();
    order.sort_by_key(|e| std::cmp::Reverse(e.summary_char_range[0]));
    let mut text = original.to_string();
    for edit in order {
        text.replace_range(edit.range(), &edit.new_text);
    }
    text
}

fn document_surfaces(doc: &AnnotatedDocument) -> HashSet<String> {
    doc.entities.iter().map(|e| normalize_surface(&e.surface)).collect()
}

/// One report per summary entity, in summary order. Labels are ignored.
pub fn detect_hallucinations(example: &SummaryExample) -> Vec<HallucinationReport> {
    let known = document_surfaces(&example.document);
    example
        .summary
        .entities
        .iter()
        .map(|m| {
            if known.contains(&normalize_surface(&m.surface)) {
                HallucinationReport {
                    mention: m.clone(),
                    status: MentionStatus::Factual,
                    replacement: None,
                }
            } else {
                HallucinationReport {
                    mention: m.clone(),
                    status: MentionStatus::Hallucinated,
                    replacement: find_replacement(m, &example.document).cloned(),
                }
            }
        })
        .collect()
}

/// Largest same-label document entity whose word set is a non-empty subset
/// of the mention's words. Ties go to the earliest occurrence.
pub fn find_replacement<'d>(mention: &EntityMention, doc: &'d AnnotatedDocument) -> Option<&'d EntityMention> {
    let words: HashSet<String> = rouge_tokenize(&mention.surface).into_iter().collect();
    let mut best: Option<(&EntityMention, usize)> = None;
    let mut candidates: Vec<&EntityMention> = doc.entities.iter().filter(|e| e.label == mention.label).collect();
    candidates.sort_by_key(|e| e.token_start);
    for cand in candidates {
        let cand_words: HashSet<String> = rouge_tokenize(&cand.surface).into_iter().collect();
        if cand_words.is_empty() || !cand_words.is_subset(&words) {
            continue;
        }
        if best.is_none_or(|(_, size)| cand_words.len() > size) {
            best = Some((cand, cand_words.len()));
        }
    }
    best.map(|(e, _)| e)
}

/// Internal bookkeeping for how an edit came about; needed to carry
/// annotations over to the corrected summary.
#[derive(Debug, Clone)]
pub(crate) enum EditOrigin {
    /// Mention index in the summary, entity index in the document.
    Replace { mention: usize, source: usize },
    Remove,
    /// Re-capitalization of the first character of `token`.
    Capitalize,
}

/// Repairs the summary with the chosen strategy.
///
/// Sentences are handled independently since dependency trees never cross
/// sentence boundaries.
pub fn correct(example: &SummaryExample, strategy: CorrectionStrategy) -> Result<CorrectedSummary, CorrectorError> {
    let summary = &example.summary;
    let document = &example.document;
    let known = document_surfaces(document);

    let hallucinated: Vec<usize> = summary
        .entities
        .iter()
        .enumerate()
        .filter(|(_, m)| !known.contains(&normalize_surface(&m.surface)))
        .map(|(i, _)| i)
        .collect();
    for (a, &i) in hallucinated.iter().enumerate() {
        for &j in &hallucinated[a + 1..] {
            let (mi, mj) = (&summary.entities[i], &summary.entities[j]);
            if mi.overlaps(mj) {
                return Err(CorrectorError::OverlappingMentions(
                    mi.token_start.max(mj.token_start),
                    mi.token_end.min(mj.token_end),
                ));
            }
        }
    }

    // mention index -> document entity index
    let mut replacements: Vec<(usize, usize)> = Vec::new();
    let mut to_remove: Vec<usize> = Vec::new();
    for &i in &hallucinated {
        let replacement = match strategy {
            CorrectionStrategy::Remove => None,
            _ => find_replacement(&summary.entities[i], document),
        };
        match replacement {
            Some(src) => {
                let idx = document
                    .entities
                    .iter()
                    .position(|e| std::ptr::eq(e, src))
                    .expect("replacement comes from the document");
                replacements.push((i, idx));
            }
            None if strategy != CorrectionStrategy::Replace => to_remove.push(i),
            None => {}
        }
    }

    let mut removal: BTreeSet<usize> = BTreeSet::new();
    for &i in &to_remove {
        removal.extend(remove_entity_with_deps(&summary.entities[i], summary));
    }
    // A replacement swallowed by another mention's removal is removed instead.
    loop {
        let swallowed: Vec<usize> = replacements
            .iter()
            .filter(|(m, _)| summary.entities[*m].tokens().any(|t| removal.contains(&t)))
            .map(|(m, _)| *m)
            .collect();
        if swallowed.is_empty() {
            break;
        }
        for m in swallowed {
            replacements.retain(|(r, _)| *r != m);
            to_remove.push(m);
            removal.extend(remove_entity_with_deps(&summary.entities[m], summary));
        }
    }

    let mut planned: Vec<(Edit, EditOrigin)> = Vec::new();
    for &(m, src) in &replacements {
        let mention = &summary.entities[m];
        let range = summary.mention_range(mention);
        planned.push((
            Edit {
                kind: EditKind::Replace,
                summary_char_range: [range.start, range.end],
                original_text: summary.text[range].to_string(),
                new_text: document.entities[src].surface.clone(),
                removed_token_indices: Vec::new(),
            },
            EditOrigin::Replace { mention: m, source: src },
        ));
    }
    for run in contiguous_runs(&removal) {
        let range = absorb_whitespace(&summary.text, summary.char_range(run.clone()));
        planned.push((
            Edit {
                kind: EditKind::Remove,
                summary_char_range: [range.start, range.end],
                original_text: summary.text[range].to_string(),
                new_text: String::new(),
                removed_token_indices: run.collect(),
            },
            EditOrigin::Remove,
        ));
    }
    recapitalize(summary, &removal, &mut planned);
    planned.sort_by_key(|(e, _)| e.summary_char_range[0]);

    let edits: Vec<Edit> = planned.iter().map(|(e, _)| e.clone()).collect();
    let text = apply_edits(&summary.text, &edits);
    let rebuilt = rebuild::rebuild_summary(summary, document, &text, &planned, &removal);
    Ok(CorrectedSummary {
        text,
        edits,
        summary: rebuilt,
        hallucinated: hallucinated.len(),
        replaced: replacements.len(),
        removed: to_remove.len(),
    })
}

fn contiguous_runs(set: &BTreeSet<usize>) -> Vec<Range<usize>> {
    let mut runs: Vec<Range<usize>> = Vec::new();
    for &t in set {
        match runs.last_mut() {
            Some(run) if run.end == t => run.end = t + 1,
            _ => runs.push(t..t + 1),
        }
    }
    runs
}

/// Extends a deleted span over the whitespace that follows it, or, when the
/// span is followed by punctuation or the end of text, over the whitespace
/// that precedes it. Leaves exactly one separator at the seam.
fn absorb_whitespace(text: &str, range: Range<usize>) -> Range<usize> {
    let after = &text[range.end..];
    let trailing = after.len() - after.trim_start().len();
    if trailing > 0 {
        return range.start..range.end + trailing;
    }
    let before = &text[..range.start];
    let leading = before.len() - before.trim_end().len();
    range.start - leading..range.end
}

/// When a removal eats the start of a sentence that began with an uppercase
/// letter, the first surviving word is capitalized.
fn recapitalize(summary: &AnnotatedDocument, removal: &BTreeSet<usize>, planned: &mut Vec<(Edit, EditOrigin)>) {
    for sent in &summary.sentences {
        if !removal.contains(&sent.token_start) {
            continue;
        }
        let starts_upper = summary.text[sent.chars()].chars().next().is_some_and(char::is_uppercase);
        if !starts_upper {
            continue;
        }
        let Some(first) = sent.tokens().find(|t| !removal.contains(t)) else {
            continue;
        };
        // The surviving token may itself be a replacement target.
        let replaced = planned.iter_mut().find(|(_, origin)| {
            matches!(origin, EditOrigin::Replace { mention, .. }
                if summary.entities[*mention].token_start == first)
        });
        if let Some((edit, _)) = replaced {
            edit.new_text = capitalize_first(&edit.new_text);
            continue;
        }
        let tok = &summary.tokens[first];
        let Some(c) = tok.text.chars().next() else { continue };
        if !c.is_lowercase() {
            continue;
        }
        let range = tok.char_start..tok.char_start + c.len_utf8();
        planned.push((
            Edit {
                kind: EditKind::Replace,
                summary_char_range: [range.start, range.end],
                original_text: c.to_string(),
                new_text: c.to_uppercase().collect(),
                removed_token_indices: Vec::new(),
            },
            EditOrigin::Capitalize,
        ));
    }
}

fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Tab-separated detection report rows: doc_id, mention, status, replacement.
pub fn detection_rows(example: &SummaryExample) -> Vec<String> {
    detect_hallucinations(example)
        .into_iter()
        .map(|r| {
            format!(
                "{}\t{}\t{}\t{}",
                tsv_field(&example.document.doc_id),
                tsv_field(&r.mention.surface),
                r.status,
                r.replacement.as_ref().map_or(String::new(), |e| tsv_field(&e.surface)),
            )
        })
        .collect()
}

fn tsv_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}
