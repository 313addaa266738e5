//! Factuality-aware gap-sentence selection.
//!
//! Every sentence is scored by ROUGE F1 against the rest of the document; the
//! `candidate_pool` best sentences additionally receive a binary consistency
//! verdict and the best combined score among them becomes the pseudo-summary.
//! The chosen sentence is replaced by a mask token in the pseudo-document.

use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedDocument;
use crate::error::GsgError;
use crate::rouge::{rouge_tokenize, rouge_tokens, RougeVariant};
use crate::scorer::{ConsistencyScorer, ConsistencyVerdict, Passage, VerdictCache};

pub const DEFAULT_MASK_TOKEN: &str = "<mask>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub variant: RougeVariant,
    pub candidate_pool: usize,
    pub mask_token: String,
    pub skip_short_docs: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            variant: RougeVariant::R1,
            candidate_pool: 5,
            mask_token: DEFAULT_MASK_TOKEN.to_string(),
            skip_short_docs: true,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), GsgError> {
        if self.candidate_pool == 0 {
            return Err(GsgError::Config("candidate_pool must be >= 1".into()));
        }
        validate_mask_token(&self.mask_token).map_err(GsgError::Config)
    }
}

pub(crate) fn validate_mask_token(mask: &str) -> Result<(), String> {
    if mask.is_empty() {
        Err("mask_token must be non-empty".into())
    } else if mask.chars().any(char::is_whitespace) {
        Err(format!("mask_token {mask:?} must not contain whitespace"))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionScore {
    #[serde(rename = "i")]
    pub sentence_index: usize,
    #[serde(rename = "rouge")]
    pub rouge_f1: f64,
    /// `None` for sentences outside the candidate pool.
    #[serde(rename = "factcc")]
    pub factuality: Option<u8>,
    pub combined: f64,
}

impl SelectionScore {
    pub fn is_scored(&self) -> bool {
        self.factuality.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoExample {
    pub doc_id: String,
    pub pseudo_document: String,
    pub pseudo_summary: String,
    pub selected_index: usize,
    pub scores: Vec<SelectionScore>,
}

/// Scores every sentence of `doc`.
///
/// The consistency scorer is only consulted for the `candidate_pool`
/// sentences with the highest ROUGE F1 (ties toward the lower index).
pub fn score_sentences(
    doc: &AnnotatedDocument,
    config: &SelectionConfig,
    scorer: &dyn ConsistencyScorer,
    cache: Option<&VerdictCache>,
) -> Result<Vec<SelectionScore>, GsgError> {
    let n = doc.sentences.len();
    if n < 2 {
        return Err(GsgError::ShortDocument { sentences: n });
    }
    let tokens: Vec<Vec<String>> = (0..n).map(|i| rouge_tokenize(doc.sentence_text(i))).collect();

    let mut scores: Vec<SelectionScore> = (0..n)
        .map(|i| {
            let rest: Vec<&str> = tokens
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, t)| t.iter().map(String::as_str))
                .collect();
            let own: Vec<&str> = tokens[i].iter().map(String::as_str).collect();
            let rouge_f1 = rouge_tokens(config.variant, &own, &rest).f1;
            SelectionScore {
                sentence_index: i,
                rouge_f1,
                factuality: None,
                combined: rouge_f1,
            }
        })
        .collect();

    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&a, &b| {
        scores[b]
            .rouge_f1
            .total_cmp(&scores[a].rouge_f1)
            .then(a.cmp(&b))
    });

    for &i in ranked.iter().take(config.candidate_pool) {
        let compute = || {
            let (claim, context) = claim_and_context(doc, i);
            scorer.score(&claim, &context)
        };
        let verdict = match cache {
            Some(cache) => cache.get_or_try_insert(&doc.doc_id, i, compute)?,
            None => compute()?,
        };
        let score = &mut scores[i];
        score.factuality = Some(verdict.label());
        score.combined = score.rouge_f1 + f64::from(verdict.label());
    }
    Ok(scores)
}

/// Sentence `i` as a claim and the remaining sentences, joined by single
/// spaces, as its context.
pub fn claim_and_context(doc: &AnnotatedDocument, i: usize) -> (Passage<'_>, Passage<'_>) {
    let claim = Passage {
        text: doc.sentence_text(i).into(),
        entities: doc.entities_in_sentence(i).map(|e| e.surface.as_str()).collect(),
    };
    let others = (0..doc.sentences.len()).filter(|&j| j != i);
    let context = Passage {
        text: others
            .clone()
            .map(|j| doc.sentence_text(j))
            .collect::<Vec<_>>()
            .join(" ")
            .into(),
        entities: others
            .flat_map(|j| doc.entities_in_sentence(j).map(|e| e.surface.as_str()))
            .collect(),
    };
    (claim, context)
}

/// Index of the best combined score among sentences with a verdict.
pub fn select_gap_sentence(scores: &[SelectionScore]) -> Result<usize, GsgError> {
    if scores.is_empty() {
        return Err(GsgError::EmptyScores);
    }
    let mut best: Option<&SelectionScore> = None;
    for s in scores.iter().filter(|s| s.is_scored()) {
        let better = match best {
            None => true,
            Some(b) => {
                s.combined > b.combined
                    || (s.combined == b.combined && s.sentence_index < b.sentence_index)
            }
        };
        if better {
            best = Some(s);
        }
    }
    best.map(|s| s.sentence_index).ok_or(GsgError::NoScoredSentence)
}

/// Replaces sentence `selected_index` with the mask token.
///
/// Whitespace at the seams is normalized to one space on each side of the mask.
pub fn build_pseudo_example(
    doc: &AnnotatedDocument,
    selected_index: usize,
    mask_token: &str,
) -> Result<PseudoExample, GsgError> {
    let sent = doc
        .sentences
        .get(selected_index)
        .ok_or(GsgError::IndexOutOfRange {
            index: selected_index,
            sentences: doc.sentences.len(),
        })?;
    let before = doc.text[..sent.char_start].trim_end();
    let after = doc.text[sent.char_end..].trim_start();
    let pseudo_document = [before, mask_token, after]
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    Ok(PseudoExample {
        doc_id: doc.doc_id.clone(),
        pseudo_document,
        pseudo_summary: doc.sentence_text(selected_index).to_string(),
        selected_index,
        scores: Vec::new(),
    })
}

/// Inverse of the masking step: puts the summary back in place of the mask.
pub fn reconstruct(pseudo_document: &str, pseudo_summary: &str, mask_token: &str) -> String {
    pseudo_document.replacen(mask_token, pseudo_summary, 1)
}

/// Full per-document transform: score, select, mask.
pub fn make_pseudo_example(
    doc: &AnnotatedDocument,
    config: &SelectionConfig,
    scorer: &dyn ConsistencyScorer,
    cache: Option<&VerdictCache>,
) -> Result<PseudoExample, GsgError> {
    if doc.text.contains(&config.mask_token) {
        return Err(GsgError::MaskCollision(config.mask_token.clone()));
    }
    let scores = score_sentences(doc, config, scorer, cache)?;
    let selected = select_gap_sentence(&scores)?;
    let mut example = build_pseudo_example(doc, selected, &config.mask_token)?;
    example.scores = scores;
    Ok(example)
}

/// Scorer that returns the same verdict for everything; with `Consistent`
/// selection degenerates to plain ROUGE ranking.
#[derive(Debug, Clone, Copy)]
pub struct ConstantScorer(pub ConsistencyVerdict);

impl ConsistencyScorer for ConstantScorer {
    fn score(
        &self,
        _claim: &Passage<'_>,
        _context: &Passage<'_>,
    ) -> Result<ConsistencyVerdict, crate::error::ScorerError> {
        Ok(self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocBuilder;
    use crate::scorer::EntityContainmentScorer;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn plain_doc(sentences: &[&str]) -> AnnotatedDocument {
        let mut b = DocBuilder::new("plain");
        for s in sentences {
            let words: Vec<&str> = s.split(' ').collect();
            let toks = words.iter().enumerate().map(|(k, w)| (*w, if k == 0 { "ROOT" } else { "dep" }, 0, false));
            b = b.sentence_tokens(toks);
        }
        b.build()
    }

    struct Counting(AtomicUsize);
    impl ConsistencyScorer for Counting {
        fn score(&self, _: &Passage<'_>, _: &Passage<'_>) -> Result<ConsistencyVerdict, crate::error::ScorerError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(ConsistencyVerdict::Consistent)
        }
    }

    #[test]
    fn identical_sentences_tie_to_lowest_index() {
        let doc = plain_doc(&["the cat sat", "the cat sat"]);
        let scores = score_sentences(&doc, &SelectionConfig::default(), &EntityContainmentScorer, None).unwrap();
        assert_eq!(scores[0].rouge_f1, 1.0);
        assert_eq!(scores[1].rouge_f1, 1.0);
        assert_eq!(select_gap_sentence(&scores).unwrap(), 0);
    }

    #[test]
    fn candidate_pool_limits_scorer_calls() {
        let doc = plain_doc(&["a b", "b c", "c d", "d e", "e f", "f g", "g h"]);
        let scorer = Counting(AtomicUsize::new(0));
        let scores = score_sentences(&doc, &SelectionConfig::default(), &scorer, None).unwrap();
        assert_eq!(scores.len(), 7);
        assert_eq!(scores.iter().filter(|s| s.is_scored()).count(), 5);
        assert_eq!(scorer.0.load(Ordering::SeqCst), 5);
    }

    #[test]
    fn short_document_rejected() {
        let doc = plain_doc(&["only one sentence"]);
        let err = score_sentences(&doc, &SelectionConfig::default(), &EntityContainmentScorer, None).unwrap_err();
        assert_eq!(err, GsgError::ShortDocument { sentences: 1 });
    }

    fn score(i: usize, rouge: f64, fact: Option<u8>) -> SelectionScore {
        SelectionScore {
            sentence_index: i,
            rouge_f1: rouge,
            factuality: fact,
            combined: rouge + fact.map_or(0.0, f64::from),
        }
    }

    #[test]
    fn selection_rules() {
        assert_eq!(select_gap_sentence(&[]), Err(GsgError::EmptyScores));
        let equal = [score(0, 0.5, Some(1)), score(1, 0.5, Some(1)), score(2, 0.5, Some(1))];
        assert_eq!(select_gap_sentence(&equal).unwrap(), 0);
        // [1.3, 0.9, 1.3-unscored]
        let mixed = [score(0, 0.3, Some(1)), score(1, 0.9, Some(0)), score(2, 1.3, None)];
        assert_eq!(select_gap_sentence(&mixed).unwrap(), 0);
        assert_eq!(
            select_gap_sentence(&[score(0, 0.2, None)]),
            Err(GsgError::NoScoredSentence)
        );
    }

    #[test]
    fn masking_middle_and_first() {
        let doc = plain_doc(&["s0 a.", "s1 b.", "s2 c."]);
        let ex = build_pseudo_example(&doc, 1, "<mask>").unwrap();
        assert_eq!(ex.pseudo_document, "s0 a. <mask> s2 c.");
        assert_eq!(ex.pseudo_summary, "s1 b.");
        let first = build_pseudo_example(&doc, 0, "<mask>").unwrap();
        assert!(first.pseudo_document.starts_with("<mask>"));
        assert_eq!(reconstruct(&first.pseudo_document, &first.pseudo_summary, "<mask>"), doc.text);
        let last = build_pseudo_example(&doc, 2, "<mask>").unwrap();
        assert_eq!(last.pseudo_document, "s0 a. s1 b. <mask>");
        assert!(build_pseudo_example(&doc, 3, "<mask>").is_err());
    }

    #[test]
    fn mask_collision_rejected() {
        let doc = plain_doc(&["has <mask> inside", "second one"]);
        let err = make_pseudo_example(&doc, &SelectionConfig::default(), &EntityContainmentScorer, None).unwrap_err();
        assert!(matches!(err, GsgError::MaskCollision(_)));
    }

    #[test]
    fn config_validation() {
        let mut c = SelectionConfig::default();
        assert!(c.validate().is_ok());
        c.candidate_pool = 0;
        assert!(c.validate().is_err());
        let c = SelectionConfig {
            mask_token: "<m ask>".into(),
            ..SelectionConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn score_json_shape() {
        let json = serde_json::to_string(&score(2, 0.5, None)).unwrap();
        assert_eq!(json, r#"{"i":2,"rouge":0.5,"factcc":null,"combined":0.5}"#);
    }
}
