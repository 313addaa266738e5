//! ROUGE-1/2/L scoring for sentence selection.
//!
//! No stemming and no stopword removal. Tokens are lowercased maximal runs of
//! alphanumeric characters.

use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub fn from_counts(overlap: usize, candidate_total: usize, reference_total: usize) -> Self {
        if overlap == 0 || candidate_total == 0 || reference_total == 0 {
            return RougeScore::default();
        }
        let precision = overlap as f64 / candidate_total as f64;
        let recall = overlap as f64 / reference_total as f64;
        RougeScore {
            precision,
            recall,
            f1: 2.0 * precision * recall / (precision + recall),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RougeVariant {
    #[default]
    #[serde(alias = "r1", alias = "rouge1")]
    R1,
    #[serde(alias = "r2", alias = "rouge2")]
    R2,
    #[serde(alias = "rl", alias = "rougeL")]
    RL,
}

impl FromStr for RougeVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "r1" | "rouge1" | "rouge-1" => Ok(RougeVariant::R1),
            "r2" | "rouge2" | "rouge-2" => Ok(RougeVariant::R2),
            "rl" | "rougel" | "rouge-l" => Ok(RougeVariant::RL),
            other => Err(format!("unknown ROUGE variant {other:?}")),
        }
    }
}

/// Lowercases and splits on every maximal run of non-alphanumeric characters.
pub fn rouge_tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            let key: Vec<&str> = window.iter().map(AsRef::as_ref).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

/// ROUGE-N over pre-tokenized sequences.
///
/// # Panics
/// If `n` is zero.
pub fn rouge_n_tokens<T: AsRef<str>>(candidate: &[T], reference: &[T], n: usize) -> RougeScore {
    assert!(n >= 1, "ROUGE-N requires n >= 1");
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let cand_total: usize = cand.values().sum();
    let ref_total: usize = refs.values().sum();
    let overlap: usize = cand
        .iter()
        .map(|(gram, c)| refs.get(gram).map_or(0, |r| (*c).min(*r)))
        .sum();
    RougeScore::from_counts(overlap, cand_total, ref_total)
}

pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> RougeScore {
    rouge_n_tokens(&rouge_tokenize(candidate), &rouge_tokenize(reference), n)
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l_tokens<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> RougeScore {
    let a: Vec<&str> = candidate.iter().map(AsRef::as_ref).collect();
    let b: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    RougeScore::from_counts(lcs_len(&a, &b), a.len(), b.len())
}

pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    rouge_l_tokens(&rouge_tokenize(candidate), &rouge_tokenize(reference))
}

/// Dispatches on the variant.
pub fn rouge_tokens<T: AsRef<str>>(variant: RougeVariant, candidate: &[T], reference: &[T]) -> RougeScore {
    match variant {
        RougeVariant::R1 => rouge_n_tokens(candidate, reference, 1),
        RougeVariant::R2 => rouge_n_tokens(candidate, reference, 2),
        RougeVariant::RL => rouge_l_tokens(candidate, reference),
    }
}
