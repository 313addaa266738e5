//! Seeded generator of schema-valid synthetic corpora.
//!
//! Sentences come from a small set of parsed templates whose entity slots are
//! filled from fixed surface pools. Summaries reuse document entities and
//! plant hallucinations at a configurable rate, some of which extend a
//! document entity (and are therefore repairable by replacement).

use std::collections::{BTreeMap, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{normalize_surface, AnnotatedDocument, DocBuilder, SummaryExample};

/// `text|deprel|head` units; `{LABEL}` marks an entity slot and heads index units.
const TEMPLATES: &[&str] = &[
    "{PERSON}|nsubj|1 visited|ROOT|1 {GPE}|dobj|1 on|prep|1 {DATE}|pobj|3 +.|punct|1",
    "{ORG}|nsubj|1 paid|ROOT|1 {MONEY}|dobj|1 for|prep|1 {CARDINAL}|nummod|5 shares|pobj|3 +.|punct|1",
    "The|det|1 deal|nsubjpass|3 was|auxpass|3 announced|ROOT|3 in|prep|3 {GPE}|pobj|4 by|agent|3 {PERSON}|pobj|6 +.|punct|3",
    "Officials|nsubj|1 said|ROOT|1 {CARDINAL}|nummod|3 people|nsubj|4 attended|ccomp|1 the|det|6 event|dobj|4 at|prep|6 {ORG}|pobj|7 +.|punct|1",
    "{PERSON}|nsubj|1 joined|ROOT|1 {ORG}|dobj|1 in|prep|1 {DATE}|pobj|3 +.|punct|1",
    "Prices|nsubj|1 rose|ROOT|1 by|prep|1 {QUANTITY}|pobj|2 at|prep|1 {TIME}|pobj|4 +.|punct|1",
    "The|det|1 report|nsubj|2 praised|ROOT|2 {NORP}|amod|4 workers|dobj|2 in|prep|4 {GPE}|pobj|5 +.|punct|2",
    "{PERSON}|nsubj|1 met|ROOT|1 {PERSON}|dobj|1 in|prep|1 {GPE}|pobj|3 +.|punct|1",
];

const FIRST_NAMES: &[&str] = &[
    "Anna", "Carlos", "Mei", "Omar", "Ines", "Tom", "Priya", "Lars", "Nadia", "Kofi", "Elena", "Yuki", "Rafael",
    "Sara", "Ivan", "Leila", "Hugo", "Zara", "Felix", "Amara",
];
const SURNAMES: &[&str] = &[
    "Berg", "Ruiz", "Lin", "Haddad", "Duarte", "Okafor", "Nair", "Holm", "Petrov", "Mensah", "Rossi", "Tanaka",
    "Silva", "Novak", "Kaur", "Weber", "Moreau", "Osei", "Larsen", "Costa", "Ibrahim", "Fischer", "Quinn", "Sato",
];
const GPES: &[&str] = &[
    "Seattle", "Denver", "Lagos", "Lisbon", "Osaka", "Quito", "Oslo", "Nairobi", "Lyon", "Perth", "Cairo", "Lima",
    "Tbilisi", "Hanoi", "Dublin", "New Delhi", "Buenos Aires", "Cape Town", "Sao Paulo", "Kuala Lumpur",
];
const ORGS: &[&str] = &[
    "Acme", "Globex", "Initech", "Umbrella", "Northwind", "Contoso", "Vandelay Industries", "Stark Labs",
    "Blue Harbor", "Red Kite", "Orion Group", "Summit Bank", "Atlas Foods", "Delta Works",
];
const DATES: &[&str] = &[
    "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "March 3", "June 14", "last year", "2019", "2021",
    "October", "spring",
];
const TIMES: &[&str] = &["noon", "midnight", "dawn", "9 pm", "6 am", "the evening"];
const MONEY: &[&str] = &["$5 million", "$20", "$3.5 billion", "$800", "$12 million", "$40,000"];
const CARDINALS: &[&str] = &["12", "300", "4,000", "seven", "two", "85", "1,200", "nine"];
const QUANTITIES: &[&str] = &["3 kilograms", "10 tonnes", "5 litres", "2 miles", "40 acres"];
const NORPS: &[&str] = &["French", "Kenyan", "Brazilian", "Irish", "Korean", "Peruvian"];

const LABELS: &[&str] = &["PERSON", "GPE", "ORG", "DATE", "TIME", "MONEY", "CARDINAL", "QUANTITY", "NORP"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub max_summary_sentences: usize,
    /// Probability that a summary entity slot is filled with a hallucination.
    pub hallucination_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            min_sentences: 2,
            max_sentences: 6,
            max_summary_sentences: 2,
            hallucination_rate: 0.35,
        }
    }
}

struct Unit<'a> {
    text: &'a str,
    slot: Option<&'a str>,
    deprel: &'a str,
    head: usize,
    glued: bool,
}

fn parse_template(template: &str) -> Vec<Unit<'_>> {
    template
        .split_whitespace()
        .map(|item| {
            let mut parts = item.rsplitn(3, '|');
            let head = parts.next().and_then(|h| h.parse().ok()).expect("template head");
            let deprel = parts.next().expect("template deprel");
            let text = parts.next().expect("template text");
            let (text, glued) = match text.strip_prefix('+') {
                Some(rest) => (rest, true),
                None => (text, false),
            };
            let slot = text.strip_prefix('{').and_then(|t| t.strip_suffix('}'));
            Unit {
                text,
                slot,
                deprel,
                head,
                glued,
            }
        })
        .collect()
}

fn pool(label: &str) -> &'static [&'static str] {
    match label {
        "GPE" => GPES,
        "ORG" => ORGS,
        "DATE" => DATES,
        "TIME" => TIMES,
        "MONEY" => MONEY,
        "CARDINAL" => CARDINALS,
        "QUANTITY" => QUANTITIES,
        "NORP" => NORPS,
        other => panic!("no pool for {other}"),
    }
}

fn random_surface(rng: &mut ChaCha8Rng, label: &str) -> String {
    if label == "PERSON" {
        let last = *SURNAMES.choose(rng).expect("non-empty");
        if rng.random_bool(0.5) {
            format!("{} {last}", FIRST_NAMES.choose(rng).expect("non-empty"))
        } else {
            last.to_string()
        }
    } else {
        pool(label).choose(rng).expect("non-empty").to_string()
    }
}

/// Appends one filled template sentence to `builder`.
fn push_sentence(
    builder: DocBuilder,
    template: &str,
    mut fill: impl FnMut(&str) -> String,
) -> DocBuilder {
    let units = parse_template(template);
    let surfaces: Vec<Option<String>> = units.iter().map(|u| u.slot.map(&mut fill)).collect();
    // Token position of each unit's syntactic head (the last word of a slot).
    let mut head_token = Vec::with_capacity(units.len());
    let mut spans = Vec::with_capacity(units.len());
    let mut next = 0;
    for s in &surfaces {
        let len = s.as_ref().map_or(1, |s| s.split_whitespace().count());
        spans.push(next..next + len);
        head_token.push(next + len - 1);
        next += len;
    }
    let mut tokens: Vec<(String, String, usize, bool)> = Vec::with_capacity(next);
    for (u, unit) in units.iter().enumerate() {
        let head = head_token[unit.head];
        match &surfaces[u] {
            None => tokens.push((unit.text.to_string(), unit.deprel.to_string(), head, unit.glued)),
            Some(surface) => {
                let words: Vec<&str> = surface.split_whitespace().collect();
                let last = words.len() - 1;
                for (k, w) in words.iter().enumerate() {
                    if k == last {
                        tokens.push((w.to_string(), unit.deprel.to_string(), head, false));
                    } else {
                        tokens.push((w.to_string(), "compound".to_string(), head_token[u], false));
                    }
                }
            }
        }
    }
    let sentence = builder.sentence_count();
    let mut builder = builder.sentence_tokens(tokens.iter().map(|(t, d, h, g)| (t.as_str(), d.as_str(), *h, *g)));
    for (u, unit) in units.iter().enumerate() {
        if let Some(label) = unit.slot {
            builder = builder.entity(sentence, spans[u].start, spans[u].end, label);
        }
    }
    builder
}

/// A document of `min..=max` template sentences over a small per-document cast
/// of entities, so that surfaces recur across sentences.
pub fn synth_document(rng: &mut ChaCha8Rng, doc_id: &str, config: &SynthConfig) -> AnnotatedDocument {
    let mut cast: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for &label in LABELS {
        let size = rng.random_range(2..=4);
        let mut seen = HashSet::new();
        let mut surfaces = Vec::new();
        for _ in 0..size * 3 {
            let s = random_surface(rng, label);
            if seen.insert(normalize_surface(&s)) {
                surfaces.push(s);
            }
            if surfaces.len() == size {
                break;
            }
        }
        cast.insert(label, surfaces);
    }
    let n = rng.random_range(config.min_sentences..=config.max_sentences.max(config.min_sentences));
    let mut builder = DocBuilder::new(doc_id);
    for _ in 0..n {
        let template = *TEMPLATES.choose(rng).expect("non-empty");
        builder = push_sentence(builder, template, |label| {
            cast[label].choose(rng).expect("non-empty cast").clone()
        });
    }
    builder.build()
}

/// A document plus a summary whose entities are hallucinated with probability
/// `hallucination_rate`. Half of the hallucinated PERSON slots prefix a first
/// name onto a document surname.
pub fn synth_example(rng: &mut ChaCha8Rng, doc_id: &str, config: &SynthConfig) -> SummaryExample {
    let document = synth_document(rng, doc_id, config);
    let mut by_label: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in &document.entities {
        by_label.entry(e.label.as_str()).or_default().push(e.surface.as_str());
    }
    let known: HashSet<String> = document.entities.iter().map(|e| normalize_surface(&e.surface)).collect();
    let n = rng.random_range(1..=config.max_summary_sentences.max(1));
    let mut builder = DocBuilder::new(format!("{doc_id}#summary"));
    for _ in 0..n {
        let template = *TEMPLATES.choose(rng).expect("non-empty");
        builder = push_sentence(builder, template, |label| {
            let factual = by_label.get(label).filter(|v| !v.is_empty());
            if let Some(candidates) = factual {
                if !rng.random_bool(config.hallucination_rate) {
                    return candidates.choose(rng).expect("non-empty").to_string();
                }
                if label == "PERSON" && rng.random_bool(0.5) {
                    let single: Vec<&&str> = candidates.iter().filter(|s| !s.contains(' ')).collect();
                    if let Some(surname) = single.choose(rng) {
                        for _ in 0..8 {
                            let s = format!("{} {surname}", FIRST_NAMES.choose(rng).expect("non-empty"));
                            if !known.contains(&normalize_surface(&s)) {
                                return s;
                            }
                        }
                    }
                }
            }
            loop {
                let s = random_surface(rng, label);
                if !known.contains(&normalize_surface(&s)) {
                    return s;
                }
            }
        });
    }
    SummaryExample {
        document,
        summary: builder.build(),
    }
}

/// `n` documents with ids `doc-000000`, `doc-000001`, ...
pub fn synth_documents(n: usize, seed: u64, config: &SynthConfig) -> Vec<AnnotatedDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| synth_document(&mut rng, &format!("doc-{i:06}"), config)).collect()
}

/// `n` examples with ids `ex-000000`, `ex-000001`, ...
pub fn synth_examples(n: usize, seed: u64, config: &SynthConfig) -> Vec<SummaryExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| synth_example(&mut rng, &format!("ex-{i:06}"), config)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{validate, validate_example};

    #[test]
    fn documents_are_valid_and_reproducible() {
        let cfg = SynthConfig::default();
        let docs = synth_documents(200, 9, &cfg);
        for d in &docs {
            validate(d).unwrap_or_else(|v| panic!("{}: {v:?}", d.doc_id));
            assert!((2..=6).contains(&d.sentences.len()));
        }
        assert_eq!(docs, synth_documents(200, 9, &cfg));
        assert_ne!(docs, synth_documents(200, 10, &cfg));
    }

    #[test]
    fn examples_are_valid_and_plant_hallucinations() {
        let examples = synth_examples(300, 4, &SynthConfig::default());
        let mut hallucinated = 0;
        let mut extended = 0;
        for ex in &examples {
            validate_example(ex).unwrap_or_else(|v| panic!("{}: {v:?}", ex.document.doc_id));
            let known: HashSet<String> = ex.document.entities.iter().map(|e| normalize_surface(&e.surface)).collect();
            for m in &ex.summary.entities {
                if !known.contains(&normalize_surface(&m.surface)) {
                    hallucinated += 1;
                    let last = m.surface.rsplit(' ').next().unwrap_or_default();
                    if m.surface.contains(' ') && known.contains(&normalize_surface(last)) {
                        extended += 1;
                    }
                }
            }
        }
        assert!(hallucinated > 100, "{hallucinated}");
        assert!(extended > 10, "{extended}");
    }

    #[test]
    fn multiword_entities_hang_off_their_last_token() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = push_sentence(DocBuilder::new("t"), TEMPLATES[0], |l| match l {
            "PERSON" => "Anna Berg".into(),
            "GPE" => "Cape Town".into(),
            _ => random_surface(&mut rng, "DATE"),
        });
        let d = b.build();
        assert!(d.text.starts_with("Anna Berg visited Cape Town on "));
        assert_eq!(d.tokens[0].deprel, "compound");
        assert_eq!(d.tokens[0].head_index, 1);
        assert_eq!(d.tokens[1].head_index, 2);
        assert_eq!(d.tokens[4].head_index, 2);
        assert_eq!(d.entities[1].surface, "Cape Town");
    }
}
