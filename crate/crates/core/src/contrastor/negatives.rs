//! Entity-swap negatives for contrastive training.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_surface, AnnotatedDocument, EntityMention, SummaryExample};
use crate::error::NegativeError;

pub const DEFAULT_NEGATIVES: usize = 5;
/// Rejected weighted draws tolerated before falling back to an explicit
/// filtered candidate list.
const REJECTION_TRIES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityCategory {
    Number,
    Date,
    Named,
}

impl EntityCategory {
    pub fn of_label(label: &str) -> Self {
        match label {
            "MONEY" | "QUANTITY" | "CARDINAL" => EntityCategory::Number,
            "DATE" | "TIME" => EntityCategory::Date,
            _ => EntityCategory::Named,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativeMode {
    /// Replacements drawn from the source document's own entities.
    #[default]
    Intrinsic,
    /// Replacements drawn from the entity bank, excluding document entities.
    Extrinsic,
}

impl fmt::Display for NegativeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NegativeMode::Intrinsic => "intrinsic",
            NegativeMode::Extrinsic => "extrinsic",
        })
    }
}

impl FromStr for NegativeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "intrinsic" => Ok(NegativeMode::Intrinsic),
            "extrinsic" => Ok(NegativeMode::Extrinsic),
            other => Err(format!("unknown negative mode {other:?} (intrinsic|extrinsic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeSample {
    pub text: String,
    /// Byte range of the replaced entity in the source summary.
    #[serde(rename = "span")]
    pub perturbed_span: [usize; 2],
    pub original: String,
    pub replacement: String,
    #[serde(skip)]
    pub mode: NegativeMode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeSet {
    pub samples: Vec<NegativeSample>,
    pub seed: u64,
    pub requested: usize,
}

impl NegativeSet {
    pub fn is_short(&self) -> bool {
        self.samples.len() < self.requested
    }
}

#[derive(Debug)]
struct CategoryIndex {
    surfaces: Vec<String>,
    cumulative: Vec<u64>,
}

/// Per-category multisets of entity surfaces.
#[derive(Debug, Default)]
pub struct EntityBank {
    counts: BTreeMap<EntityCategory, BTreeMap<String, u64>>,
    index: OnceLock<BTreeMap<EntityCategory, CategoryIndex>>,
}

impl Clone for EntityBank {
    fn clone(&self) -> Self {
        EntityBank {
            counts: self.counts.clone(),
            index: OnceLock::new(),
        }
    }
}

impl PartialEq for EntityBank {
    fn eq(&self, other: &Self) -> bool {
        self.counts == other.counts
    }
}

impl EntityBank {
    pub fn add(&mut self, label: &str, surface: &str) {
        if surface.is_empty() {
            return;
        }
        *self
            .counts
            .entry(EntityCategory::of_label(label))
            .or_default()
            .entry(surface.to_string())
            .or_insert(0) += 1;
        self.index = OnceLock::new();
    }

    pub fn add_document(&mut self, doc: &AnnotatedDocument) {
        for e in &doc.entities {
            self.add(&e.label, &e.surface);
        }
    }

    /// Multiset union.
    pub fn merge(mut self, other: EntityBank) -> EntityBank {
        for (cat, surfaces) in other.counts {
            let dst = self.counts.entry(cat).or_default();
            for (s, c) in surfaces {
                *dst.entry(s).or_insert(0) += c;
            }
        }
        self.index = OnceLock::new();
        self
    }

    /// Total mentions (with multiplicity) in a category.
    pub fn size(&self, category: EntityCategory) -> u64 {
        self.counts.get(&category).map_or(0, |m| m.values().sum())
    }

    pub fn count(&self, category: EntityCategory, surface: &str) -> u64 {
        self.counts
            .get(&category)
            .and_then(|m| m.get(surface))
            .copied()
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.values().all(BTreeMap::is_empty)
    }

    pub fn surfaces(&self, category: EntityCategory) -> impl Iterator<Item = (&str, u64)> {
        self.counts
            .get(&category)
            .into_iter()
            .flat_map(|m| m.iter().map(|(s, c)| (s.as_str(), *c)))
    }

    fn index(&self) -> &BTreeMap<EntityCategory, CategoryIndex> {
        self.index.get_or_init(|| {
            self.counts
                .iter()
                .map(|(cat, surfaces)| {
                    let mut total = 0;
                    let mut idx = CategoryIndex {
                        surfaces: Vec::with_capacity(surfaces.len()),
                        cumulative: Vec::with_capacity(surfaces.len()),
                    };
                    for (s, c) in surfaces {
                        total += c;
                        idx.surfaces.push(s.clone());
                        idx.cumulative.push(total);
                    }
                    (*cat, idx)
                })
                .collect()
        })
    }

    /// Frequency-weighted draw of a surface in `category` accepted by `allow`.
    fn sample(&self, category: EntityCategory, rng: &mut ChaCha8Rng, allow: impl Fn(&str) -> bool) -> Option<&str> {
        let idx = self.index().get(&category)?;
        let total = *idx.cumulative.last()?;
        for _ in 0..REJECTION_TRIES {
            let r = rng.random_range(0..total);
            let pos = idx.cumulative.partition_point(|&c| c <= r);
            let s = idx.surfaces[pos].as_str();
            if allow(s) {
                return Some(s);
            }
        }
        let mut allowed: Vec<(&str, u64)> = Vec::new();
        let mut prev = 0;
        let mut sum = 0;
        for (s, &c) in idx.surfaces.iter().zip(&idx.cumulative) {
            let weight = c - prev;
            prev = c;
            if allow(s) {
                sum += weight;
                allowed.push((s, sum));
            }
        }
        if sum == 0 {
            return None;
        }
        let r = rng.random_range(0..sum);
        let pos = allowed.partition_point(|&(_, c)| c <= r);
        Some(allowed[pos].0)
    }
}

/// Builds a bank from every entity of every document.
pub fn harvest_entity_bank<'a>(docs: impl IntoIterator<Item = &'a AnnotatedDocument>) -> EntityBank {
    let mut bank = EntityBank::default();
    for doc in docs {
        bank.add_document(doc);
    }
    bank
}

/// Mixes a base seed with a document id so that every example gets its own
/// reproducible stream.
pub fn derive_seed(base: u64, doc_id: &str) -> u64 {
    // FNV-1a, then a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in doc_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = h ^ base.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Summary mentions whose surface appears among the document's entities.
pub fn factual_mentions(example: &SummaryExample) -> Vec<&EntityMention> {
    let known: HashSet<String> = example
        .document
        .entities
        .iter()
        .map(|e| normalize_surface(&e.surface))
        .collect();
    example
        .summary
        .entities
        .iter()
        .filter(|m| known.contains(&normalize_surface(&m.surface)))
        .collect()
}

struct Slot<'a> {
    mention: &'a EntityMention,
    category: EntityCategory,
    used: HashSet<String>,
    exhausted: bool,
}

/// Draws up to `k` distinct entity-swapped variants of the summary.
///
/// Each draw picks a factual summary entity uniformly at random and replaces
/// it with a same-category surface: from the document (intrinsic) or from the
/// bank minus anything the document mentions (extrinsic). A given
/// (entity, replacement) pair is never drawn twice. At most `10 * k` draws are
/// made; fewer than `k` samples are returned when candidates run out.
pub fn generate_negatives(
    example: &SummaryExample,
    mode: NegativeMode,
    k: usize,
    seed: u64,
    bank: Option<&EntityBank>,
) -> Result<NegativeSet, NegativeError> {
    let factual = factual_mentions(example);
    if factual.is_empty() {
        return Err(NegativeError::EmptyNegativeSet);
    }
    if mode == NegativeMode::Extrinsic && bank.is_none() {
        return Err(NegativeError::MissingBank);
    }
    let summary = &example.summary;
    let document = &example.document;
    let doc_surfaces: HashSet<String> = document.entities.iter().map(|e| normalize_surface(&e.surface)).collect();

    // Distinct document surfaces per category, in first-occurrence order.
    let mut intrinsic_pool: BTreeMap<EntityCategory, Vec<&str>> = BTreeMap::new();
    if mode == NegativeMode::Intrinsic {
        let mut seen = HashSet::new();
        let mut ordered: Vec<&EntityMention> = document.entities.iter().collect();
        ordered.sort_by_key(|e| e.token_start);
        for e in ordered {
            if seen.insert(e.surface.as_str()) {
                intrinsic_pool
                    .entry(EntityCategory::of_label(&e.label))
                    .or_default()
                    .push(e.surface.as_str());
            }
        }
    }

    let mut slots: Vec<Slot<'_>> = factual
        .into_iter()
        .map(|m| Slot {
            mention: m,
            category: EntityCategory::of_label(&m.label),
            used: HashSet::new(),
            exhausted: false,
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<NegativeSample> = Vec::new();
    let mut texts: HashSet<String> = HashSet::new();
    let budget = 10 * k;
    let mut draws = 0;
    while samples.len() < k && draws < budget {
        let active: Vec<usize> = (0..slots.len()).filter(|&i| !slots[i].exhausted).collect();
        if active.is_empty() {
            break;
        }
        let slot = &mut slots[active[rng.random_range(0..active.len())]];
        let original_norm = normalize_surface(&slot.mention.surface);
        let replacement: Option<String> = match mode {
            NegativeMode::Intrinsic => {
                let open: Vec<&str> = intrinsic_pool
                    .get(&slot.category)
                    .into_iter()
                    .flatten()
                    .copied()
                    .filter(|s| normalize_surface(s) != original_norm && !slot.used.contains(*s))
                    .collect();
                (!open.is_empty()).then(|| open[rng.random_range(0..open.len())].to_string())
            }
            NegativeMode::Extrinsic => bank
                .expect("checked above")
                .sample(slot.category, &mut rng, |s| {
                    !slot.used.contains(s) && !doc_surfaces.contains(&normalize_surface(s))
                })
                .map(str::to_string),
        };
        let Some(replacement) = replacement else {
            // Exhaustion is bounded by the number of slots and does not
            // consume the draw budget.
            slot.exhausted = true;
            continue;
        };
        draws += 1;
        slot.used.insert(replacement.clone());
        let range = summary.mention_range(slot.mention);
        let mut text = String::with_capacity(summary.text.len() + replacement.len());
        text.push_str(&summary.text[..range.start]);
        text.push_str(&replacement);
        text.push_str(&summary.text[range.end..]);
        if text == summary.text || !texts.insert(text.clone()) {
            continue;
        }
        samples.push(NegativeSample {
            text,
            perturbed_span: [range.start, range.end],
            original: slot.mention.surface.clone(),
            replacement,
            mode,
        });
    }
    Ok(NegativeSet {
        samples,
        seed,
        requested: k,
    })
}
