//! Composable corpus-to-corpus stages with deterministic parallel execution.

mod exec;
mod stats;

pub use exec::{map_ordered, WINDOW_PER_WORKER};
pub use stats::{stats, StatsTable};

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::connector::{insert_mask, ConnectorConfig};
use crate::contrastor::{derive_seed, generate_negatives, EntityBank, NegativeMode, NegativeSample, DEFAULT_NEGATIVES};
use crate::corpus::{
    numbered_lines, parse_line, read_corpus, AnnotatedDocument, CorpusEntry, CorpusRecord, ReadOptions, SummaryExample,
};
use crate::corrector::{correct, detection_rows, CorrectionStrategy, Edit};
use crate::error::{CorpusError, GsgError, NegativeError, PipelineError, StageFailure};
use crate::gsg::{make_pseudo_example, PseudoExample, SelectionConfig};
use crate::scorer::{ConsistencyScorer, ScorerBinding, VerdictCache};

/// Output keys that earlier stages may have attached to a corpus record.
pub const CARRIED_KEYS: &[&str] = &["edits", "connected_text"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    PretrainData,
    Correct,
    Negatives,
    Connect,
    Detect,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::PretrainData,
        Stage::Correct,
        Stage::Negatives,
        Stage::Connect,
        Stage::Detect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::PretrainData => "pretrain-data",
            Stage::Correct => "correct",
            Stage::Negatives => "negatives",
            Stage::Connect => "connect",
            Stage::Detect => "detect",
        }
    }

    /// Terminal stages change the record type to something later stages cannot consume.
    pub fn is_terminal(self) -> bool {
        matches!(self, Stage::PretrainData | Stage::Negatives | Stage::Detect)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnError {
    Skip,
    #[default]
    Abort,
}

impl FromStr for OnError {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "skip" => Ok(OnError::Skip),
            "abort" => Ok(OnError::Abort),
            other => Err(format!("unknown error policy {other:?} (skip|abort)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NegativesConfig {
    pub mode: NegativeMode,
    pub k: usize,
    pub seed: Option<u64>,
    /// Corpus the extrinsic entity bank is harvested from.
    pub bank: Option<PathBuf>,
}

impl Default for NegativesConfig {
    fn default() -> Self {
        NegativesConfig {
            mode: NegativeMode::Intrinsic,
            k: DEFAULT_NEGATIVES,
            seed: None,
            bank: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub stages: Vec<Stage>,
    pub workers: usize,
    pub strict_schema: bool,
    pub on_error: OnError,
    pub selection: SelectionConfig,
    pub correction: CorrectionStrategy,
    pub negatives: NegativesConfig,
    pub connector: ConnectorConfig,
    pub scorer: ScorerBinding,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stages: Vec::new(),
            workers: 1,
            strict_schema: true,
            on_error: OnError::Abort,
            selection: SelectionConfig::default(),
            correction: CorrectionStrategy::default(),
            negatives: NegativesConfig::default(),
            connector: ConnectorConfig::default(),
            scorer: ScorerBinding::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.stages.is_empty() {
            return bad("no stages selected".into());
        }
        if self.workers == 0 {
            return bad("workers must be >= 1".into());
        }
        let mut seen = HashSet::new();
        for (i, stage) in self.stages.iter().enumerate() {
            if !seen.insert(*stage) {
                return bad(format!("stage {stage} listed twice"));
            }
            if stage.is_terminal() && i + 1 != self.stages.len() {
                return bad(format!("stage {stage} must be the last stage"));
            }
        }
        self.selection.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.connector.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.selection.mask_token != self.connector.mask_token {
            return bad(format!(
                "selection mask_token {:?} differs from connector mask_token {:?}",
                self.selection.mask_token, self.connector.mask_token
            ));
        }
        if self.has(Stage::Negatives) {
            if self.negatives.seed.is_none() {
                return bad("negatives stage requires a seed".into());
            }
            if self.negatives.k == 0 {
                return bad("negatives.k must be >= 1".into());
            }
        }
        self.scorer.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn has(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    pub fn needs_bank(&self) -> bool {
        self.has(Stage::Negatives) && self.negatives.mode == NegativeMode::Extrinsic
    }

    pub fn read_options(&self) -> ReadOptions {
        ReadOptions {
            lenient: !self.strict_schema,
            carry: CARRIED_KEYS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativesRecord {
    pub doc_id: String,
    pub mode: NegativeMode,
    pub seed: u64,
    pub negatives: Vec<NegativeSample>,
}

/// A record travelling between stages.
#[derive(Debug, Clone, PartialEq)]
pub enum PipelineRecord {
    Document {
        doc: AnnotatedDocument,
        connected_text: Option<String>,
    },
    Example {
        example: SummaryExample,
        edits: Option<Vec<Edit>>,
        connected_text: Option<String>,
    },
    Pseudo(PseudoExample),
    Negatives(NegativesRecord),
    Detection {
        doc_id: String,
        rows: Vec<String>,
    },
}

#[derive(Serialize)]
struct DocumentOut<'a> {
    #[serde(flatten)]
    doc: &'a AnnotatedDocument,
    #[serde(skip_serializing_if = "Option::is_none")]
    connected_text: Option<&'a str>,
}

#[derive(Serialize)]
struct ExampleOut<'a> {
    document: &'a AnnotatedDocument,
    summary: &'a AnnotatedDocument,
    #[serde(skip_serializing_if = "Option::is_none")]
    edits: Option<&'a [Edit]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    connected_text: Option<&'a str>,
}

impl PipelineRecord {
    pub fn doc_id(&self) -> &str {
        match self {
            PipelineRecord::Document { doc, .. } => &doc.doc_id,
            PipelineRecord::Example { example, .. } => &example.document.doc_id,
            PipelineRecord::Pseudo(p) => &p.doc_id,
            PipelineRecord::Negatives(n) => &n.doc_id,
            PipelineRecord::Detection { doc_id, .. } => doc_id,
        }
    }

    pub fn from_entry(entry: CorpusEntry) -> Result<Self, CorpusError> {
        let CorpusEntry { line, record, extras } = entry;
        let connected_text = match extras.get("connected_text") {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                return Err(CorpusError::Parse {
                    line,
                    path: "connected_text".into(),
                    message: "expected a string".into(),
                })
            }
        };
        match record {
            CorpusRecord::Document(doc) => {
                if extras.contains_key("edits") {
                    return Err(CorpusError::Parse {
                        line,
                        path: "edits".into(),
                        message: "edits are only valid on summary examples".into(),
                    });
                }
                Ok(PipelineRecord::Document { doc, connected_text })
            }
            CorpusRecord::Example(example) => {
                let edits = extras
                    .get("edits")
                    .map(|v| serde_json::from_value::<Vec<Edit>>(v.clone()))
                    .transpose()
                    .map_err(|e| CorpusError::Parse {
                        line,
                        path: "edits".into(),
                        message: e.to_string(),
                    })?;
                Ok(PipelineRecord::Example {
                    example,
                    edits,
                    connected_text,
                })
            }
        }
    }

    /// Appends the record's serialized output line(s) to `out`.
    pub fn render(&self, out: &mut Vec<u8>) -> serde_json::Result<()> {
        match self {
            PipelineRecord::Document { doc, connected_text } => serde_json::to_writer(
                &mut *out,
                &DocumentOut {
                    doc,
                    connected_text: connected_text.as_deref(),
                },
            )?,
            PipelineRecord::Example {
                example,
                edits,
                connected_text,
            } => serde_json::to_writer(
                &mut *out,
                &ExampleOut {
                    document: &example.document,
                    summary: &example.summary,
                    edits: edits.as_deref(),
                    connected_text: connected_text.as_deref(),
                },
            )?,
            PipelineRecord::Pseudo(p) => serde_json::to_writer(&mut *out, p)?,
            PipelineRecord::Negatives(n) => serde_json::to_writer(&mut *out, n)?,
            PipelineRecord::Detection { rows, .. } => {
                for row in rows {
                    out.extend_from_slice(row.as_bytes());
                    out.push(b'\n');
                }
                return Ok(());
            }
        }
        out.push(b'\n');
        Ok(())
    }
}

impl From<CorpusRecord> for PipelineRecord {
    fn from(record: CorpusRecord) -> Self {
        match record {
            CorpusRecord::Document(doc) => PipelineRecord::Document {
                doc,
                connected_text: None,
            },
            CorpusRecord::Example(example) => PipelineRecord::Example {
                example,
                edits: None,
                connected_text: None,
            },
        }
    }
}

/// Counters for one stage. `input == output + skipped` always holds, where
/// `skipped` covers short documents, examples without perturbable entities and
/// records dropped under the skip error policy.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub input: u64,
    pub output: u64,
    pub skipped: u64,
    pub skipped_short: u64,
    pub skipped_no_entities: u64,
    pub errors: u64,
    pub hallucinated: u64,
    pub replaced: u64,
    pub removed: u64,
    pub changed: u64,
    pub short_negative_sets: u64,
    pub cache_hits: u64,
    pub busy_ms: f64,
}

impl StageReport {
    fn new(stage: Stage) -> Self {
        StageReport {
            stage: stage.name().to_string(),
            ..StageReport::default()
        }
    }

    fn absorb(&mut self, d: &StageReport) {
        self.input += d.input;
        self.output += d.output;
        self.skipped += d.skipped;
        self.skipped_short += d.skipped_short;
        self.skipped_no_entities += d.skipped_no_entities;
        self.errors += d.errors;
        self.hallucinated += d.hallucinated;
        self.replaced += d.replaced;
        self.removed += d.removed;
        self.changed += d.changed;
        self.short_negative_sets += d.short_negative_sets;
        self.busy_ms += d.busy_ms;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub workers: usize,
    pub records_in: u64,
    pub records_out: u64,
    pub stages: Vec<StageReport>,
    pub wall_ms: f64,
}

impl RunReport {
    pub fn stage(&self, stage: Stage) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == stage.name())
    }
}

/// A validated configuration bound to its scorer, verdict cache and bank.
pub struct Pipeline<'b> {
    config: PipelineConfig,
    scorer: Arc<dyn ConsistencyScorer>,
    cache: VerdictCache,
    bank: Option<&'b EntityBank>,
}

enum Flow {
    Next(PipelineRecord),
    Dropped,
}

impl<'b> Pipeline<'b> {
    pub fn new(config: PipelineConfig, bank: Option<&'b EntityBank>) -> Result<Self, PipelineError> {
        config.validate()?;
        if config.needs_bank() && bank.is_none() {
            return Err(PipelineError::Config("extrinsic negatives need an entity bank".into()));
        }
        let needs_scorer = config.has(Stage::PretrainData);
        let scorer = if needs_scorer {
            config.scorer.build()
        } else {
            ScorerBinding::HeuristicEntityContainment.build()
        }
        .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(Pipeline {
            config,
            scorer,
            cache: VerdictCache::default(),
            bank,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Runs every stage on one record. Returns the surviving record (if any)
    /// and per-stage counter deltas. Failures allowed by the error policy are
    /// counted and drop the record; all others are returned.
    pub fn process(&self, record: PipelineRecord) -> Result<(Option<PipelineRecord>, Vec<StageReport>), PipelineError> {
        let mut deltas = Vec::with_capacity(self.config.stages.len());
        let mut current = record;
        for &stage in &self.config.stages {
            let mut delta = StageReport::new(stage);
            delta.input = 1;
            let started = Instant::now();
            let doc_id = current.doc_id().to_string();
            let result = self.apply(stage, current, &mut delta);
            delta.busy_ms = started.elapsed().as_secs_f64() * 1e3;
            let flow = match result {
                Ok(flow) => flow,
                Err(failure) => {
                    if failure.is_remote() || self.config.on_error == OnError::Abort {
                        return Err(PipelineError::Stage {
                            stage: stage.name(),
                            doc_id,
                            failure,
                        });
                    }
                    delta.errors = 1;
                    Flow::Dropped
                }
            };
            match flow {
                Flow::Next(next) => {
                    delta.output = 1;
                    deltas.push(delta);
                    current = next;
                }
                Flow::Dropped => {
                    delta.skipped = 1;
                    deltas.push(delta);
                    return Ok((None, deltas));
                }
            }
        }
        Ok((Some(current), deltas))
    }

    fn apply(&self, stage: Stage, record: PipelineRecord, delta: &mut StageReport) -> Result<Flow, StageFailure> {
        let unsupported = |what: &str| StageFailure::Unsupported(format!("stage {stage} cannot consume {what} records"));
        match (stage, record) {
            (Stage::PretrainData, PipelineRecord::Document { doc, .. }) => {
                match make_pseudo_example(&doc, &self.config.selection, self.scorer.as_ref(), Some(&self.cache)) {
                    Ok(p) => Ok(Flow::Next(PipelineRecord::Pseudo(p))),
                    Err(GsgError::ShortDocument { .. }) if self.config.selection.skip_short_docs => {
                        delta.skipped_short = 1;
                        Ok(Flow::Dropped)
                    }
                    Err(e) => Err(e.into()),
                }
            }
            (Stage::Correct, PipelineRecord::Example { example, connected_text, .. }) => {
                let corrected = correct(&example, self.config.correction)?;
                delta.hallucinated = corrected.hallucinated as u64;
                delta.replaced = corrected.replaced as u64;
                delta.removed = corrected.removed as u64;
                delta.changed = u64::from(corrected.changed());
                Ok(Flow::Next(PipelineRecord::Example {
                    example: SummaryExample {
                        document: example.document,
                        summary: corrected.summary,
                    },
                    edits: Some(corrected.edits),
                    connected_text,
                }))
            }
            (Stage::Negatives, PipelineRecord::Example { example, .. }) => {
                let base = self.config.negatives.seed.expect("validated");
                let seed = derive_seed(base, &example.document.doc_id);
                match generate_negatives(&example, self.config.negatives.mode, self.config.negatives.k, seed, self.bank) {
                    Ok(set) => {
                        delta.short_negative_sets = u64::from(set.is_short());
                        Ok(Flow::Next(PipelineRecord::Negatives(NegativesRecord {
                            doc_id: example.document.doc_id.clone(),
                            mode: self.config.negatives.mode,
                            seed,
                            negatives: set.samples,
                        })))
                    }
                    Err(NegativeError::EmptyNegativeSet) => {
                        delta.skipped_no_entities = 1;
                        Ok(Flow::Dropped)
                    }
                    Err(e) => Err(e.into()),
                }
            }
            (Stage::Connect, PipelineRecord::Document { doc, .. }) => {
                let text = insert_mask(&doc, &self.config.connector)?;
                Ok(Flow::Next(PipelineRecord::Document {
                    doc,
                    connected_text: Some(text),
                }))
            }
            (Stage::Connect, PipelineRecord::Example { example, edits, .. }) => {
                let text = insert_mask(&example.document, &self.config.connector)?;
                Ok(Flow::Next(PipelineRecord::Example {
                    example,
                    edits,
                    connected_text: Some(text),
                }))
            }
            (Stage::Detect, PipelineRecord::Example { example, .. }) => {
                let rows = detection_rows(&example);
                delta.hallucinated = rows.iter().filter(|r| r.contains("\thallucinated\t")).count() as u64;
                Ok(Flow::Next(PipelineRecord::Detection {
                    doc_id: example.document.doc_id.clone(),
                    rows,
                }))
            }
            (_, PipelineRecord::Document { .. }) => Err(unsupported("document")),
            (_, PipelineRecord::Example { .. }) => Err(unsupported("summary-example")),
            (_, other) => Err(unsupported(match other {
                PipelineRecord::Pseudo(_) => "pseudo-summary",
                PipelineRecord::Negatives(_) => "negatives",
                _ => "detection",
            })),
        }
    }

    /// Streams `input` through every stage, writing results to `output` in
    /// input order. Byte output is independent of the worker count.
    pub fn run<R, W>(&self, input: R, mut output: W) -> Result<RunReport, PipelineError>
    where
        R: BufRead + Send,
        W: Write,
    {
        let started = Instant::now();
        let mut report = RunReport {
            workers: self.config.workers,
            stages: self.config.stages.iter().map(|&s| StageReport::new(s)).collect(),
            ..RunReport::default()
        };
        let opts = self.config.read_options();
        // Decoding happens on the workers; duplicate ids are checked in order by the sink.
        let work = |line: std::io::Result<(usize, String)>| -> (Option<(usize, String)>, Result<Rendered, PipelineError>) {
            let entry = match line.map_err(CorpusError::Io).and_then(|(n, l)| parse_line(&l, n, opts)) {
                Ok(entry) => entry,
                Err(e) => return (None, Err(e.into())),
            };
            let key = Some((entry.line, entry.record.doc_id().to_string()));
            let result = PipelineRecord::from_entry(entry).map_err(PipelineError::from).and_then(|record| {
                let (out, deltas) = self.process(record)?;
                let mut bytes = Vec::new();
                if let Some(out) = out {
                    out.render(&mut bytes).map_err(|e| PipelineError::Io(e.into()))?;
                }
                Ok((bytes, deltas))
            });
            (key, result)
        };
        let mut seen: HashSet<String> = HashSet::new();
        map_ordered(numbered_lines(input), self.config.workers, work, |(key, result)| {
            if let Some((line, doc_id)) = key {
                if !seen.insert(doc_id.clone()) {
                    return Err(CorpusError::DuplicateId { line, doc_id }.into());
                }
            }
            let (bytes, deltas) = result?;
            report.records_in += 1;
            if deltas.len() == report.stages.len() && deltas.last().is_some_and(|d| d.output == 1) {
                report.records_out += 1;
            }
            for (total, d) in report.stages.iter_mut().zip(&deltas) {
                total.absorb(d);
            }
            output.write_all(&bytes).map_err(PipelineError::Io)
        })?;
        output.flush()?;
        if let Some(s) = report.stages.iter_mut().find(|s| s.stage == Stage::PretrainData.name()) {
            s.cache_hits = self.cache.hits();
        }
        report.wall_ms = started.elapsed().as_secs_f64() * 1e3;
        Ok(report)
    }
}

type Rendered = (Vec<u8>, Vec<StageReport>);

/// Convenience wrapper: validate, bind and run.
pub fn run<R, W>(config: &PipelineConfig, input: R, output: W, bank: Option<&EntityBank>) -> Result<RunReport, PipelineError>
where
    R: BufRead + Send,
    W: Write,
{
    Pipeline::new(config.clone(), bank)?.run(input, output)
}

/// Harvests an entity bank from every document and summary in a corpus.
pub fn harvest_bank<R: BufRead>(input: R, opts: ReadOptions) -> Result<EntityBank, CorpusError> {
    let mut bank = EntityBank::default();
    for record in read_corpus(input, opts) {
        for doc in record?.documents() {
            bank.add_document(doc);
        }
    }
    Ok(bank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{write_record, DocBuilder};

    fn config(stages: &[Stage]) -> PipelineConfig {
        PipelineConfig {
            stages: stages.to_vec(),
            negatives: NegativesConfig {
                seed: Some(7),
                ..NegativesConfig::default()
            },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(config(&[Stage::Correct, Stage::Connect]).validate().is_ok());
        assert!(config(&[]).validate().is_err());
        assert!(config(&[Stage::Negatives, Stage::Connect]).validate().is_err());
        assert!(config(&[Stage::Connect, Stage::Connect]).validate().is_err());
        let mut c = config(&[Stage::Negatives]);
        c.negatives.seed = None;
        assert!(c.validate().is_err());
        let mut c = config(&[Stage::Connect]);
        c.connector.mask_token = "[MASK]".into();
        assert!(c.validate().is_err());
        c.selection.mask_token = "[MASK]".into();
        assert!(c.validate().is_ok());
        c.workers = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_from_json() {
        let c = PipelineConfig::from_json(
            r#"{"stages":["correct","negatives"],"workers":3,"correction":"remove",
                "negatives":{"mode":"extrinsic","k":4,"seed":1},"scorer":{"kind":"heuristic"}}"#,
        )
        .unwrap();
        assert_eq!(c.stages, vec![Stage::Correct, Stage::Negatives]);
        assert_eq!(c.correction, CorrectionStrategy::Remove);
        assert!(c.needs_bank());
        assert!(PipelineConfig::from_json(r#"{"stagez":[]}"#).is_err());
        assert!(matches!(Pipeline::new(c, None), Err(PipelineError::Config(_))));
    }

    fn example(id: &str, hallucinate: bool) -> SummaryExample {
        let document = DocBuilder::new(id)
            .sentence("Arteta|nsubj|1 joined|ROOT|1 Arsenal|dobj|1 +.|punct|1")
            .entity(0, 0, 1, "PERSON")
            .entity(0, 2, 3, "ORG")
            .sentence("He|nsubj|1 left|ROOT|1 in|prep|1 2019|pobj|2 +.|punct|1")
            .entity(1, 3, 4, "DATE")
            .build();
        let place = if hallucinate { "Madrid" } else { "Arsenal" };
        let label = if hallucinate { "GPE" } else { "ORG" };
        let summary = DocBuilder::new(format!("{id}-s"))
            .sentence(&format!("Arteta|nsubj|1 played|ROOT|1 in|prep|1 {place}|pobj|2 +.|punct|1"))
            .entity(0, 0, 1, "PERSON")
            .entity(0, 3, 4, label)
            .build();
        SummaryExample { document, summary }
    }

    fn corpus(records: &[CorpusRecord]) -> Vec<u8> {
        let mut buf = Vec::new();
        for r in records {
            write_record(&mut buf, r).unwrap();
        }
        buf
    }

    #[test]
    fn counts_changed_examples() {
        let records: Vec<CorpusRecord> = (0..5)
            .map(|i| CorpusRecord::Example(example(&format!("e{i}"), i == 1 || i == 3)))
            .collect();
        let mut out = Vec::new();
        let report = run(&config(&[Stage::Correct]), corpus(&records).as_slice(), &mut out, None).unwrap();
        let s = report.stage(Stage::Correct).unwrap();
        assert_eq!((s.input, s.output, s.changed, s.hallucinated, s.removed), (5, 5, 2, 2, 2));
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().nth(1).unwrap().contains("\"edits\":[{\"kind\":\"remove\""));
        assert!(text.contains("Arteta played."));
    }

    #[test]
    fn empty_input() {
        let mut out = Vec::new();
        let report = run(&config(&[Stage::Correct, Stage::Connect]), &b""[..], &mut out, None).unwrap();
        assert!(out.is_empty());
        assert_eq!(report.records_in, 0);
        assert!(report.stages.iter().all(|s| s.input == 0 && s.output == 0));
    }

    #[test]
    fn short_documents_are_skipped() {
        let records = vec![
            CorpusRecord::Document(DocBuilder::new("one").sentence("Hi|ROOT|0").build()),
            CorpusRecord::Document(example("two", false).document),
        ];
        let mut out = Vec::new();
        let report = run(&config(&[Stage::PretrainData]), corpus(&records).as_slice(), &mut out, None).unwrap();
        let s = report.stage(Stage::PretrainData).unwrap();
        assert_eq!((s.input, s.output, s.skipped, s.skipped_short), (2, 1, 1, 1));
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
    }

    #[test]
    fn error_policy() {
        let records = vec![
            CorpusRecord::Document(example("d", false).document),
            CorpusRecord::Example(example("e", false)),
        ];
        let input = corpus(&records);
        let mut c = config(&[Stage::Correct]);
        let err = run(&c, input.as_slice(), Vec::new(), None).unwrap_err();
        match err {
            PipelineError::Stage { stage, doc_id, .. } => assert_eq!((stage, doc_id.as_str()), ("correct", "d")),
            other => panic!("{other}"),
        }
        c.on_error = OnError::Skip;
        let report = run(&c, input.as_slice(), Vec::new(), None).unwrap();
        let s = report.stage(Stage::Correct).unwrap();
        assert_eq!((s.input, s.output, s.skipped, s.errors), (2, 1, 1, 1));
    }

    #[test]
    fn composition_through_files_matches_fused_run() {
        let records: Vec<CorpusRecord> = (0..6)
            .map(|i| CorpusRecord::Example(example(&format!("e{i}"), i % 2 == 0)))
            .collect();
        let input = corpus(&records);
        let mut fused = Vec::new();
        run(&config(&[Stage::Correct, Stage::Connect]), input.as_slice(), &mut fused, None).unwrap();
        let mut mid = Vec::new();
        run(&config(&[Stage::Correct]), input.as_slice(), &mut mid, None).unwrap();
        let mut staged = Vec::new();
        run(&config(&[Stage::Connect]), mid.as_slice(), &mut staged, None).unwrap();
        assert_eq!(fused, staged);
    }

    #[test]
    fn worker_count_does_not_change_bytes() {
        let records: Vec<CorpusRecord> = (0..40)
            .map(|i| CorpusRecord::Example(example(&format!("e{i:02}"), i % 3 == 0)))
            .collect();
        let input = corpus(&records);
        let mut outputs = Vec::new();
        for workers in [1, 4] {
            let mut c = config(&[Stage::Correct, Stage::Negatives]);
            c.workers = workers;
            let mut out = Vec::new();
            run(&c, input.as_slice(), &mut out, None).unwrap();
            outputs.push(out);
        }
        assert_eq!(outputs[0], outputs[1]);
        assert!(!outputs[0].is_empty());
    }

    #[test]
    fn corpus_errors_abort() {
        let mut c = config(&[Stage::Connect]);
        c.on_error = OnError::Skip;
        let err = run(&c, &b"{\"doc_id\":1}\n"[..], Vec::new(), None).unwrap_err();
        assert!(matches!(err, PipelineError::Corpus(CorpusError::Parse { line: 1, .. })));
    }

    #[test]
    fn duplicate_ids_abort_at_the_second_occurrence() {
        let records: Vec<CorpusRecord> = ["a", "b", "c", "b"]
            .iter()
            .map(|id| CorpusRecord::Example(example(id, false)))
            .collect();
        let mut input = corpus(&records);
        input.splice(0..0, b"\n".iter().copied());
        for workers in [1, 4] {
            let mut c = config(&[Stage::Correct]);
            c.workers = workers;
            let err = run(&c, input.as_slice(), Vec::new(), None).unwrap_err();
            assert!(
                matches!(&err, PipelineError::Corpus(CorpusError::DuplicateId { line: 5, doc_id }) if doc_id == "b"),
                "{err}"
            );
        }
    }

    #[test]
    fn bank_harvest() {
        let records = vec![CorpusRecord::Example(example("e", true))];
        let bank = harvest_bank(corpus(&records).as_slice(), ReadOptions::default()).unwrap();
        assert_eq!(bank.count(crate::contrastor::EntityCategory::Named, "Madrid"), 1);
        assert_eq!(bank.count(crate::contrastor::EntityCategory::Named, "Arteta"), 2);
    }
}
