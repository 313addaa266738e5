use std::io;

use thiserror::Error;

use crate::corpus::Violation;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: malformed record at {path}: {message}")]
    Parse {
        line: usize,
        path: String,
        message: String,
    },
    #[error("line {line} (doc {doc_id}): validation failed: {}", join_violations(.violations))]
    Invalid {
        line: usize,
        doc_id: String,
        violations: Vec<Violation>,
    },
    #[error("line {line}: duplicate doc_id {doc_id:?}")]
    DuplicateId { line: usize, doc_id: String },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Failure of a factuality scorer binding.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ScorerError {
    /// Connection, timeout or other transport failure.
    #[error("scorer transport failure: {0}")]
    Transport(String),
    /// The service answered, but not according to the wire protocol.
    #[error("scorer protocol failure: {0}")]
    Protocol(String),
    #[error("invalid scorer binding: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GsgError {
    #[error("document has {sentences} sentence(s); at least 2 are required")]
    ShortDocument { sentences: usize },
    #[error("no sentence carries a factuality verdict")]
    NoScoredSentence,
    #[error("empty score list")]
    EmptyScores,
    #[error("document text already contains the mask token {0:?}")]
    MaskCollision(String),
    #[error("sentence index {index} out of range for {sentences} sentence(s)")]
    IndexOutOfRange { index: usize, sentences: usize },
    #[error("invalid selection config: {0}")]
    Config(String),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CorrectorError {
    #[error("hallucinated mentions overlap at tokens {0}..{1}")]
    OverlappingMentions(usize, usize),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NegativeError {
    #[error("summary has no factual entities to perturb")]
    EmptyNegativeSet,
    #[error("extrinsic negatives require an entity bank")]
    MissingBank,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LossError {
    #[error("cannot pool an empty state matrix")]
    EmptyStates,
    #[error("row {row} has dimension {found}, expected {expected}")]
    RaggedStates {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("zero-norm vector has no cosine similarity")]
    ZeroNorm,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("lambda must be non-negative and finite, got {0}")]
    InvalidLambda(f64),
    #[error("non-finite vector entry")]
    NonFinite,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConnectorError {
    #[error("mask position {position} out of range for {sentences} sentence(s)")]
    PositionOutOfRange { position: usize, sentences: usize },
    #[error("document already contains the mask token {0:?}")]
    MaskPresent(String),
    #[error("invalid connector config: {0}")]
    Config(String),
    #[error("every sweep position failed")]
    AllPositionsFailed,
}

/// Any per-record failure raised inside a pipeline stage.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum StageFailure {
    #[error(transparent)]
    Gsg(#[from] GsgError),
    #[error(transparent)]
    Corrector(#[from] CorrectorError),
    #[error(transparent)]
    Negative(#[from] NegativeError),
    #[error(transparent)]
    Connector(#[from] ConnectorError),
    #[error("{0}")]
    Unsupported(String),
}

impl StageFailure {
    pub fn is_remote(&self) -> bool {
        matches!(
            self,
            StageFailure::Gsg(GsgError::Scorer(
                ScorerError::Transport(_) | ScorerError::Protocol(_)
            ))
        )
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("stage {stage} failed on doc {doc_id}: {failure}")]
    Stage {
        stage: &'static str,
        doc_id: String,
        failure: StageFailure,
    },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl PipelineError {
    pub fn is_remote(&self) -> bool {
        matches!(self, PipelineError::Stage { failure, .. } if failure.is_remote())
    }
}
