//! Corpus transformations for factuality-aware summarization pre-training and
//! fine-tuning: gap-sentence selection with a consistency scorer, hallucinated
//! entity correction, entity-swap negatives with an NT-Xent loss kernel, and
//! mask-token connectors, all over an annotated line-delimited JSON corpus.

pub mod connector;
pub mod contrastor;
pub mod corpus;
pub mod corrector;
pub mod error;
pub mod gsg;
pub mod pipeline;
pub mod rouge;
pub mod scorer;
pub mod synth;

pub use connector::{insert_mask, sweep_positions, ConnectorConfig};
pub use contrastor::{generate_negatives, nt_xent, EntityBank, EntityCategory, NegativeMode, NegativeSet};
pub use corpus::{
    read_corpus, validate, validate_example, write_record, AnnotatedDocument, CorpusRecord, EntityMention,
    ReadOptions, SentenceSpan, SummaryExample, Token,
};
pub use corrector::{apply_edits, correct, CorrectedSummary, CorrectionStrategy, Edit};
pub use error::{
    ConnectorError, CorpusError, CorrectorError, GsgError, LossError, NegativeError, PipelineError, ScorerError,
    StageFailure,
};
pub use gsg::{make_pseudo_example, PseudoExample, SelectionConfig};
pub use pipeline::{Pipeline, PipelineConfig, RunReport, Stage};
pub use rouge::{rouge_l, rouge_n, RougeScore, RougeVariant};
pub use scorer::{ConsistencyScorer, ConsistencyVerdict, ScorerBinding};
