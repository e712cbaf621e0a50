//! Training corpora, corpus statistics and attention cost accounting for
//! PENCIL runs.
//!
//! A scaffolded trace is cut into one training sequence per iteration: the
//! context the iteration starts from followed by the tokens it generates,
//! with the loss restricted to the generated part. The chain-of-thought
//! baseline trains on the whole scaffold instead. Corpora are generated
//! from seeds, optionally balanced over answer labels, and exported as
//! JSONL with a vocabulary file and a per-instance statistics CSV.

pub mod corpus;
pub mod export;
pub mod flops;
pub mod split;
pub mod stats;

use std::path::PathBuf;

use pencil_core::{PencilError, VocabError};
use pencil_tasks::TaskError;
use thiserror::Error;

pub use corpus::{candidate_seeds, generate_corpus, CorpusConfig, Instance, TaskSpec};
pub use export::{
    corpus_vocab, from_jsonl_str, read_jsonl, read_vocab, stats_csv_string, to_jsonl_string, training_examples,
    write_jsonl, write_stats_csv, write_vocab, Format, STATS_HEADER,
};
pub use flops::{cot_flops, flops, FlopsReport};
pub use split::{export_cot, split_scaffolded, Example, TrainingExample};
pub use stats::{corpus_stats, CorpusStats};

/// Errors of corpus generation and file export.
#[derive(Debug, Error)]
pub enum DatasetError {
    /// A file could not be read or written.
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    /// A JSONL line is not a valid example.
    #[error("{}:{line}: {reason}", path.display())]
    Json { path: PathBuf, line: usize, reason: String },
    /// A vocabulary could not be built, loaded or applied.
    #[error(transparent)]
    Vocab(#[from] VocabError),
    /// The generator rejected its parameters.
    #[error("instance seed {seed}: {source}")]
    Task { seed: u64, source: TaskError },
    /// A generated scaffold did not replay under the reduction rule.
    #[error("instance seed {seed}: {source}")]
    Replay { seed: u64, source: PencilError },
    /// Rejection sampling ran out of candidates before filling a label.
    #[error("could not balance labels: {label:?} has {found} of {wanted} after {tried} candidates")]
    Unbalanced { label: String, found: usize, wanted: usize, tried: usize },
}
