//! Core runtime for PENCIL: chain-of-thought generation interleaved with a
//! reduction rule that erases finished sub-computations from the context.
//!
//! * [`token`]: the extended alphabet and whitespace-level text handling.
//! * [`vocab`]: id assignment and the vocabulary file format.
//! * [`reduction`]: the rewrite rules, the generate-reduce loop, scaffolded
//!   traces and the replaying oracle predictor.

pub mod reduction;
pub mod token;
pub mod vocab;

pub use reduction::{
    apply, make_oracle_predictor, match_rule, reduce, reduce_simplified, replay, run_pencil, run_pencil_until,
    scaffold, Iteration, LimitKind, Limits, MalformedTrace, OraclePredictor, PencilError, PencilRun, PredictError,
    Predictor, ReductionStep, Rule, RuleMatch, Spans,
};
pub use token::{normalize_whitespace, render, tokenize, Token, TokenError, TokenSeq, SPECIALS};
pub use vocab::{build_vocab, Vocab, VocabError};
