//! An exact interpreter for full-access sequence processing programs.
//!
//! A program is a list of named seq-to-embedding definitions built from
//! five primitives: token embeddings, the sequence-length feature,
//! concatenation, average-hard attention, linear maps and coordinate-wise
//! activations. The next token is the unique largest coordinate of the
//! result. All arithmetic is on exact rationals, and an overflow is an error.
//!
//! [`build_tm_program`] compiles a Turing machine into a program that
//! reproduces the PENCIL simulation of `pencil-turing` token for token.

use pencil_turing::TuringError;
use thiserror::Error;

mod eval;
mod expr;
mod ops;
mod tm;

pub use eval::{decode, eval, hardmax, next_token, Session};
pub use expr::{rat, Activation, Expr, Node, Op, Program, Rational, Ty};
pub use tm::{build_tm_program, check_against_reference, CheckedRun, TmProgram};

/// Errors of this crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FaspError {
    /// Operand dimensions do not fit the operator.
    #[error("{op}: expected dimension {expected}, got {got}")]
    Dim { op: &'static str, expected: usize, got: usize },
    /// An activation received the wrong number of inputs.
    #[error("{op}: expected {expected} inputs, got {got}")]
    Arity { op: &'static str, expected: usize, got: usize },
    /// An expression handle from another program.
    #[error("node {0} does not belong to this program")]
    ForeignExpr(usize),
    /// A definition name is already taken.
    #[error("{0} is already defined")]
    DuplicateName(String),
    /// The vocabulary is empty or repeats a token.
    #[error("bad vocabulary: {0}")]
    BadVocabulary(String),
    /// Programs read non-empty sequences only.
    #[error("programs are evaluated on non-empty sequences")]
    EmptySequence,
    /// A token outside the program's vocabulary.
    #[error("token {0:?} is not in the vocabulary")]
    UnknownToken(String),
    /// No result has been designated.
    #[error("the program has no result")]
    NoResult,
    /// Several coordinates share the largest value.
    #[error("ambiguous decode between {0:?}")]
    AmbiguousDecode(Vec<String>),
    /// A node left its declared domain.
    #[error("node {node} left its declared domain at prefix length {position}")]
    TypeViolation { node: usize, position: usize },
    /// An intermediate value left the range of the exact scalar type.
    #[error("arithmetic overflow")]
    Overflow,
    /// The program disagreed with the reference driver.
    #[error("step {step} (context length {context_len}): expected {expected}, got {got}")]
    Mismatch { step: usize, context_len: usize, expected: String, got: String },
    /// An error of the machine layer.
    #[error(transparent)]
    Turing(#[from] TuringError),
}
