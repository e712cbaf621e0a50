//! Turing machines run as autoregressive machines, with a state function
//! that compresses any update history to a canonical embedding and a PENCIL
//! driver that summarizes the history whenever it grows to twice the size
//! of that embedding.
//!
//! Symbols and states are indices into the tables of a [`TmSpec`]. An
//! [`UpdateToken`] records one step (state entered, symbol written, move),
//! and a sequence of them rebuilds a configuration from the blank tape.

use thiserror::Error;

mod am;
mod config;
mod machine;
mod pencil;
mod samples;

pub use am::{am_next, encode_input, start_config, state_fn};
pub use config::{apply_updates, embed, Configuration, Move, UpdateToken};
pub use machine::{initial_config, step, tm_run, StateId, SymbolId, TmRun, TmSpec, Verdict};
pub use pencil::{pencil_next, run_pencil_tm, run_pencil_tm_with, PencilTmRun, TokenCodec, Trigger};
pub use samples::{binary_counter, random_input, random_tm, unary_increment};

/// Errors of this crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TuringError {
    /// The machine description is inconsistent.
    #[error("invalid machine: {0}")]
    BadSpec(String),
    /// A line of a machine file could not be read. Line 0 refers to the
    /// file as a whole.
    #[error("machine file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    /// An input string holds the blank.
    #[error("input strings may not contain the blank")]
    BlankInInput,
    /// An input string or update names a symbol the machine does not have.
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    /// An update token writes the blank or refers to an unknown state.
    #[error("invalid update token: {0}")]
    BadUpdate(String),
    /// The head lies more than one cell outside the written span.
    #[error("head {head} is outside {min}-1..={max}+1")]
    HeadOutOfRange { head: i64, min: i64, max: i64 },
    /// A blank cell lies between written cells.
    #[error("blank cell at {0} inside the written span")]
    GapInTape(i64),
    /// A context token is neither an update of this machine nor a
    /// structural token the driver emits.
    #[error("token {0:?} is not an update of this machine")]
    UnknownToken(String),
    /// The context holds [SEP] or [RETURN] where the driver never puts them.
    #[error("malformed context: {0}")]
    MalformedContext(String),
    /// A step cap of zero.
    #[error("the step cap must be at least 1")]
    ZeroCap,
    /// The reduction rule rejected the context.
    #[error(transparent)]
    Reduction(#[from] pencil_core::MalformedTrace),
}
