//! Reasoning tasks whose solvers emit scaffolded PENCIL traces.
//!
//! Each task pairs an instance generator, a trace emitter and an
//! exhaustive oracle. Traces are full scaffolds: the prompt, every
//! generated token including `[CALL]`, `[SEP]` and `[RETURN]`, and the
//! closing `<|endoftext|>`. The surface strings are listed in
//! `GRAMMAR.md` next to this crate's manifest.

mod emit;
pub mod puzzle;
pub mod qbf;
pub mod sat;

use pencil_core::TokenSeq;
use thiserror::Error;

pub use puzzle::{
    brute_force_puzzle, gen_puzzle, puzzle_trace, Assignment, Attr, Category, Constraint, PuzzleInstance, Relation,
};
pub use qbf::{brute_force_qbf, gen_qbf, gen_qbf_with, qbf_trace, QbfConfig, QbfFormula, Quant};
pub use sat::{brute_force_sat, dpll_trace, gen_sat, CnfFormula};

/// Errors of the generators, oracles and parsers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskError {
    /// A size parameter is below its minimum.
    #[error("{what} must be at least {min}, got {got}")]
    TooSmall { what: &'static str, min: usize, got: usize },
    /// A size parameter is above its cap.
    #[error("{what} must be at most {max}, got {got}")]
    TooLarge { what: &'static str, max: usize, got: usize },
    /// A puzzle does not have exactly one solution. The count is 0 or 2,
    /// the search stopping at the second solution.
    #[error("puzzle has {0} solutions (search stops at 2), expected exactly one")]
    NotUnique(usize),
    /// An instance text could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

/// A task trace: the prompt and the full scaffold that starts with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace<A> {
    /// The solver's answer.
    pub answer: A,
    /// The prompt tokens, a prefix of `scaffold`.
    pub prompt: TokenSeq,
    /// Prompt followed by every generated token, ending in `<|endoftext|>`.
    pub scaffold: TokenSeq,
}

impl<A> Trace<A> {
    /// Number of prompt tokens.
    pub fn prompt_len(&self) -> usize {
        self.prompt.len()
    }

    /// The generated part of the scaffold.
    pub fn response(&self) -> &[pencil_core::Token] {
        &self.scaffold[self.prompt.len()..]
    }
}

pub(crate) fn check_range(what: &'static str, got: usize, min: usize, max: usize) -> Result<(), TaskError> {
    if got < min {
        return Err(TaskError::TooSmall { what, min, got });
    }
    if got > max {
        return Err(TaskError::TooLarge { what, max, got });
    }
    Ok(())
}
