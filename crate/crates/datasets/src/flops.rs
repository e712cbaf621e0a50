//! Attention cost of PENCIL and chain-of-thought generation.
//!
//! Costs are in attention units. Producing a token at context length `L`
//! (the token included) attends over `L` positions, and recomputing the
//! cached keys and values of a token at position `L` after a reduction costs
//! the same. The closed forms below count every such unit twice, so each
//! term is exactly twice the per-token sum.

use pencil_core::PencilRun;
use serde::Serialize;

/// Attention cost of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FlopsReport {
    /// Cost of generating tokens with a key-value cache.
    pub generation_term: u64,
    /// Cost of recomputing the cache for answers moved by reductions.
    pub reduction_term: u64,
    /// Sum of both terms.
    pub total: u64,
}

impl FlopsReport {
    fn new(generation_term: u64, reduction_term: u64) -> Self {
        FlopsReport { generation_term, reduction_term, total: generation_term + reduction_term }
    }
}

/// Cost of growing a context from `from` to `to` tokens.
fn grow(from: usize, to: usize) -> u64 {
    (from + to + 1) as u64 * (to - from) as u64
}

/// Cost of `run`.
///
/// Iteration `i` grows the context from its start length to its length
/// before reduction. A reduction keeps the cache of the kept prefix `C` and
/// recomputes the answer `A` placed after it, growing `|C|` to `|C| + |A|`.
pub fn flops(run: &PencilRun) -> FlopsReport {
    let mut generation = 0;
    let mut reduction = 0;
    for (i, it) in run.iterations.iter().enumerate() {
        generation += grow(run.start_len(i), it.context_len);
        if let Some(step) = &it.reduction {
            reduction += grow(step.spans.kept, step.spans.kept + step.spans.answer);
        }
    }
    FlopsReport::new(generation, reduction)
}

/// Cost of generating a chain-of-thought scaffold of `scaffold_len` tokens
/// after a prompt of `prompt_len` tokens.
pub fn cot_flops(prompt_len: usize, scaffold_len: usize) -> FlopsReport {
    FlopsReport::new(grow(prompt_len, scaffold_len), 0)
}
