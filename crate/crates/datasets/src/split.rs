//! Training examples cut from a PENCIL run.

use pencil_core::{PencilRun, Token, TokenSeq, Vocab, VocabError};
use serde::{Deserialize, Serialize};

/// One training sequence in token form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    /// The context an iteration starts from, then the tokens it generates.
    pub tokens: TokenSeq,
    /// Index of the first generated token. The loss covers
    /// `tokens[loss_start..]`.
    pub loss_start: usize,
    /// Zero-based iteration of the run.
    pub iteration: usize,
}

impl Example {
    /// The generated part, on which the loss is computed.
    pub fn target(&self) -> &[Token] {
        &self.tokens[self.loss_start..]
    }

    /// Maps tokens to ids.
    pub fn encode(&self, vocab: &Vocab, instance_id: u64) -> Result<TrainingExample, VocabError> {
        Ok(TrainingExample {
            tokens: vocab.ids(&self.tokens)?,
            loss_start: self.loss_start,
            instance_id,
            iteration: self.iteration,
        })
    }
}

/// One line of an exported dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainingExample {
    /// Token ids.
    pub tokens: Vec<u32>,
    /// Index of the first id that carries loss.
    pub loss_start: usize,
    /// Index of the instance within its corpus.
    pub instance_id: u64,
    /// Zero-based iteration within the instance's run.
    pub iteration: usize,
}

impl TrainingExample {
    /// Maps ids back to tokens.
    pub fn decode(&self, vocab: &Vocab) -> Result<Example, VocabError> {
        Ok(Example { tokens: vocab.tokens(&self.tokens)?, loss_start: self.loss_start, iteration: self.iteration })
    }
}

/// One example per iteration of `run`, whose prompt is `prompt`.
///
/// Every example but the last ends in `[RETURN]`, and the last ends in the
/// stop token. Concatenating `prompt` with the targets of all examples in
/// order gives back the scaffold.
pub fn split_scaffolded(run: &PencilRun, prompt: &[Token]) -> Vec<Example> {
    debug_assert_eq!(run.prompt_len, prompt.len(), "prompt does not belong to the run");
    let mut start: TokenSeq = prompt.to_vec();
    let mut out = Vec::with_capacity(run.iterations.len());
    for (i, it) in run.iterations.iter().enumerate() {
        let loss_start = start.len();
        let mut tokens = std::mem::take(&mut start);
        tokens.extend_from_slice(&it.generated);
        if let Some(step) = &it.reduction {
            start = step.context.clone();
        }
        out.push(Example { tokens, loss_start, iteration: i });
    }
    out
}

/// The chain-of-thought example: the whole scaffold with the loss on
/// everything after the prompt. An end-of-text token is appended when the
/// scaffold lacks one.
///
/// # Panics
///
/// When `scaffold` does not start with `prompt`.
pub fn export_cot(scaffold: &[Token], prompt: &[Token]) -> Example {
    assert!(scaffold.starts_with(prompt), "scaffold does not start with the prompt");
    let mut tokens = scaffold.to_vec();
    if tokens.last() != Some(&Token::EndOfText) {
        tokens.push(Token::EndOfText);
    }
    Example { tokens, loss_start: prompt.len(), iteration: 0 }
}
