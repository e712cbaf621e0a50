//! Reduction rules and the generate-reduce loop.
//!
//! The full rule rewrites `C [CALL] T [SEP] A [RETURN]` to `C A`, where the
//! `[RETURN]` is the final token, the `[SEP]` is the last one before it and
//! the `[CALL]` is the last one before that `[SEP]`. `T` therefore holds no
//! `[CALL]` and `A` holds no `[SEP]` or `[RETURN]`; `A` may open with
//! `[CALL]`, which turns a finished question into its successor question.
//!
//! The simplified rule rewrites `T [SEP] T' [RETURN]` to `T'`.

use std::fmt;

use thiserror::Error;

use crate::token::{Token, TokenSeq};

/// Which rewrite the loop applies after each `[RETURN]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Rule {
    /// `C [CALL] T [SEP] A [RETURN] => C A`.
    #[default]
    Full,
    /// `T [SEP] T' [RETURN] => T'`.
    Simplified,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Full => "full",
            Rule::Simplified => "simplified",
        })
    }
}

/// A sequence ends in `[RETURN]` but no legal match exists.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed trace at position {position}: {reason}")]
pub struct MalformedTrace {
    /// Zero-based position of the offending `[RETURN]` or stray token.
    pub position: usize,
    /// What is missing or out of place.
    pub reason: &'static str,
}

/// The unique match of the full rule, as zero-based positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RuleMatch {
    /// Position of the matched `[CALL]`.
    pub call_idx: usize,
    /// Position of the matched `[SEP]`.
    pub sep_idx: usize,
    /// Position of the final `[RETURN]`.
    pub return_idx: usize,
}

impl RuleMatch {
    /// Index range of the kept context `C`.
    pub fn c(&self) -> std::ops::Range<usize> {
        0..self.call_idx
    }

    /// Index range of the erased thoughts `T`.
    pub fn t(&self) -> std::ops::Range<usize> {
        self.call_idx + 1..self.sep_idx
    }

    /// Index range of the answer `A`.
    pub fn a(&self) -> std::ops::Range<usize> {
        self.sep_idx + 1..self.return_idx
    }
}

/// Finds the full-rule match of `seq`.
///
/// Returns `Ok(None)` when `seq` does not end in `[RETURN]`.
pub fn match_rule(seq: &[Token]) -> Result<Option<RuleMatch>, MalformedTrace> {
    let Some(return_idx) = seq.len().checked_sub(1).filter(|&i| seq[i] == Token::Return) else {
        return Ok(None);
    };
    let sep_idx = last_sep(seq, return_idx)?;
    let call_idx = seq[..sep_idx]
        .iter()
        .rposition(|t| *t == Token::Call)
        .ok_or(MalformedTrace { position: sep_idx, reason: "no [CALL] before the matching [SEP]" })?;
    Ok(Some(RuleMatch { call_idx, sep_idx, return_idx }))
}

/// Last `[SEP]` before `return_idx`, rejecting a `[RETURN]` in between.
fn last_sep(seq: &[Token], return_idx: usize) -> Result<usize, MalformedTrace> {
    for i in (0..return_idx).rev() {
        match seq[i] {
            Token::Sep => return Ok(i),
            Token::Return => {
                return Err(MalformedTrace { position: i, reason: "unreduced [RETURN] inside the answer" })
            }
            _ => {}
        }
    }
    Err(MalformedTrace { position: return_idx, reason: "no [SEP] before the final [RETURN]" })
}

/// Applies the full rule, or returns `seq` unchanged when it does not end in
/// `[RETURN]`.
pub fn reduce(seq: &[Token]) -> Result<TokenSeq, MalformedTrace> {
    Ok(apply(Rule::Full, seq)?.0)
}

/// Applies the simplified rule, or returns `seq` unchanged when it does not
/// end in `[RETURN]`.
pub fn reduce_simplified(seq: &[Token]) -> Result<TokenSeq, MalformedTrace> {
    Ok(apply(Rule::Simplified, seq)?.0)
}

/// Sizes of the kept context and the answer of one effective reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Spans {
    /// `|C|`: tokens kept in place, whose cached keys stay valid.
    pub kept: usize,
    /// `|A|`: answer tokens moved next to `C`.
    pub answer: usize,
}

/// Applies `rule` to `seq`, reporting the spans when the rule fires.
pub fn apply(rule: Rule, seq: &[Token]) -> Result<(TokenSeq, Option<Spans>), MalformedTrace> {
    match rule {
        Rule::Full => match match_rule(seq)? {
            None => Ok((seq.to_vec(), None)),
            Some(m) => {
                let mut out = Vec::with_capacity(m.call_idx + m.a().len());
                out.extend_from_slice(&seq[m.c()]);
                out.extend_from_slice(&seq[m.a()]);
                Ok((out, Some(Spans { kept: m.call_idx, answer: m.a().len() })))
            }
        },
        Rule::Simplified => {
            let Some(return_idx) = seq.len().checked_sub(1).filter(|&i| seq[i] == Token::Return) else {
                return Ok((seq.to_vec(), None));
            };
            let sep_idx = last_sep(seq, return_idx)?;
            let out = seq[sep_idx + 1..return_idx].to_vec();
            let answer = out.len();
            Ok((out, Some(Spans { kept: 0, answer })))
        }
    }
}

/// Generation limits of [`run_pencil`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of generated tokens.
    pub max_steps: usize,
    /// Maximum live context length.
    pub max_context: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_steps: 1 << 24, max_context: 2048 }
    }
}

impl Limits {
    /// Limits that never trigger in practice.
    pub fn unbounded() -> Self {
        Limits { max_steps: usize::MAX, max_context: usize::MAX }
    }
}

/// One generate-then-reduce iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iteration {
    /// Tokens generated in this iteration.
    pub generated: TokenSeq,
    /// Live context length after generation, before the reduction.
    pub context_len: usize,
    /// Spans and reduced context, absent for the final iteration.
    pub reduction: Option<ReductionStep>,
}

/// The effective reduction that ends an iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionStep {
    /// Kept-context and answer sizes read off the rule match.
    pub spans: Spans,
    /// The reduced context that prompts the next iteration.
    pub context: TokenSeq,
}

/// The record of one PENCIL run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PencilRun {
    /// Rule applied after each `[RETURN]`.
    pub rule: Rule,
    /// Length of the prompt.
    pub prompt_len: usize,
    /// Iterations in order; every one but the last ends in a reduction.
    pub iterations: Vec<Iteration>,
    /// Final context with the prompt prefix (when still present) and the
    /// stop token removed.
    pub final_answer: TokenSeq,
    /// Final live context, stop token included.
    pub final_context: TokenSeq,
    /// Longest live context over the run.
    pub max_context: usize,
    /// Number of generated tokens.
    pub total_generated: usize,
    /// Number of effective reductions.
    pub reductions: usize,
}

impl PencilRun {
    /// Context length at the start of iteration `i` (zero-based).
    pub fn start_len(&self, i: usize) -> usize {
        if i == 0 {
            self.prompt_len
        } else {
            self.iterations[i - 1].reduction.as_ref().map_or(self.iterations[i - 1].context_len, |r| r.context.len())
        }
    }
}

/// A failed generation step reported by a predictor.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredictError {
    /// The oracle was called with a context other than the one its trace
    /// implies.
    #[error("context mismatch at step {step}: expected {expected_len} tokens, got {actual_len}, first difference at {position}")]
    ContextMismatch { step: usize, expected_len: usize, actual_len: usize, position: usize },
    /// The oracle ran past the end of its trace.
    #[error("oracle trace exhausted at step {0}")]
    Exhausted(usize),
    /// Any other predictor failure.
    #[error("{0}")]
    Other(String),
}

/// Why a run stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    /// Too many generated tokens.
    Steps,
    /// Live context too long.
    Context,
}

/// Errors of [`run_pencil`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PencilError {
    /// The rule could not be applied after a `[RETURN]`.
    #[error(transparent)]
    Malformed(#[from] MalformedTrace),
    /// The predictor failed.
    #[error(transparent)]
    Predict(#[from] PredictError),
    /// A limit was reached; the partial run covers completed iterations and
    /// `pending` holds the tokens of the unfinished one.
    #[error("{limit:?} limit exceeded after {} generated tokens", partial.total_generated)]
    ResourceExceeded { limit: LimitKind, partial: Box<PencilRun>, pending: TokenSeq },
    /// The prompt was empty.
    #[error("the prompt must be non-empty")]
    EmptyPrompt,
}

/// A next-token function over the live context.
pub trait Predictor {
    /// Produces the next token for `context`.
    fn predict(&mut self, context: &[Token]) -> Result<Token, PredictError>;
}

impl<F> Predictor for F
where
    F: FnMut(&[Token]) -> Result<Token, PredictError>,
{
    fn predict(&mut self, context: &[Token]) -> Result<Token, PredictError> {
        self(context)
    }
}

/// Runs PENCIL until the predictor emits `<|endoftext|>`.
pub fn run_pencil(
    predictor: &mut dyn Predictor,
    prompt: &[Token],
    rule: Rule,
    limits: Limits,
) -> Result<PencilRun, PencilError> {
    run_pencil_until(predictor, prompt, rule, limits, &|t| *t == Token::EndOfText)
}

/// Runs PENCIL until the predictor emits a token accepted by `stop`.
pub fn run_pencil_until(
    predictor: &mut dyn Predictor,
    prompt: &[Token],
    rule: Rule,
    limits: Limits,
    stop: &dyn Fn(&Token) -> bool,
) -> Result<PencilRun, PencilError> {
    if prompt.is_empty() {
        return Err(PencilError::EmptyPrompt);
    }
    let mut run = PencilRun {
        rule,
        prompt_len: prompt.len(),
        iterations: Vec::new(),
        final_answer: Vec::new(),
        final_context: Vec::new(),
        max_context: prompt.len(),
        total_generated: 0,
        reductions: 0,
    };
    let mut context = prompt.to_vec();
    let mut generated = Vec::new();
    loop {
        if run.total_generated >= limits.max_steps {
            return Err(exceeded(run, LimitKind::Steps, generated));
        }
        let token = predictor.predict(&context)?;
        run.total_generated += 1;
        context.push(token.clone());
        generated.push(token.clone());
        run.max_context = run.max_context.max(context.len());
        if context.len() > limits.max_context {
            return Err(exceeded(run, LimitKind::Context, generated));
        }
        if stop(&token) {
            let context_len = context.len();
            run.iterations.push(Iteration { generated, context_len, reduction: None });
            let mut answer = context.clone();
            answer.pop();
            if answer.starts_with(prompt) {
                answer.drain(..prompt.len());
            }
            run.final_answer = answer;
            run.final_context = context;
            return Ok(run);
        }
        if token == Token::Return {
            let context_len = context.len();
            let (reduced, spans) = apply(rule, &context)?;
            let spans = spans.expect("a sequence ending in [RETURN] either matches or errors");
            run.iterations.push(Iteration {
                generated: std::mem::take(&mut generated),
                context_len,
                reduction: Some(ReductionStep { spans, context: reduced.clone() }),
            });
            run.reductions += 1;
            context = reduced;
        }
    }
}

fn exceeded(run: PencilRun, limit: LimitKind, pending: TokenSeq) -> PencilError {
    PencilError::ResourceExceeded { limit, partial: Box::new(run), pending }
}

/// The scaffolded trace: the prompt followed by every iteration's generated
/// tokens, with nothing erased.
pub fn scaffold(run: &PencilRun, prompt: &[Token]) -> TokenSeq {
    let mut out = Vec::with_capacity(prompt.len() + run.total_generated);
    out.extend_from_slice(prompt);
    for it in &run.iterations {
        out.extend_from_slice(&it.generated);
    }
    out
}

/// A predictor that replays a scaffolded trace and checks, at every call,
/// that the caller's context equals the reduction of everything emitted so
/// far.
#[derive(Debug, Clone)]
pub struct OraclePredictor {
    trace: TokenSeq,
    prompt_len: usize,
    rule: Rule,
    cursor: usize,
    expected: TokenSeq,
    poisoned: bool,
}

impl OraclePredictor {
    /// Replays `trace`, whose first `prompt_len` tokens are the prompt.
    pub fn new(trace: TokenSeq, prompt_len: usize, rule: Rule) -> Self {
        let expected = trace[..prompt_len.min(trace.len())].to_vec();
        OraclePredictor { trace, prompt_len, rule, cursor: 0, expected, poisoned: false }
    }

    /// Number of tokens emitted so far.
    pub fn emitted(&self) -> usize {
        self.cursor
    }

    /// True once every trace token has been emitted.
    pub fn finished(&self) -> bool {
        self.prompt_len + self.cursor >= self.trace.len()
    }
}

impl Predictor for OraclePredictor {
    fn predict(&mut self, context: &[Token]) -> Result<Token, PredictError> {
        let step = self.cursor;
        if self.poisoned || context != self.expected.as_slice() {
            let position = context
                .iter()
                .zip(&self.expected)
                .position(|(a, b)| a != b)
                .unwrap_or_else(|| context.len().min(self.expected.len()));
            return Err(PredictError::ContextMismatch {
                step,
                expected_len: self.expected.len(),
                actual_len: context.len(),
                position,
            });
        }
        let token = self.trace.get(self.prompt_len + step).cloned().ok_or(PredictError::Exhausted(step))?;
        self.cursor += 1;
        self.expected.push(token.clone());
        if token == Token::Return {
            match apply(self.rule, &self.expected) {
                Ok((reduced, _)) => self.expected = reduced,
                Err(_) => self.poisoned = true,
            }
        }
        Ok(token)
    }
}

/// Builds the replaying oracle for a scaffolded trace.
pub fn make_oracle_predictor(trace: &[Token], prompt_len: usize, rule: Rule) -> OraclePredictor {
    OraclePredictor::new(trace.to_vec(), prompt_len, rule)
}

/// Replays a scaffolded trace through [`run_pencil`] and checks that the
/// whole trace was consumed.
pub fn replay(trace: &[Token], prompt_len: usize, rule: Rule, limits: Limits) -> Result<PencilRun, PencilError> {
    let mut oracle = make_oracle_predictor(trace, prompt_len, rule);
    let run = run_pencil(&mut oracle, &trace[..prompt_len], rule, limits)?;
    if !oracle.finished() {
        return Err(PredictError::Other(format!(
            "trace stopped after {} of {} generated tokens",
            oracle.emitted(),
            trace.len() - prompt_len
        ))
        .into());
    }
    Ok(run)
}
