//! PENCIL simulation of a Turing machine with the half-length trigger.
//!
//! Update tokens are the words `q/a/d`, for example `carry/1/-1`. The prompt
//! is the encoded input. The driver emits machine steps until the context
//! reaches twice the length of its state embedding, then emits `[SEP]`, the
//! embedding and `[RETURN]`, and the simplified rule collapses the context
//! to the embedding. It stops at the first step that enters a halting state.

use std::collections::HashMap;

use pencil_core::{reduce_simplified, Token, TokenSeq};

use crate::am::{encode_input, start_config, state_fn};
use crate::config::{apply_updates, Move, UpdateToken};
use crate::machine::{SymbolId, TmSpec, Verdict};
use crate::TuringError;

/// Maps update tokens of one machine to vocabulary words and back.
#[derive(Debug, Clone)]
pub struct TokenCodec {
    symbols: usize,
    tokens: Vec<Token>,
    updates: HashMap<Token, UpdateToken>,
}

fn move_index(d: Move) -> usize {
    match d {
        Move::Left => 0,
        Move::Stay => 1,
        Move::Right => 2,
    }
}

impl TokenCodec {
    /// Builds the word table of `spec`.
    pub fn new(spec: &TmSpec) -> Self {
        let symbols = spec.alphabet().len();
        let mut tokens = Vec::with_capacity(spec.states().len() * symbols * 3);
        let mut updates = HashMap::new();
        for (q, q_name) in spec.states().iter().enumerate() {
            for (a, a_name) in spec.alphabet().iter().enumerate() {
                for dir in Move::ALL {
                    let token = Token::word(&format!("{q_name}/{a_name}/{dir}"));
                    if a != spec.blank() {
                        updates.insert(token.clone(), UpdateToken { state: q, symbol: a, dir });
                    }
                    tokens.push(token);
                }
            }
        }
        TokenCodec { symbols, tokens, updates }
    }

    /// The word of an update.
    pub fn token(&self, u: UpdateToken) -> Token {
        self.tokens[(u.state * self.symbols + u.symbol) * 3 + move_index(u.dir)].clone()
    }

    /// The update a word stands for, if it is one.
    pub fn update(&self, token: &Token) -> Option<UpdateToken> {
        self.updates.get(token).copied()
    }

    /// Words of a whole sequence.
    pub fn encode(&self, seq: &[UpdateToken]) -> TokenSeq {
        seq.iter().map(|&u| self.token(u)).collect()
    }

    /// Updates of a whole sequence, failing on any other token.
    pub fn decode(&self, tokens: &[Token]) -> Result<Vec<UpdateToken>, TuringError> {
        tokens
            .iter()
            .map(|t| match self.update(t) {
                Some(u) => Ok(u),
                None if t.is_special() => Err(TuringError::MalformedContext(format!("unexpected {}", t.surface()))),
                None => Err(TuringError::UnknownToken(t.surface().to_string())),
            })
            .collect()
    }

    /// Every non-blank update word in table order, then `[SEP]` and
    /// `[RETURN]`.
    pub fn vocabulary(&self) -> TokenSeq {
        let mut out: TokenSeq = self.tokens.iter().filter(|t| self.updates.contains_key(*t)).cloned().collect();
        out.push(Token::Sep);
        out.push(Token::Return);
        out
    }
}

/// The driver's next token for `context`, as a pure function of it.
///
/// After a `[SEP]` the result is the next token of the embedding of the
/// history before it, then `[RETURN]`. Otherwise it is `[SEP]` when the
/// context is non-empty and at least twice its embedding's length, and the
/// machine's next step in every other case.
pub fn pencil_next(spec: &TmSpec, codec: &TokenCodec, context: &[Token]) -> Result<Token, TuringError> {
    if let Some(k) = context.iter().position(|t| *t == Token::Sep) {
        let emitted = context.len() - k - 1;
        let target = state_fn(spec, &codec.decode(&context[..k])?)?;
        return match emitted.cmp(&target.len()) {
            std::cmp::Ordering::Less => Ok(codec.token(target[emitted])),
            std::cmp::Ordering::Equal => Ok(Token::Return),
            std::cmp::Ordering::Greater => {
                Err(TuringError::MalformedContext("summary is longer than the state".into()))
            }
        };
    }
    let c = apply_updates(&start_config(spec), &codec.decode(context)?, spec.blank());
    if !context.is_empty() && context.len() >= 2 * c.embed_len() {
        return Ok(Token::Sep);
    }
    Ok(codec.token(spec.delta(c.state, c.read(spec.blank()))))
}

/// One summarization: the context length when `[SEP]` was emitted and the
/// length of the state written after it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trigger {
    /// Context length just before `[SEP]`.
    pub context_len: usize,
    /// Number of state tokens between `[SEP]` and `[RETURN]`.
    pub state_len: usize,
}

/// The record of a PENCIL simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PencilTmRun {
    /// How the run ended.
    pub verdict: Verdict,
    /// Machine steps generated, summaries excluded.
    pub steps: usize,
    /// All generated tokens, summaries and structural tokens included.
    pub total_tokens: usize,
    /// Longest live context, prompt included.
    pub max_context: usize,
    /// Number of reductions.
    pub reductions: usize,
    /// Length of the encoded input.
    pub prompt_len: usize,
    /// Prompt followed by every generated token, nothing erased.
    pub scaffold: TokenSeq,
    /// Every summarization in order.
    pub triggers: Vec<Trigger>,
    /// Live context when the run stopped.
    pub final_context: TokenSeq,
}

/// Simulates `spec` on `input` with PENCIL for at most `step_cap` machine
/// steps, using [`pencil_next`] as the predictor.
pub fn run_pencil_tm(spec: &TmSpec, input: &[SymbolId], step_cap: usize) -> Result<PencilTmRun, TuringError> {
    let codec = TokenCodec::new(spec);
    run_pencil_tm_with(spec, &codec, input, step_cap, |ctx: &[Token]| pencil_next(spec, &codec, ctx))
}

/// Like [`run_pencil_tm`] with any predictor, such as a compiled program
/// checked against [`pencil_next`]. The prompt may be empty.
pub fn run_pencil_tm_with<F, E>(
    spec: &TmSpec,
    codec: &TokenCodec,
    input: &[SymbolId],
    step_cap: usize,
    mut predict: F,
) -> Result<PencilTmRun, E>
where
    F: FnMut(&[Token]) -> Result<Token, E>,
    E: From<TuringError>,
{
    if step_cap == 0 {
        return Err(TuringError::ZeroCap.into());
    }
    let prompt = codec.encode(&encode_input(spec, input)?);
    let mut run = PencilTmRun {
        verdict: Verdict::Timeout,
        steps: 0,
        total_tokens: 0,
        max_context: prompt.len(),
        reductions: 0,
        prompt_len: prompt.len(),
        scaffold: prompt.clone(),
        triggers: Vec::new(),
        final_context: Vec::new(),
    };
    let mut context = prompt;
    let mut summary_start: Option<usize> = None;
    loop {
        let token = predict(&context)?;
        context.push(token.clone());
        run.scaffold.push(token.clone());
        run.total_tokens += 1;
        run.max_context = run.max_context.max(context.len());
        match (&token, summary_start) {
            (Token::Sep, None) => summary_start = Some(context.len()),
            (Token::Return, Some(start)) => {
                run.triggers.push(Trigger { context_len: start - 1, state_len: context.len() - 1 - start });
                context = reduce_simplified(&context).map_err(TuringError::from)?;
                run.reductions += 1;
                summary_start = None;
            }
            (Token::Base(_), Some(_)) => {}
            (Token::Base(_), None) => {
                let u = codec.update(&token).ok_or_else(|| TuringError::UnknownToken(token.surface().to_string()))?;
                run.steps += 1;
                if spec.is_accept(u.state) || spec.is_reject(u.state) {
                    run.verdict = if spec.is_accept(u.state) { Verdict::Accept } else { Verdict::Reject };
                    break;
                }
                if run.steps == step_cap {
                    break;
                }
            }
            _ => {
                return Err(TuringError::MalformedContext(format!("unexpected {}", token.surface())).into());
            }
        }
    }
    run.final_context = context;
    Ok(run)
}
