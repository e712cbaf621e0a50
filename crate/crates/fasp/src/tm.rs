//! The program that simulates a Turing machine with PENCIL, and the
//! step-by-step check against the reference driver.
//!
//! The vocabulary is the driver's: every non-blank update `q/a/d`, then
//! `[SEP]` and `[RETURN]`. The special tokens embed as zero state and
//! symbol vectors with move 0. Head positions count from the first token
//! of the context, so the embedding of a summary starts at its minimum.
//!
//! Three points differ from a literal reading of the published listing.
//! The running move sums multiply the move by the phase mask, since a move
//! of -1 is not a truth value. The written span and the cell lookup of the
//! summary only consider simulation-phase prefixes, because every later
//! prefix reports the frozen head position, which may lie one cell outside
//! the span. The control state of a summary is retrieved from the latest
//! simulation-phase token, since `[SEP]` carries none.

use pencil_core::Token;
use pencil_turing::{pencil_next, run_pencil_tm_with, Move, PencilTmRun, SymbolId, TmSpec, TokenCodec, UpdateToken};

use crate::eval::Session;
use crate::expr::{rat, Expr, Program, Rational, Ty};
use crate::FaspError;

/// A compiled machine: the program and the word table it decodes with.
#[derive(Debug, Clone)]
pub struct TmProgram {
    spec: TmSpec,
    codec: TokenCodec,
    program: Program,
}

impl TmProgram {
    /// The machine.
    pub fn spec(&self) -> &TmSpec {
        &self.spec
    }

    /// The word table.
    pub fn codec(&self) -> &TokenCodec {
        &self.codec
    }

    /// The program.
    pub fn program(&self) -> &Program {
        &self.program
    }

    /// A fresh evaluation session.
    pub fn session(&self) -> Session<'_> {
        Session::new(&self.program)
    }
}

fn move_index(d: Move) -> usize {
    Move::ALL.iter().position(|&m| m == d).expect("every move is listed")
}

/// Compiles `spec` into a program whose next token matches the reference
/// driver on every non-empty context the driver produces.
pub fn build_tm_program(spec: &TmSpec) -> TmProgram {
    let codec = TokenCodec::new(spec);
    let program = compile(spec, &codec).expect("the machine program is well-typed by construction");
    TmProgram { spec: spec.clone(), codec, program }
}

fn compile(spec: &TmSpec, codec: &TokenCodec) -> Result<Program, FaspError> {
    let vocab = codec.vocabulary();
    let sigma = vocab.len();
    let (nq, na) = (spec.states().len(), spec.alphabet().len());
    let mut p = Program::new(vocab.clone())?;
    let index = |p: &Program, t: &Token| p.token_index(t).expect("vocabulary token");
    let sep = index(&p, &Token::Sep);
    let ret = index(&p, &Token::Return);
    let update_of: Vec<Option<UpdateToken>> = vocab.iter().map(|t| codec.update(t)).collect();

    let unit = |n: usize, i: usize| (0..n).map(|j| rat((i == j) as i64)).collect::<Vec<Rational>>();
    let get_token = p.token_embedding((0..sigma).map(|i| unit(sigma, i)).collect(), Ty::OneHot)?;
    p.define("get_token", get_token)?;
    let get_state = p.token_embedding(
        update_of.iter().map(|u| u.map_or_else(|| vec![rat(0); nq], |u| unit(nq, u.state))).collect(),
        Ty::Bool,
    )?;
    p.define("get_state", get_state)?;
    let get_symbol = p.token_embedding(
        update_of.iter().map(|u| u.map_or_else(|| vec![rat(0); na], |u| unit(na, u.symbol))).collect(),
        Ty::Bool,
    )?;
    p.define("get_symbol", get_symbol)?;
    let get_move =
        p.token_embedding(update_of.iter().map(|u| vec![rat(u.map_or(0, |u| u.dir.offset()))]).collect(), Ty::Int)?;
    p.define("get_move", get_move)?;
    let seq_len = p.seq_len();
    p.define("sequence_len", seq_len)?;

    // Phase masks.
    let sep_onehot = p.onehot(sigma, sep)?;
    let is_sep = p.equal(get_token, sep_onehot)?;
    p.define("is_sep", is_sep)?;
    let exist_sep = p.seq_or(is_sep)?;
    p.define("exist_sep", exist_sep)?;
    let sim_phase_mask = p.not(exist_sep)?;
    p.define("sim_phase_mask", sim_phase_mask)?;
    let not_sep = p.not(is_sep)?;
    let sum_phase_mask = p.and(exist_sep, not_sep)?;
    p.define("sum_phase_mask", sum_phase_mask)?;

    // Head positions during simulation.
    let sim_move = p.multiply(get_move, sim_phase_mask)?;
    let next_sim_pos = p.sum(sim_move)?;
    p.define("next_sim_pos", next_sim_pos)?;
    let current_sim_pos = p.minus(next_sim_pos, sim_move)?;
    p.define("current_sim_pos", current_sim_pos)?;

    // Written span. Later prefixes are pushed 2n cells away, out of reach.
    let late = p.not(sim_phase_mask)?;
    let two_n = p.scale(seq_len, 2)?;
    let push = p.multiply(two_n, late)?;
    let low_key = p.minus(current_sim_pos, push)?;
    let high_key = p.add(current_sim_pos, push)?;
    let max_pos = p.seq_max(low_key)?;
    p.define("max_pos", max_pos)?;
    let min_pos = p.seq_min(high_key)?;
    p.define("min_pos", min_pos)?;
    let width = p.minus(max_pos, min_pos)?;
    let behind = p.minus(max_pos, next_sim_pos)?;
    let behind = p.add_const(behind, -1)?;
    let walk_back = p.relu(behind)?;
    let span = p.add(width, walk_back)?;
    let expected_sum_len = p.add_const(span, 1)?;
    p.define("expected_sum_len", expected_sum_len)?;

    // Simulation step.
    let blank = p.onehot(na, spec.blank())?;
    let current_symbol = p.rightmost_exact_match(next_sim_pos, current_sim_pos, get_symbol, blank)?;
    p.define("current_symbol", current_symbol)?;
    let simulation_step = transition(&mut p, spec, codec, get_state, current_symbol)?;
    p.define("simulation_step", simulation_step)?;
    let twice = p.scale(expected_sum_len, 2)?;
    let end_simulation = p.geq(seq_len, twice)?;
    p.define("end_simulation", end_simulation)?;
    let simulation = p.if_then_else(end_simulation, sep_onehot, simulation_step)?;
    p.define("simulation", simulation)?;

    // Summary.
    let sum_move = p.multiply(get_move, sum_phase_mask)?;
    let current_sum_pos = p.sum(sum_move)?;
    p.define("current_sum_pos", current_sum_pos)?;
    let current_sum_len = p.sum(sum_phase_mask)?;
    p.define("current_sum_len", current_sum_len)?;
    let next_index = p.add_const(current_sum_len, 1)?;
    let next_move = compute_move(&mut p, next_index, next_sim_pos, max_pos, min_pos)?;
    p.define("next_move", next_move)?;
    let target = p.add(current_sum_pos, min_pos)?;
    let one = p.one();
    let query = p.concat(&[target, one])?;
    let key = p.concat(&[current_sim_pos, sim_phase_mask])?;
    let summary_symbol = p.rightmost_best_match(query, key, get_symbol)?;
    p.define("summary_symbol", summary_symbol)?;
    let summary_state = p.rha(one, sim_phase_mask, get_state)?;
    p.define("summary_state", summary_state)?;
    let state_symbol = p.kron(summary_state, summary_symbol)?;
    let triple = p.kron(state_symbol, next_move)?;
    let summary_step = project_updates(&mut p, spec, codec, triple)?;
    p.define("summary_step", summary_step)?;
    let end_summary = p.equal(current_sum_len, expected_sum_len)?;
    p.define("end_summary", end_summary)?;
    let ret_onehot = p.onehot(sigma, ret)?;
    let summary = p.if_then_else(end_summary, ret_onehot, summary_step)?;
    p.define("summary", summary)?;

    let result = p.if_then_else(exist_sep, summary, simulation)?;
    p.define("result", result)?;
    p.set_result(result)?;
    Ok(p)
}

/// The table operator `(q, a) -> delta(q, a)` on one-hot state and symbol.
fn transition(
    p: &mut Program,
    spec: &TmSpec,
    codec: &TokenCodec,
    state: Expr,
    symbol: Expr,
) -> Result<Expr, FaspError> {
    let pair = p.kron(state, symbol)?;
    let na = spec.alphabet().len();
    let sigma = p.vocab().len();
    let mut m = vec![vec![rat(0); pair.dim()]; sigma];
    for q in 0..spec.states().len() {
        for a in 0..na {
            let out = p.token_index(&codec.token(spec.delta(q, a))).expect("transitions write non-blank symbols");
            m[out][q * na + a] = rat(1);
        }
    }
    let e = p.linear(pair, m)?;
    Ok(p.tag(e, Ty::Bool, "transition"))
}

/// Maps the one-hot of `(q, a, d)` to the vocabulary. Blank triples have no
/// word and map to zero.
fn project_updates(p: &mut Program, spec: &TmSpec, codec: &TokenCodec, triple: Expr) -> Result<Expr, FaspError> {
    let na = spec.alphabet().len();
    let sigma = p.vocab().len();
    let mut m = vec![vec![rat(0); triple.dim()]; sigma];
    for q in 0..spec.states().len() {
        for a in 0..na {
            if a == spec.blank() {
                continue;
            }
            for d in Move::ALL {
                let out =
                    p.token_index(&codec.token(UpdateToken { state: q, symbol: a, dir: d })).expect("update word");
                m[out][(q * na + a) * 3 + move_index(d)] = rat(1);
            }
        }
    }
    let e = p.linear(triple, m)?;
    Ok(p.tag(e, Ty::Bool, "onehot_update"))
}

/// Move of summary token `i` (from 1) for head `head` and written span
/// `[lo, hi]`: right across the span, then right, stay or left depending on
/// where the head ends, then left for the walk back. Returns the one-hot
/// over left, stay and right.
fn compute_move(p: &mut Program, i: Expr, head: Expr, hi: Expr, lo: Expr) -> Result<Expr, FaspError> {
    let width = p.minus(hi, lo)?;
    let sweeping = p.leq(i, width)?;
    let past = p.add_const(width, 1)?;
    let at_turn = p.equal(i, past)?;
    let hi_next = p.add_const(hi, 1)?;
    let head_beyond = p.equal(head, hi_next)?;
    let head_on_hi = p.equal(head, hi)?;
    let step_out = p.and(at_turn, head_beyond)?;
    let right = p.or(sweeping, step_out)?;
    let stay = p.and(at_turn, head_on_hi)?;
    let moving_right_or_staying = p.or(right, stay)?;
    let left = p.not(moving_right_or_staying)?;
    let e = p.concat(&[left, stay, right])?;
    Ok(p.tag(e, Ty::OneHot, "compute_move"))
}

/// Outcome of a checked run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedRun {
    /// The run driven by the program.
    pub run: PencilTmRun,
    /// Steps whose token came from the program and matched the reference.
    pub checked: usize,
    /// Steps on an empty context, which no program can read. They take the
    /// reference token.
    pub empty_context: usize,
}

/// Drives PENCIL on `input` with the program as predictor and compares
/// each token with [`pencil_next`], checking declared domains on the way.
/// The first disagreement is an error.
pub fn check_against_reference(tm: &TmProgram, input: &[SymbolId], step_cap: usize) -> Result<CheckedRun, FaspError> {
    let mut session = tm.session().with_type_checks(true);
    let mut checked = 0;
    let mut empty_context = 0;
    let mut step = 0;
    let run = run_pencil_tm_with(&tm.spec, &tm.codec, input, step_cap, |ctx: &[Token]| {
        step += 1;
        let expected = pencil_next(&tm.spec, &tm.codec, ctx)?;
        if ctx.is_empty() {
            empty_context += 1;
            return Ok(expected);
        }
        let got = session.next_token(ctx)?;
        if got != expected {
            return Err(FaspError::Mismatch {
                step,
                context_len: ctx.len(),
                expected: expected.surface().to_string(),
                got: got.surface().to_string(),
            });
        }
        checked += 1;
        Ok(got)
    })?;
    Ok(CheckedRun { run, checked, empty_context })
}
