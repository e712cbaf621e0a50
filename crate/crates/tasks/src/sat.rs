//! Random 3-SAT instances and DPLL traces.
//!
//! A trace call prints the residual formula, then either propagates the
//! first unit clause (`Found <lit> Let <v> = <b>`) or branches on the
//! lowest variable still present (`Try <v> = True`, then `Try <v> = False`
//! if needed). A residual that is already decided is answered in place,
//! anything else is solved by a nested call. Every call closes with
//! `[SEP] Answer: <b> [RETURN]`.

use std::fmt;

use pencil_core::{Token, TokenSeq};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::emit::Emitter;
use crate::{TaskError, Trace};

/// Largest variable count accepted by the exhaustive oracle.
pub const MAX_BRUTE_FORCE_VARS: usize = 24;

/// A CNF formula over variables `1..=n_vars`; literal `-v` is `¬ v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CnfFormula {
    /// Number of declared variables.
    pub n_vars: usize,
    /// Clauses in order, each a list of non-zero signed variable indices.
    pub clauses: Vec<Vec<i32>>,
}

pub(crate) fn write_literal(f: &mut impl fmt::Write, lit: i32) -> fmt::Result {
    if lit < 0 {
        write!(f, "¬ {}", -lit)
    } else {
        write!(f, "{lit}")
    }
}

pub(crate) fn write_clause(f: &mut impl fmt::Write, clause: &[i32]) -> fmt::Result {
    f.write_str("(")?;
    for (i, &lit) in clause.iter().enumerate() {
        f.write_str(if i == 0 { " " } else { " ∨ " })?;
        write_literal(f, lit)?;
    }
    f.write_str(" )")
}

fn write_clauses(f: &mut impl fmt::Write, clauses: &[Vec<i32>]) -> fmt::Result {
    for (i, clause) in clauses.iter().enumerate() {
        if i > 0 {
            f.write_str(" ∧ ")?;
        }
        write_clause(f, clause)?;
    }
    Ok(())
}

fn clauses_text(clauses: &[Vec<i32>]) -> String {
    let mut s = String::new();
    write_clauses(&mut s, clauses).expect("writing to a String cannot fail");
    s
}

impl fmt::Display for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_clauses(f, &self.clauses)
    }
}

impl CnfFormula {
    /// Builds a formula, checking that literals reference declared
    /// variables.
    pub fn new(n_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self, TaskError> {
        for clause in &clauses {
            for &lit in clause {
                if lit == 0 || lit.unsigned_abs() as usize > n_vars {
                    return Err(TaskError::Parse(format!("literal {lit} outside 1..={n_vars}")));
                }
            }
        }
        Ok(CnfFormula { n_vars, clauses })
    }

    /// Parses the printed form, with or without prompt delimiters. The
    /// variable count is the largest index mentioned.
    pub fn parse(text: &str) -> Result<Self, TaskError> {
        let mut clauses = Vec::new();
        let mut current: Option<Vec<i32>> = None;
        let mut negate = false;
        for word in text.split_whitespace() {
            match (word, current.as_mut()) {
                ("<|startoftext|>" | "<|endofprompt|>" | "∧", None) => {}
                ("(", None) => current = Some(Vec::new()),
                (")", Some(_)) => clauses.push(current.take().unwrap_or_default()),
                ("∨", Some(_)) => {}
                ("¬", Some(_)) => negate = true,
                (num, Some(clause)) => {
                    let v: i32 = num.parse().map_err(|_| TaskError::Parse(format!("unexpected {num:?}")))?;
                    if v <= 0 {
                        return Err(TaskError::Parse(format!("variable {v} must be positive")));
                    }
                    clause.push(if negate { -v } else { v });
                    negate = false;
                }
                (other, None) => return Err(TaskError::Parse(format!("unexpected {other:?}"))),
            }
        }
        if current.is_some() {
            return Err(TaskError::Parse("unclosed clause".into()));
        }
        let n_vars = clauses.iter().flatten().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0);
        CnfFormula::new(n_vars, clauses)
    }

    /// The prompt `<|startoftext|> F <|endofprompt|>`.
    pub fn prompt(&self) -> TokenSeq {
        let mut e = Emitter::new();
        e.token(Token::StartOfText);
        e.words(&self.to_string());
        e.token(Token::EndOfPrompt);
        e.out
    }

    /// Truth value under a full assignment indexed by variable.
    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&l| assignment[l.unsigned_abs() as usize] == (l > 0)))
    }
}

/// Samples `round(4.3 n)` clauses of three distinct variables with fair
/// polarities. The count rounds halves up.
pub fn gen_sat(n: usize, seed: u64) -> Result<CnfFormula, TaskError> {
    if n < 3 {
        return Err(TaskError::TooSmall { what: "SAT variable count", min: 3, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = (43 * n + 5) / 10;
    let clauses = (0..m)
        .map(|_| {
            sample(&mut rng, n, 3)
                .into_iter()
                .map(|i| {
                    let v = i as i32 + 1;
                    if rng.gen_bool(0.5) {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect();
    CnfFormula::new(n, clauses)
}

/// Decides satisfiability by trying every assignment.
pub fn brute_force_sat(f: &CnfFormula) -> Result<bool, TaskError> {
    if f.n_vars > MAX_BRUTE_FORCE_VARS {
        return Err(TaskError::TooLarge {
            what: "brute-force variable count",
            max: MAX_BRUTE_FORCE_VARS,
            got: f.n_vars,
        });
    }
    let mut assignment = vec![false; f.n_vars + 1];
    for bits in 0u64..(1u64 << f.n_vars) {
        for (v, slot) in assignment.iter_mut().enumerate().skip(1) {
            *slot = bits >> (v - 1) & 1 == 1;
        }
        if f.eval(&assignment) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Deletes clauses satisfied by `lit` and removes its negation elsewhere,
/// keeping clause order and duplicates.
fn assign(clauses: &[Vec<i32>], lit: i32) -> Vec<Vec<i32>> {
    clauses.iter().filter(|c| !c.contains(&lit)).map(|c| c.iter().copied().filter(|&l| l != -lit).collect()).collect()
}

/// `Some(answer)` when the residual is empty or holds an empty clause.
fn decided(clauses: &[Vec<i32>]) -> Option<bool> {
    if clauses.iter().any(Vec::is_empty) {
        Some(false)
    } else if clauses.is_empty() {
        Some(true)
    } else {
        None
    }
}

fn bool_word(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

fn literal_text(lit: i32) -> String {
    let mut s = String::new();
    write_literal(&mut s, lit).expect("writing to a String cannot fail");
    s
}

fn call(clauses: &[Vec<i32>], e: &mut Emitter) -> bool {
    e.token(Token::Call);
    e.words("Question:");
    e.words(&clauses_text(clauses));
    let answer = body(clauses, e);
    e.token(Token::Sep);
    e.words("Answer:");
    e.words(bool_word(answer));
    e.token(Token::Return);
    answer
}

fn body(clauses: &[Vec<i32>], e: &mut Emitter) -> bool {
    if let Some(answer) = decided(clauses) {
        return answer;
    }
    if let Some(unit) = clauses.iter().find(|c| c.len() == 1) {
        let lit = unit[0];
        e.words(&format!("Found {} Let {} = {}", literal_text(lit), lit.abs(), bool_word(lit > 0)));
        let rest = assign(clauses, lit);
        return match decided(&rest) {
            Some(answer) => answer,
            None => call(&rest, e),
        };
    }
    let v = clauses.iter().flatten().map(|l| l.abs()).min().expect("undecided formulas have literals");
    for value in [true, false] {
        e.words(&format!("Try {v} = {}", bool_word(value)));
        let rest = assign(clauses, if value { v } else { -v });
        let answer = match decided(&rest) {
            Some(answer) => {
                e.words(&format!("Answer: {}", bool_word(answer)));
                answer
            }
            None => call(&rest, e),
        };
        if answer {
            return true;
        }
    }
    false
}

/// Solves `f` by DPLL and returns the answer with its scaffolded trace.
pub fn dpll_trace(f: &CnfFormula) -> Trace<bool> {
    let prompt = f.prompt();
    let mut e = Emitter::new();
    e.extend(&prompt);
    let answer = call(&f.clauses, &mut e);
    e.token(Token::EndOfText);
    Trace { answer, prompt, scaffold: e.out }
}
