//! Exact evaluation of programs.
//!
//! A [`Session`] keeps the value of every node at every prefix of the last
//! sequence it saw. A new sequence reuses the values of the common prefix,
//! so a context that grows by one token costs one new position.

use num::{CheckedAdd, CheckedDiv, CheckedMul, Zero};
use pencil_core::Token;

use crate::expr::{rat, Activation, Expr, Op, Program, Rational};
use crate::FaspError;

/// Uniform weights on the positions of the largest entry and 0 elsewhere.
/// An empty input gives an empty output.
pub fn hardmax(v: &[Rational]) -> Vec<Rational> {
    let Some(best) = v.iter().max() else {
        return Vec::new();
    };
    let count = v.iter().filter(|x| *x == best).count();
    let w = Rational::new(1, count as i128);
    v.iter().map(|x| if x == best { w } else { Rational::zero() }).collect()
}

fn add(a: &Rational, b: &Rational) -> Result<Rational, FaspError> {
    if a.is_integer() && b.is_integer() {
        return i128::checked_add(*a.numer(), *b.numer()).map(Rational::from_integer).ok_or(FaspError::Overflow);
    }
    a.checked_add(b).ok_or(FaspError::Overflow)
}

fn mul(a: &Rational, b: &Rational) -> Result<Rational, FaspError> {
    if a.is_integer() && b.is_integer() {
        return i128::checked_mul(*a.numer(), *b.numer()).map(Rational::from_integer).ok_or(FaspError::Overflow);
    }
    if a.is_zero() || b.is_zero() {
        return Ok(Rational::zero());
    }
    a.checked_mul(b).ok_or(FaspError::Overflow)
}

fn dot(a: &[Rational], b: &[Rational]) -> Result<Rational, FaspError> {
    let mut acc = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        acc = add(&acc, &mul(x, y)?)?;
    }
    Ok(acc)
}

fn add_into(acc: &mut [Rational], v: &[Rational]) -> Result<(), FaspError> {
    for (o, x) in acc.iter_mut().zip(v) {
        *o = add(o, x)?;
    }
    Ok(())
}

/// Running state of an attention whose query is the same at every prefix:
/// the best score so far, the sum of the values that reach it and their
/// count.
#[derive(Debug, Clone)]
struct Running {
    best: Rational,
    sum: Vec<Rational>,
    count: usize,
}

/// Values of every node at one position.
type Row = Vec<Vec<Rational>>;

/// Nodes whose value does not depend on the sequence.
fn fixed_nodes(program: &Program) -> Vec<bool> {
    let mut fixed: Vec<bool> = Vec::with_capacity(program.nodes().len());
    for node in program.nodes() {
        let f = match &node.op {
            Op::TokenEmbedding(table) => table.iter().all(|r| *r == table[0]),
            Op::SeqLen | Op::Aha { .. } => false,
            Op::Concat(ids) | Op::Activation { inputs: ids, .. } => ids.iter().all(|&i| fixed[i]),
            Op::Linear { input, .. } => fixed[*input],
        };
        fixed.push(f);
    }
    fixed
}

fn mean(sum: &[Rational], count: usize) -> Result<Vec<Rational>, FaspError> {
    if count == 1 {
        return Ok(sum.to_vec());
    }
    let c = Rational::from_integer(count as i128);
    sum.iter().map(|x| x.checked_div(&c).ok_or(FaspError::Overflow)).collect()
}

/// Memoized evaluation of one program.
///
/// Attention with a fixed query keeps a running maximum instead of
/// rescanning every prefix, which gives the same exact value.
#[derive(Debug, Clone)]
pub struct Session<'p> {
    program: &'p Program,
    fixed: Vec<bool>,
    tokens: Vec<usize>,
    values: Vec<Row>,
    running: Vec<Vec<Option<Running>>>,
    check_types: bool,
}

impl<'p> Session<'p> {
    /// A session with no cached positions. Declared domains are checked in
    /// builds with debug assertions.
    pub fn new(program: &'p Program) -> Self {
        Session {
            program,
            fixed: fixed_nodes(program),
            tokens: Vec::new(),
            values: Vec::new(),
            running: Vec::new(),
            check_types: cfg!(debug_assertions),
        }
    }

    /// Turns domain checks on or off.
    pub fn with_type_checks(mut self, on: bool) -> Self {
        self.check_types = on;
        self
    }

    /// The program being evaluated.
    pub fn program(&self) -> &'p Program {
        self.program
    }

    fn sync(&mut self, seq: &[Token]) -> Result<(), FaspError> {
        if seq.is_empty() {
            return Err(FaspError::EmptySequence);
        }
        let ids = seq
            .iter()
            .map(|t| self.program.token_index(t).ok_or_else(|| FaspError::UnknownToken(t.surface().to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let keep = self.tokens.iter().zip(&ids).take_while(|(a, b)| a == b).count();
        self.tokens.truncate(keep);
        self.values.truncate(keep);
        self.running.truncate(keep);
        for &id in &ids[keep..] {
            self.tokens.push(id);
            let (row, running) = self.position(self.tokens.len() - 1)?;
            self.values.push(row);
            self.running.push(running);
        }
        Ok(())
    }

    fn position(&self, pos: usize) -> Result<(Row, Vec<Option<Running>>), FaspError> {
        let nodes = self.program.nodes();
        let mut row: Row = Vec::with_capacity(nodes.len());
        let mut running: Vec<Option<Running>> = vec![None; nodes.len()];
        for (id, node) in nodes.iter().enumerate() {
            let value = match &node.op {
                Op::TokenEmbedding(table) => table[self.tokens[pos]].clone(),
                Op::SeqLen => vec![rat(pos as i64 + 1)],
                Op::Concat(parts) => parts.iter().flat_map(|&p| row[p].iter().cloned()).collect(),
                Op::Aha { q, k, v } if self.fixed[*q] => {
                    let score = dot(&row[*q], &row[*k])?;
                    let prev = if pos == 0 { None } else { self.running[pos - 1][id].as_ref() };
                    let next = match prev {
                        Some(r) if r.best > score => r.clone(),
                        Some(r) if r.best == score => {
                            let mut sum = r.sum.clone();
                            add_into(&mut sum, &row[*v])?;
                            Running { best: score, sum, count: r.count + 1 }
                        }
                        _ => Running { best: score, sum: row[*v].clone(), count: 1 },
                    };
                    let out = mean(&next.sum, next.count)?;
                    running[id] = Some(next);
                    out
                }
                Op::Aha { q, k, v } => {
                    let at = |j: usize, n: usize| if j == pos { &row[n] } else { &self.values[j][n] };
                    let scores = (0..=pos).map(|j| dot(&row[*q], at(j, *k))).collect::<Result<Vec<_>, _>>()?;
                    let best = scores.iter().max().expect("at least one prefix");
                    let mut sum = vec![Rational::zero(); node.dim];
                    let mut count = 0;
                    for j in (0..=pos).filter(|&j| scores[j] == *best) {
                        count += 1;
                        add_into(&mut sum, at(j, *v))?;
                    }
                    mean(&sum, count)?
                }
                Op::Linear { matrix, input } => {
                    matrix.iter().map(|r| dot(r, &row[*input])).collect::<Result<Vec<_>, _>>()?
                }
                Op::Activation { act, inputs } => {
                    let x = &row[inputs[0]];
                    let relu = |a: &Rational| *a.max(&Rational::zero());
                    match act {
                        Activation::Relu => x.iter().map(relu).collect(),
                        Activation::Square => x.iter().map(|a| mul(a, a)).collect::<Result<Vec<_>, _>>()?,
                        Activation::Multiply => {
                            x.iter().zip(&row[inputs[1]]).map(|(a, b)| mul(a, b)).collect::<Result<Vec<_>, _>>()?
                        }
                        Activation::Reglu => x
                            .iter()
                            .zip(&row[inputs[1]])
                            .map(|(a, b)| mul(a, &relu(b)))
                            .collect::<Result<Vec<_>, _>>()?,
                    }
                }
            };
            if self.check_types && !node.ty.admits(&value) {
                return Err(FaspError::TypeViolation { node: id, position: pos + 1 });
            }
            row.push(value);
        }
        Ok((row, running))
    }

    /// The value of `expr` on `seq`, which must be non-empty.
    pub fn eval(&mut self, expr: Expr, seq: &[Token]) -> Result<Vec<Rational>, FaspError> {
        if expr.id() >= self.program.nodes().len() {
            return Err(FaspError::ForeignExpr(expr.id()));
        }
        self.sync(seq)?;
        Ok(self.values[seq.len() - 1][expr.id()].clone())
    }

    /// The values of `expr` on every prefix of `seq`, shortest first.
    pub fn eval_prefixes(&mut self, expr: Expr, seq: &[Token]) -> Result<Vec<Vec<Rational>>, FaspError> {
        if expr.id() >= self.program.nodes().len() {
            return Err(FaspError::ForeignExpr(expr.id()));
        }
        self.sync(seq)?;
        Ok(self.values.iter().map(|row| row[expr.id()].clone()).collect())
    }

    /// The token named by the unique largest coordinate of the result.
    pub fn next_token(&mut self, seq: &[Token]) -> Result<Token, FaspError> {
        let result = self.program.result().ok_or(FaspError::NoResult)?;
        let v = self.eval(result, seq)?;
        decode(self.program, &v)
    }
}

/// The token at the unique largest coordinate of `v`.
pub fn decode(program: &Program, v: &[Rational]) -> Result<Token, FaspError> {
    let vocab = program.vocab();
    if v.len() != vocab.len() {
        return Err(FaspError::Dim { op: "decode", expected: vocab.len(), got: v.len() });
    }
    let best = v.iter().max().expect("vocabularies are non-empty");
    let winners: Vec<usize> = (0..v.len()).filter(|&i| v[i] == *best).collect();
    if winners.len() > 1 {
        return Err(FaspError::AmbiguousDecode(winners.iter().map(|&i| vocab[i].surface().to_string()).collect()));
    }
    Ok(vocab[winners[0]].clone())
}

/// One-shot [`Session::eval`].
pub fn eval(program: &Program, expr: Expr, seq: &[Token]) -> Result<Vec<Rational>, FaspError> {
    Session::new(program).eval(expr, seq)
}

/// One-shot [`Session::next_token`].
pub fn next_token(program: &Program, seq: &[Token]) -> Result<Token, FaspError> {
    Session::new(program).next_token(seq)
}
