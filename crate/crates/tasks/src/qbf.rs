//! Prenex quantified Boolean formulas and their expansion traces.
//!
//! Each prefix level opens `[CALL] Question: prefix_from <q> <v>` and tries
//! `<v> = False` before `<v> = True`, stopping early when an existential
//! child is true or a universal child is false. Below the last quantifier
//! an `evaluate` call checks the clauses in order and stops at the first
//! false one.

use std::fmt;

use pencil_core::{Token, TokenSeq};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::emit::Emitter;
use crate::sat::{write_clause, MAX_BRUTE_FORCE_VARS};
use crate::{TaskError, Trace};

/// A quantifier of the prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quant {
    /// `∀`: every value must satisfy the rest.
    Forall,
    /// `∃`: some value must satisfy the rest.
    Exists,
}

impl Quant {
    /// The printed symbol.
    pub fn symbol(self) -> &'static str {
        match self {
            Quant::Forall => "∀",
            Quant::Exists => "∃",
        }
    }

    fn from_symbol(s: &str) -> Option<Quant> {
        match s {
            "∀" => Some(Quant::Forall),
            "∃" => Some(Quant::Exists),
            _ => None,
        }
    }
}

/// A formula `Q1 v1 … Qn vn : matrix` with a CNF matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QbfFormula {
    /// Quantified variables, outermost first.
    pub prefix: Vec<(Quant, u32)>,
    /// Clauses of signed variable indices.
    pub matrix: Vec<Vec<i32>>,
}

/// Shape of the random matrix drawn by [`gen_qbf_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QbfConfig {
    /// Clauses per variable.
    pub clause_ratio: usize,
    /// Smallest clause width.
    pub min_width: usize,
    /// Largest clause width.
    pub max_width: usize,
    /// Probability that a prefix variable is existential.
    pub exists_prob: f64,
}

impl Default for QbfConfig {
    fn default() -> Self {
        QbfConfig { clause_ratio: 2, min_width: 2, max_width: 3, exists_prob: 0.5 }
    }
}

impl fmt::Display for QbfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, v) in &self.prefix {
            write!(f, "{} {v} ", q.symbol())?;
        }
        f.write_str(":")?;
        for (i, clause) in self.matrix.iter().enumerate() {
            write!(f, " #{} ", i + 1)?;
            write_clause(f, clause)?;
        }
        Ok(())
    }
}

impl QbfFormula {
    /// Builds a formula, checking that every variable is quantified once
    /// and that clauses only mention quantified variables.
    pub fn new(prefix: Vec<(Quant, u32)>, matrix: Vec<Vec<i32>>) -> Result<Self, TaskError> {
        let mut seen = std::collections::HashSet::new();
        for &(_, v) in &prefix {
            if v == 0 || !seen.insert(v) {
                return Err(TaskError::Parse(format!("variable {v} is zero or quantified twice")));
            }
        }
        for &lit in matrix.iter().flatten() {
            if !seen.contains(&lit.unsigned_abs()) {
                return Err(TaskError::Parse(format!("literal {lit} is not quantified")));
            }
        }
        Ok(QbfFormula { prefix, matrix })
    }

    /// Number of quantified variables.
    pub fn n_vars(&self) -> usize {
        self.prefix.len()
    }

    /// Parses the printed form, with or without prompt delimiters.
    pub fn parse(text: &str) -> Result<Self, TaskError> {
        let words: Vec<&str> =
            text.split_whitespace().filter(|w| *w != "<|startoftext|>" && *w != "<|endofprompt|>").collect();
        let colon = words
            .iter()
            .position(|w| *w == ":")
            .ok_or_else(|| TaskError::Parse("missing ':' after the prefix".into()))?;
        if colon % 2 != 0 {
            return Err(TaskError::Parse("prefix must alternate quantifiers and variables".into()));
        }
        let prefix = words[..colon]
            .chunks(2)
            .map(|pair| {
                let q = Quant::from_symbol(pair[0])
                    .ok_or_else(|| TaskError::Parse(format!("unknown quantifier {:?}", pair[0])))?;
                let v = pair[1].parse().map_err(|_| TaskError::Parse(format!("bad variable {:?}", pair[1])))?;
                Ok((q, v))
            })
            .collect::<Result<Vec<_>, TaskError>>()?;
        let mut matrix = Vec::new();
        let mut rest = words[colon + 1..].iter();
        while let Some(label) = rest.next() {
            if *label != format!("#{}", matrix.len() + 1) || rest.next() != Some(&"(") {
                return Err(TaskError::Parse(format!("expected clause #{}", matrix.len() + 1)));
            }
            let mut clause = Vec::new();
            let mut negate = false;
            loop {
                match rest.next().copied() {
                    Some(")") => break,
                    Some("∨") => {}
                    Some("¬") => negate = true,
                    Some(num) => {
                        let v: i32 = num.parse().map_err(|_| TaskError::Parse(format!("unexpected {num:?}")))?;
                        clause.push(if negate { -v } else { v });
                        negate = false;
                    }
                    None => return Err(TaskError::Parse("unclosed clause".into())),
                }
            }
            matrix.push(clause);
        }
        QbfFormula::new(prefix, matrix)
    }

    /// The prompt `<|startoftext|> prefix : #1 ( … ) … <|endofprompt|>`.
    pub fn prompt(&self) -> TokenSeq {
        let mut e = Emitter::new();
        e.token(Token::StartOfText);
        e.words(&self.to_string());
        e.token(Token::EndOfPrompt);
        e.out
    }

    fn clause_holds(clause: &[i32], assignment: &[bool]) -> bool {
        clause.iter().any(|&l| assignment[l.unsigned_abs() as usize] == (l > 0))
    }

    fn max_var(&self) -> usize {
        self.prefix.iter().map(|&(_, v)| v as usize).max().unwrap_or(0)
    }
}

/// Draws a formula with the default shape: `2 n` clauses of width 2 or 3.
pub fn gen_qbf(n: usize, seed: u64) -> Result<QbfFormula, TaskError> {
    gen_qbf_with(n, seed, QbfConfig::default())
}

/// Draws a formula over variables `1..=n` in a shuffled prefix. Clause
/// variables are drawn with replacement, so repeats and tautologies occur.
pub fn gen_qbf_with(n: usize, seed: u64, config: QbfConfig) -> Result<QbfFormula, TaskError> {
    if n < 2 {
        return Err(TaskError::TooSmall { what: "QBF variable count", min: 2, got: n });
    }
    if config.min_width == 0 || config.min_width > config.max_width {
        return Err(TaskError::Parse("clause widths must satisfy 1 <= min <= max".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vars: Vec<u32> = (1..=n as u32).collect();
    vars.shuffle(&mut rng);
    let prefix = vars
        .into_iter()
        .map(|v| (if rng.gen_bool(config.exists_prob) { Quant::Exists } else { Quant::Forall }, v))
        .collect();
    let matrix = (0..config.clause_ratio * n)
        .map(|_| {
            let width = rng.gen_range(config.min_width..=config.max_width);
            (0..width)
                .map(|_| {
                    let v = rng.gen_range(1..=n as i32);
                    if rng.gen_bool(0.5) {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect();
    QbfFormula::new(prefix, matrix)
}

/// Evaluates the formula by full expansion of the prefix.
pub fn brute_force_qbf(q: &QbfFormula) -> Result<bool, TaskError> {
    if q.n_vars() > MAX_BRUTE_FORCE_VARS {
        return Err(TaskError::TooLarge {
            what: "brute-force variable count",
            max: MAX_BRUTE_FORCE_VARS,
            got: q.n_vars(),
        });
    }
    fn go(q: &QbfFormula, level: usize, assignment: &mut Vec<bool>) -> bool {
        let Some(&(quant, v)) = q.prefix.get(level) else {
            return q.matrix.iter().all(|c| QbfFormula::clause_holds(c, assignment));
        };
        let mut results = [false, true].into_iter().map(|value| {
            assignment[v as usize] = value;
            go(q, level + 1, assignment)
        });
        match quant {
            Quant::Exists => results.any(|r| r),
            Quant::Forall => results.all(|r| r),
        }
    }
    Ok(go(q, 0, &mut vec![false; q.max_var() + 1]))
}

fn bool_word(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

fn close(e: &mut Emitter, answer: bool) {
    e.token(Token::Sep);
    e.words("Answer:");
    e.words(bool_word(answer));
    e.token(Token::Return);
}

fn evaluate(q: &QbfFormula, assignment: &[bool], e: &mut Emitter) -> bool {
    e.token(Token::Call);
    e.words("Question: evaluate");
    let mut vars: Vec<u32> = q.prefix.iter().map(|&(_, v)| v).collect();
    vars.sort_unstable();
    for v in vars {
        e.words(&format!("{v} = {}", bool_word(assignment[v as usize])));
    }
    let mut answer = true;
    for (k, clause) in q.matrix.iter().enumerate() {
        let mut text = format!("Check #{k} ");
        write_clause(&mut text, clause).expect("writing to a String cannot fail");
        let holds = QbfFormula::clause_holds(clause, assignment);
        e.words(&text);
        e.words(bool_word(holds));
        if !holds {
            answer = false;
            break;
        }
    }
    if answer {
        e.words("Formula = True");
    }
    close(e, answer);
    answer
}

fn expand(q: &QbfFormula, level: usize, assignment: &mut Vec<bool>, e: &mut Emitter) -> bool {
    let Some(&(quant, v)) = q.prefix.get(level) else {
        return evaluate(q, assignment, e);
    };
    e.token(Token::Call);
    e.words(&format!("Question: prefix_from {} {v}", quant.symbol()));
    let decisive = quant == Quant::Exists;
    let mut answer = !decisive;
    for value in [false, true] {
        e.words(&format!("Try {v} = {}", bool_word(value)));
        assignment[v as usize] = value;
        if expand(q, level + 1, assignment, e) == decisive {
            answer = decisive;
            break;
        }
    }
    close(e, answer);
    answer
}

/// Evaluates `q` by recursive expansion and returns the answer with its
/// scaffolded trace.
pub fn qbf_trace(q: &QbfFormula) -> Trace<bool> {
    let prompt = q.prompt();
    let mut e = Emitter::new();
    e.extend(&prompt);
    let answer = expand(q, 0, &mut vec![false; q.max_var() + 1], &mut e);
    e.token(Token::EndOfText);
    Trace { answer, prompt, scaffold: e.out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pencil_core::render;

    #[test]
    fn existential_short_circuits() {
        let q = QbfFormula::new(vec![(Quant::Exists, 1)], vec![vec![-1]]).unwrap();
        let t = qbf_trace(&q);
        assert!(t.answer);
        let text = render(t.response());
        assert!(text.contains("Try 1 = False"));
        assert!(!text.contains("Try 1 = True"));
    }

    #[test]
    fn universal_contradiction_fails_at_the_first_check() {
        let q = QbfFormula::new(vec![(Quant::Forall, 1)], vec![vec![1], vec![-1]]).unwrap();
        let t = qbf_trace(&q);
        assert!(!t.answer);
        assert_eq!(
            render(t.response()),
            "[CALL] Question: prefix_from ∀ 1 Try 1 = False [CALL] Question: evaluate 1 = False \
             Check #0 ( 1 ) False [SEP] Answer: False [RETURN] [SEP] Answer: False [RETURN] <|endoftext|>"
        );
        let single = QbfFormula::new(vec![(Quant::Forall, 1)], vec![vec![1]]).unwrap();
        assert!(!brute_force_qbf(&single).unwrap());
    }

    #[test]
    fn generator_shape_and_round_trip() {
        let q = gen_qbf(4, 11).unwrap();
        let mut vars: Vec<u32> = q.prefix.iter().map(|p| p.1).collect();
        vars.sort_unstable();
        assert_eq!(vars, [1, 2, 3, 4]);
        assert_eq!(q.matrix.len(), 8);
        assert!(q.matrix.iter().all(|c| (2..=3).contains(&c.len())));
        assert_eq!(q, gen_qbf(4, 11).unwrap());
        assert_eq!(QbfFormula::parse(&render(&q.prompt())).unwrap(), q);
        assert!(gen_qbf(1, 0).is_err());
    }
}
