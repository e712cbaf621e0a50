//! Single-tape Turing machines, their text format and direct simulation.
//!
//! A machine file lists the alphabet, the blank, the states, the start state,
//! the halting sets and one transition row per (state, symbol) pair:
//!
//! ```text
//! # comments run to the end of the line
//! alphabet: _ 1
//! blank: _
//! states: scan done
//! start: scan
//! accept: done
//! reject:
//! scan 1 -> scan 1 +1
//! scan _ -> done 1 +1
//! done 1 -> done 1 0
//! done _ -> done 1 0
//! ```
//!
//! Moves are written `-1`, `0` or `+1`. Names may not contain `/`,
//! whitespace or `#`, and may not be a special token surface.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use pencil_core::Token;

use crate::config::{Configuration, Move, UpdateToken};
use crate::TuringError;

/// Index into [`TmSpec::states`].
pub type StateId = usize;
/// Index into [`TmSpec::alphabet`].
pub type SymbolId = usize;

/// A deterministic single-tape Turing machine with a total transition table
/// that never writes the blank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmSpec {
    alphabet: Vec<String>,
    blank: SymbolId,
    states: Vec<String>,
    start: StateId,
    delta: Vec<UpdateToken>,
    accept: Vec<bool>,
    reject: Vec<bool>,
}

fn check_name(kind: &str, name: &str) -> Result<(), TuringError> {
    let bad = name.is_empty()
        || name.contains(['/', '#'])
        || name.chars().any(char::is_whitespace)
        || Token::special_from_surface(name).is_some();
    if bad {
        return Err(TuringError::BadSpec(format!("invalid {kind} name {name:?}")));
    }
    Ok(())
}

fn check_unique(kind: &str, names: &[String]) -> Result<(), TuringError> {
    for name in names {
        check_name(kind, name)?;
    }
    let mut sorted: Vec<&String> = names.iter().collect();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(TuringError::BadSpec(format!("duplicate {kind} name {:?}", w[0])));
    }
    Ok(())
}

impl TmSpec {
    /// Builds a machine from its parts.
    ///
    /// `delta[q * alphabet.len() + a]` is the transition taken in state `q`
    /// reading symbol `a`. Fails when the table has the wrong size, refers
    /// to unknown states or symbols, writes the blank, or when a state is
    /// both accepting and rejecting.
    pub fn new(
        alphabet: Vec<String>,
        blank: SymbolId,
        states: Vec<String>,
        start: StateId,
        delta: Vec<UpdateToken>,
        accept: &[StateId],
        reject: &[StateId],
    ) -> Result<Self, TuringError> {
        check_unique("symbol", &alphabet)?;
        check_unique("state", &states)?;
        if blank >= alphabet.len() {
            return Err(TuringError::BadSpec("blank is not in the alphabet".into()));
        }
        if alphabet.len() < 2 {
            return Err(TuringError::BadSpec("the alphabet needs a non-blank symbol".into()));
        }
        if start >= states.len() {
            return Err(TuringError::BadSpec("start state is unknown".into()));
        }
        if delta.len() != states.len() * alphabet.len() {
            return Err(TuringError::BadSpec(format!(
                "transition table has {} rows, expected {}",
                delta.len(),
                states.len() * alphabet.len()
            )));
        }
        for t in &delta {
            if t.state >= states.len() || t.symbol >= alphabet.len() {
                return Err(TuringError::BadSpec("transition refers to an unknown state or symbol".into()));
            }
            if t.symbol == blank {
                return Err(TuringError::BadSpec("transitions may not write the blank".into()));
            }
        }
        let mut accept_flags = vec![false; states.len()];
        let mut reject_flags = vec![false; states.len()];
        for (flags, set) in [(&mut accept_flags, accept), (&mut reject_flags, reject)] {
            for &q in set {
                if q >= states.len() {
                    return Err(TuringError::BadSpec("halting state is unknown".into()));
                }
                flags[q] = true;
            }
        }
        if accept_flags.iter().zip(&reject_flags).any(|(a, r)| *a && *r) {
            return Err(TuringError::BadSpec("a state is both accepting and rejecting".into()));
        }
        Ok(TmSpec { alphabet, blank, states, start, delta, accept: accept_flags, reject: reject_flags })
    }

    /// Symbol names, blank included.
    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    /// The blank symbol.
    pub fn blank(&self) -> SymbolId {
        self.blank
    }

    /// State names.
    pub fn states(&self) -> &[String] {
        &self.states
    }

    /// The start state.
    pub fn start(&self) -> StateId {
        self.start
    }

    /// The transition taken in state `q` reading `a`.
    pub fn delta(&self, q: StateId, a: SymbolId) -> UpdateToken {
        self.delta[q * self.alphabet.len() + a]
    }

    /// True when `q` is an accepting state.
    pub fn is_accept(&self, q: StateId) -> bool {
        self.accept[q]
    }

    /// True when `q` is a rejecting state.
    pub fn is_reject(&self, q: StateId) -> bool {
        self.reject[q]
    }

    /// True when `q` is accepting or rejecting.
    pub fn is_halting(&self, q: StateId) -> bool {
        self.accept[q] || self.reject[q]
    }

    /// Looks up a symbol by name.
    pub fn symbol_id(&self, name: &str) -> Option<SymbolId> {
        self.alphabet.iter().position(|s| s == name)
    }

    /// Looks up a state by name.
    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    /// Converts whitespace-separated symbol names to an input string,
    /// rejecting unknown names and the blank.
    pub fn parse_input(&self, text: &str) -> Result<Vec<SymbolId>, TuringError> {
        text.split_whitespace()
            .map(|w| match self.symbol_id(w) {
                Some(a) if a == self.blank => Err(TuringError::BlankInInput),
                Some(a) => Ok(a),
                None => Err(TuringError::UnknownSymbol(w.to_string())),
            })
            .collect()
    }

    /// Checks that an input string only holds known non-blank symbols.
    pub fn check_input(&self, input: &[SymbolId]) -> Result<(), TuringError> {
        for &a in input {
            if a >= self.alphabet.len() {
                return Err(TuringError::UnknownSymbol(a.to_string()));
            }
            if a == self.blank {
                return Err(TuringError::BlankInInput);
            }
        }
        Ok(())
    }

    /// Parses the text format described in the module documentation.
    pub fn parse(text: &str) -> Result<Self, TuringError> {
        let err = |line: usize, reason: String| TuringError::Parse { line, reason };
        let mut headers: BTreeMap<&str, (usize, Vec<&str>)> = BTreeMap::new();
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((key, rest)) = line.split_once(':') {
                let key = key.trim();
                if !["alphabet", "blank", "states", "start", "accept", "reject"].contains(&key) {
                    return Err(err(line_no, format!("unknown header {key:?}")));
                }
                if headers.insert(key, (line_no, rest.split_whitespace().collect())).is_some() {
                    return Err(err(line_no, format!("header {key:?} given twice")));
                }
            } else {
                rows.push((line_no, line));
            }
        }
        let header = |key: &str| headers.get(key).cloned().ok_or_else(|| err(0, format!("missing header {key:?}")));
        let single = |key: &str| -> Result<(usize, &str), TuringError> {
            let (line, words) = header(key)?;
            match words.as_slice() {
                [w] => Ok((line, *w)),
                _ => Err(err(line, format!("{key:?} takes exactly one name"))),
            }
        };
        let alphabet: Vec<String> = header("alphabet")?.1.iter().map(|s| s.to_string()).collect();
        let states: Vec<String> = header("states")?.1.iter().map(|s| s.to_string()).collect();
        let find = |names: &[String], w: &str, line: usize, kind: &str| {
            names.iter().position(|n| n == w).ok_or_else(|| err(line, format!("unknown {kind} {w:?}")))
        };
        let (line, w) = single("blank")?;
        let blank = find(&alphabet, w, line, "symbol")?;
        let (line, w) = single("start")?;
        let start = find(&states, w, line, "state")?;
        let set = |key: &str| -> Result<Vec<StateId>, TuringError> {
            match headers.get(key) {
                None => Ok(Vec::new()),
                Some((line, words)) => words.iter().map(|w| find(&states, w, *line, "state")).collect(),
            }
        };
        let accept = set("accept")?;
        let reject = set("reject")?;
        let mut table: Vec<Option<UpdateToken>> = vec![None; states.len() * alphabet.len()];
        for (line, row) in rows {
            let words: Vec<&str> = row.split_whitespace().collect();
            let [q, a, "->", q2, a2, d] = words.as_slice() else {
                return Err(err(line, "expected `q a -> q' a' d`".into()));
            };
            let q = find(&states, q, line, "state")?;
            let a = find(&alphabet, a, line, "symbol")?;
            let next = UpdateToken {
                state: find(&states, q2, line, "state")?,
                symbol: find(&alphabet, a2, line, "symbol")?,
                dir: Move::parse(d).ok_or_else(|| err(line, format!("bad move {d:?}")))?,
            };
            let slot = &mut table[q * alphabet.len() + a];
            if slot.is_some() {
                return Err(err(line, "transition given twice".into()));
            }
            *slot = Some(next);
        }
        let mut delta = Vec::with_capacity(table.len());
        for (i, t) in table.into_iter().enumerate() {
            let (q, a) = (i / alphabet.len(), i % alphabet.len());
            delta.push(t.ok_or_else(|| err(0, format!("missing transition for {} {}", states[q], alphabet[a])))?);
        }
        TmSpec::new(alphabet, blank, states, start, delta, &accept, &reject)
    }

    /// Writes the machine in the text format accepted by [`TmSpec::parse`].
    pub fn to_file_string(&self) -> String {
        let names = |flags: &[bool]| -> String {
            let picked: Vec<&str> =
                flags.iter().enumerate().filter(|(_, f)| **f).map(|(q, _)| self.states[q].as_str()).collect();
            picked.join(" ")
        };
        let mut out = String::new();
        let _ = writeln!(out, "alphabet: {}", self.alphabet.join(" "));
        let _ = writeln!(out, "blank: {}", self.alphabet[self.blank]);
        let _ = writeln!(out, "states: {}", self.states.join(" "));
        let _ = writeln!(out, "start: {}", self.states[self.start]);
        let _ = writeln!(out, "accept: {}", names(&self.accept));
        let _ = writeln!(out, "reject: {}", names(&self.reject));
        for q in 0..self.states.len() {
            for a in 0..self.alphabet.len() {
                let t = self.delta(q, a);
                let _ = writeln!(
                    out,
                    "{} {} -> {} {} {}",
                    self.states[q], self.alphabet[a], self.states[t.state], self.alphabet[t.symbol], t.dir
                );
            }
        }
        out
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// The machine entered an accepting state.
    Accept,
    /// The machine entered a rejecting state.
    Reject,
    /// The step cap was reached first.
    Timeout,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
            Verdict::Timeout => "timeout",
        })
    }
}

/// Outcome of a direct simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TmRun {
    /// How the run ended.
    pub verdict: Verdict,
    /// Steps taken, at most the step cap.
    pub steps: usize,
    /// Widest span of written cells and head positions seen, counted in cells.
    pub extent: usize,
    /// Longest state embedding over the visited configurations, the
    /// space measure that bounds the PENCIL context.
    pub state_space: usize,
}

/// The configuration before the first step: the input on cells
/// `0..input.len()`, the head just right of it, in the start state.
pub fn initial_config(spec: &TmSpec, input: &[SymbolId]) -> Result<Configuration, TuringError> {
    spec.check_input(input)?;
    let tape = input.iter().enumerate().map(|(i, &a)| (i as i64, a)).collect();
    Ok(Configuration { state: spec.start(), tape, head: input.len() as i64 })
}

/// Performs one transition in place and returns the update it applied.
pub fn step(spec: &TmSpec, c: &mut Configuration) -> UpdateToken {
    let t = spec.delta(c.state, c.read(spec.blank()));
    c.apply(t, spec.blank());
    t
}

fn span(c: &Configuration) -> (i64, i64) {
    match c.bounds() {
        Some((lo, hi)) => (lo.min(c.head), hi.max(c.head)),
        None => (c.head, c.head),
    }
}

/// Runs the machine on `input` for at most `step_cap` steps.
///
/// The machine halts right after a step that enters an accepting or
/// rejecting state, so a halting start state still takes one step.
pub fn tm_run(spec: &TmSpec, input: &[SymbolId], step_cap: usize) -> Result<TmRun, TuringError> {
    if step_cap == 0 {
        return Err(TuringError::ZeroCap);
    }
    let mut c = initial_config(spec, input)?;
    let (mut lo, mut hi) = span(&c);
    let mut state_space = c.embed_len();
    let mut steps = 0;
    let verdict = loop {
        let t = step(spec, &mut c);
        steps += 1;
        let (l, h) = span(&c);
        lo = lo.min(l);
        hi = hi.max(h);
        state_space = state_space.max(c.embed_len());
        if spec.is_accept(t.state) {
            break Verdict::Accept;
        }
        if spec.is_reject(t.state) {
            break Verdict::Reject;
        }
        if steps == step_cap {
            break Verdict::Timeout;
        }
    };
    Ok(TmRun { verdict, steps, extent: (hi - lo + 1) as usize, state_space })
}
