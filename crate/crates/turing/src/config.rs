//! Configurations, update tokens and the configuration embedding.

use std::collections::BTreeMap;
use std::fmt;

use crate::machine::{StateId, SymbolId};
use crate::TuringError;

/// A head movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    /// One cell to the left.
    Left,
    /// No movement.
    Stay,
    /// One cell to the right.
    Right,
}

impl Move {
    /// All moves, left to right.
    pub const ALL: [Move; 3] = [Move::Left, Move::Stay, Move::Right];

    /// The signed offset `-1`, `0` or `+1`.
    pub fn offset(self) -> i64 {
        match self {
            Move::Left => -1,
            Move::Stay => 0,
            Move::Right => 1,
        }
    }

    /// Parses `-1`, `0` or `+1`.
    pub fn parse(text: &str) -> Option<Move> {
        match text {
            "-1" => Some(Move::Left),
            "0" => Some(Move::Stay),
            "+1" => Some(Move::Right),
            _ => None,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Move::Left => "-1",
            Move::Stay => "0",
            Move::Right => "+1",
        })
    }
}

/// One step of a machine: enter `state`, write `symbol` under the head,
/// then move by `dir`. The symbol is never the blank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UpdateToken {
    /// The state entered.
    pub state: StateId,
    /// The symbol written.
    pub symbol: SymbolId,
    /// The head movement.
    pub dir: Move,
}

/// A machine snapshot: control state, the non-blank tape cells and the head.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    /// Control state.
    pub state: StateId,
    /// Non-blank cells by position. Unmapped cells read the blank.
    pub tape: BTreeMap<i64, SymbolId>,
    /// Head position.
    pub head: i64,
}

impl Configuration {
    /// The all-blank tape with the head at 0.
    pub fn blank(state: StateId) -> Self {
        Configuration { state, tape: BTreeMap::new(), head: 0 }
    }

    /// The symbol under the head.
    pub fn read(&self, blank: SymbolId) -> SymbolId {
        self.tape.get(&self.head).copied().unwrap_or(blank)
    }

    /// Applies one update: write, move, change state. Writing `blank`
    /// clears the cell.
    pub fn apply(&mut self, t: UpdateToken, blank: SymbolId) {
        if t.symbol == blank {
            self.tape.remove(&self.head);
        } else {
            self.tape.insert(self.head, t.symbol);
        }
        self.head += t.dir.offset();
        self.state = t.state;
    }

    /// Leftmost and rightmost non-blank positions, if any.
    pub fn bounds(&self) -> Option<(i64, i64)> {
        let lo = *self.tape.keys().next()?;
        let hi = *self.tape.keys().next_back()?;
        Some((lo, hi))
    }

    /// The translate whose leftmost non-blank cell sits at 0. An all-blank
    /// configuration moves its head to 0.
    pub fn canonical(&self) -> Configuration {
        let shift = match self.bounds() {
            Some((lo, _)) => lo,
            None => self.head,
        };
        Configuration {
            state: self.state,
            tape: self.tape.iter().map(|(&p, &a)| (p - shift, a)).collect(),
            head: self.head - shift,
        }
    }

    /// True when the two configurations differ only by a shift of the tape
    /// and head.
    pub fn equivalent(&self, other: &Configuration) -> bool {
        self.canonical() == other.canonical()
    }

    /// Length of [`embed`] without building it, or 0 when the tape is
    /// blank. Assumes the head lies within one cell of the written span.
    pub fn embed_len(&self) -> usize {
        match self.bounds() {
            None => 0,
            Some((lo, hi)) => ((hi - lo) + (hi - self.head - 1).max(0) + 1) as usize,
        }
    }
}

/// Folds `seq` into `c` from left to right.
pub fn apply_updates(c: &Configuration, seq: &[UpdateToken], blank: SymbolId) -> Configuration {
    let mut out = c.clone();
    for &t in seq {
        out.apply(t, blank);
    }
    out
}

/// Serializes `c` as updates that rebuild it from a blank tape: a sweep that
/// writes every cell from the leftmost to the rightmost non-blank one, then
/// a walk back that rewrites cells until the head is in place.
///
/// An all-blank configuration embeds as the empty sequence. Fails when the
/// head is more than one cell outside the written span or when a blank cell
/// lies inside it.
pub fn embed(c: &Configuration) -> Result<Vec<UpdateToken>, TuringError> {
    let Some((lo, hi)) = c.bounds() else {
        return Ok(Vec::new());
    };
    if c.head < lo - 1 || c.head > hi + 1 {
        return Err(TuringError::HeadOutOfRange { head: c.head, min: lo, max: hi });
    }
    let n = c.embed_len();
    let width = (hi - lo) as usize;
    let mut out = Vec::with_capacity(n);
    let mut pos = lo;
    for i in 1..=n {
        let dir = if i <= width || (i == width + 1 && c.head == hi + 1) {
            Move::Right
        } else if i == width + 1 && c.head == hi {
            Move::Stay
        } else {
            Move::Left
        };
        let symbol = *c.tape.get(&pos).ok_or(TuringError::GapInTape(pos))?;
        out.push(UpdateToken { state: c.state, symbol, dir });
        pos += dir.offset();
    }
    Ok(out)
}
