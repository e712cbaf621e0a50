//! Ready-made machines and the random machine distribution used in tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Move, UpdateToken};
use crate::machine::{SymbolId, TmSpec};

fn build(alphabet: &[&str], states: &[&str], rows: &[(&str, &str, &str, &str, Move)], accept: &[usize]) -> TmSpec {
    let alphabet: Vec<String> = alphabet.iter().map(|s| s.to_string()).collect();
    let states: Vec<String> = states.iter().map(|s| s.to_string()).collect();
    let sym = |name: &str| alphabet.iter().position(|s| s == name).expect("known symbol");
    let st = |name: &str| states.iter().position(|s| s == name).expect("known state");
    let mut delta = vec![UpdateToken { state: 0, symbol: 1, dir: Move::Stay }; states.len() * alphabet.len()];
    for &(q, a, q2, a2, dir) in rows {
        delta[st(q) * alphabet.len() + sym(a)] = UpdateToken { state: st(q2), symbol: sym(a2), dir };
    }
    TmSpec::new(alphabet, 0, states, 0, delta, accept, &[]).expect("sample machines are valid")
}

/// A two-state machine over `_ 1` that appends one `1` to its input and
/// accepts: after one step the head sits one cell past the new mark.
pub fn unary_increment() -> TmSpec {
    build(
        &["_", "1"],
        &["scan", "done"],
        &[
            ("scan", "_", "done", "1", Move::Right),
            ("scan", "1", "scan", "1", Move::Right),
            ("done", "_", "done", "1", Move::Stay),
            ("done", "1", "done", "1", Move::Stay),
        ],
        &[1],
    )
}

/// A binary counter over `_ 0 1 E`. It marks the cell right of its input
/// with `E`, then repeatedly adds one to the input read as a binary number
/// with the low bit on the right, sweeping back to the marker after every
/// increment. It accepts when the carry runs off the left end. On `n` zeros
/// it takes roughly `2^(n+2)` steps within `n + 2` cells.
pub fn binary_counter() -> TmSpec {
    build(
        &["_", "0", "1", "E"],
        &["start", "carry", "back", "halt"],
        &[
            ("start", "_", "carry", "E", Move::Left),
            ("start", "0", "carry", "E", Move::Left),
            ("start", "1", "carry", "E", Move::Left),
            ("start", "E", "carry", "E", Move::Left),
            ("carry", "1", "carry", "0", Move::Left),
            ("carry", "0", "back", "1", Move::Right),
            ("carry", "_", "halt", "E", Move::Stay),
            ("carry", "E", "carry", "E", Move::Left),
            ("back", "0", "back", "0", Move::Right),
            ("back", "1", "back", "1", Move::Right),
            ("back", "E", "carry", "E", Move::Left),
            ("back", "_", "back", "E", Move::Stay),
            ("halt", "_", "halt", "E", Move::Stay),
            ("halt", "0", "halt", "0", Move::Stay),
            ("halt", "1", "halt", "1", Move::Stay),
            ("halt", "E", "halt", "E", Move::Stay),
        ],
        &[3],
    )
}

/// Draws a machine with 2 to 4 states and 2 or 3 symbols (the blank `_`
/// plus `0`, then `1`), a uniform transition table and start state `q0`.
/// With probability one half each, one state accepts and another rejects.
pub fn random_tm(seed: u64) -> TmSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_states = rng.gen_range(2..=4);
    let n_symbols = rng.gen_range(2..=3);
    let alphabet: Vec<String> = ["_", "0", "1"][..n_symbols].iter().map(|s| s.to_string()).collect();
    let states: Vec<String> = (0..n_states).map(|q| format!("q{q}")).collect();
    let delta = (0..n_states * n_symbols)
        .map(|_| UpdateToken {
            state: rng.gen_range(0..n_states),
            symbol: rng.gen_range(1..n_symbols),
            dir: Move::ALL[rng.gen_range(0..3)],
        })
        .collect();
    let accept: Vec<usize> = if rng.gen_bool(0.5) { vec![rng.gen_range(0..n_states)] } else { Vec::new() };
    let reject: Vec<usize> = if rng.gen_bool(0.5) {
        let candidates: Vec<usize> = (0..n_states).filter(|q| !accept.contains(q)).collect();
        vec![candidates[rng.gen_range(0..candidates.len())]]
    } else {
        Vec::new()
    };
    TmSpec::new(alphabet, 0, states, 0, delta, &accept, &reject).expect("random machines are valid")
}

/// Draws an input of length `0..=max_len` over the non-blank symbols.
pub fn random_input(spec: &TmSpec, max_len: usize, seed: u64) -> Vec<SymbolId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.gen_range(0..=max_len);
    let symbols: Vec<SymbolId> = (0..spec.alphabet().len()).filter(|&a| a != spec.blank()).collect();
    (0..len).map(|_| symbols[rng.gen_range(0..symbols.len())]).collect()
}
