//! The autoregressive machine of a Turing machine and its state function.
//!
//! The machine's next token is the transition taken from the configuration
//! that its update history rebuilds on a blank tape. The state function
//! replaces a history by the embedding of that configuration.

use crate::config::{apply_updates, embed, Configuration, Move, UpdateToken};
use crate::machine::{SymbolId, TmSpec};
use crate::TuringError;

/// The blank tape with the head at 0 in the start state, where every
/// update history begins.
pub fn start_config(spec: &TmSpec) -> Configuration {
    Configuration::blank(spec.start())
}

fn check_updates(spec: &TmSpec, seq: &[UpdateToken]) -> Result<(), TuringError> {
    for t in seq {
        if t.state >= spec.states().len() || t.symbol >= spec.alphabet().len() || t.symbol == spec.blank() {
            return Err(TuringError::BadUpdate(format!("{t:?}")));
        }
    }
    Ok(())
}

/// The next update after `seq`: the transition from the configuration that
/// `seq` rebuilds.
pub fn am_next(spec: &TmSpec, seq: &[UpdateToken]) -> Result<UpdateToken, TuringError> {
    check_updates(spec, seq)?;
    let c = apply_updates(&start_config(spec), seq, spec.blank());
    Ok(spec.delta(c.state, c.read(spec.blank())))
}

/// The embedding of the configuration that `seq` rebuilds.
pub fn state_fn(spec: &TmSpec, seq: &[UpdateToken]) -> Result<Vec<UpdateToken>, TuringError> {
    check_updates(spec, seq)?;
    embed(&apply_updates(&start_config(spec), seq, spec.blank()))
}

/// Updates that write `input` left to right in the start state, leaving the
/// head just right of it.
pub fn encode_input(spec: &TmSpec, input: &[SymbolId]) -> Result<Vec<UpdateToken>, TuringError> {
    spec.check_input(input)?;
    Ok(input.iter().map(|&symbol| UpdateToken { state: spec.start(), symbol, dir: Move::Right }).collect())
}
