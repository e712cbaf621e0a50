//! Token accumulation for the trace emitters.

use pencil_core::{Token, TokenSeq};

/// Appends whitespace-delimited words and special tokens to a sequence.
#[derive(Debug, Default)]
pub(crate) struct Emitter {
    pub(crate) out: TokenSeq,
}

impl Emitter {
    pub(crate) fn new() -> Self {
        Emitter::default()
    }

    /// Appends every word of `text`, mapping special surfaces to specials.
    pub(crate) fn words(&mut self, text: &str) {
        for word in text.split_whitespace() {
            self.out.push(Token::parse(word).expect("emitters only write well-formed words"));
        }
    }

    pub(crate) fn token(&mut self, token: Token) {
        self.out.push(token);
    }

    pub(crate) fn extend(&mut self, tokens: &[Token]) {
        self.out.extend_from_slice(tokens);
    }
}
