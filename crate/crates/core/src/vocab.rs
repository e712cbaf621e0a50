//! Vocabularies mapping token surface forms to integer ids.
//!
//! The special tokens always take ids `0..6` in the order of
//! [`SPECIALS`]: `[CALL]`, `[SEP]`, `[RETURN]`, `<|startoftext|>`,
//! `<|endofprompt|>`, `<|endoftext|>`. Base words follow in first-seen
//! order. The file form is UTF-8 with one surface form per line, the id
//! being the zero-based line number.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::token::{Token, TokenError, TokenSeq, SPECIALS};

/// Errors raised while building, loading or applying a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    /// `build_vocab` was given no sequences.
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    /// A base token carries a special surface form.
    #[error("base token {0:?} collides with a special token")]
    Collision(String),
    /// A word of the input text is not in the vocabulary.
    #[error("unknown word {word:?} at position {position}")]
    UnknownWord { word: String, position: usize },
    /// An id is outside `0..len`.
    #[error("unknown token id {id} at position {position}")]
    UnknownId { id: u32, position: usize },
    /// The vocabulary file is malformed.
    #[error("bad vocabulary file at line {line}: {reason}")]
    BadFile { line: usize, reason: String },
    /// A word could not be turned into a token.
    #[error(transparent)]
    Token(#[from] TokenError),
}

/// A bijection between ids `0..len` and token surface forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    entries: Vec<Token>,
    index: HashMap<String, u32>,
}

impl Vocab {
    fn with_specials() -> Vocab {
        let mut vocab = Vocab { entries: Vec::new(), index: HashMap::new() };
        for special in SPECIALS {
            vocab.push(special);
        }
        vocab
    }

    fn push(&mut self, token: Token) {
        if !self.index.contains_key(token.surface()) {
            self.index.insert(token.surface().to_string(), self.entries.len() as u32);
            self.entries.push(token);
        }
    }

    /// Number of entries, specials included.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Always false: the specials are present in every vocabulary.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in id order.
    pub fn entries(&self) -> &[Token] {
        &self.entries
    }

    /// Id of a token, if present.
    pub fn id(&self, token: &Token) -> Option<u32> {
        self.index.get(token.surface()).copied()
    }

    /// Token with the given id, if present.
    pub fn token(&self, id: u32) -> Option<&Token> {
        self.entries.get(id as usize)
    }

    /// Maps tokens to ids, failing on the first unknown token.
    pub fn ids(&self, tokens: &[Token]) -> Result<Vec<u32>, VocabError> {
        tokens
            .iter()
            .enumerate()
            .map(|(position, t)| {
                self.id(t).ok_or_else(|| VocabError::UnknownWord { word: t.surface().to_string(), position })
            })
            .collect()
    }

    /// Maps ids back to tokens, failing on the first unknown id.
    pub fn tokens(&self, ids: &[u32]) -> Result<TokenSeq, VocabError> {
        ids.iter()
            .enumerate()
            .map(|(position, &id)| self.token(id).cloned().ok_or(VocabError::UnknownId { id, position }))
            .collect()
    }

    /// Parses whitespace-delimited text, requiring every word to be known.
    pub fn encode(&self, text: &str) -> Result<TokenSeq, VocabError> {
        text.split_whitespace()
            .enumerate()
            .map(|(position, word)| match self.index.get(word) {
                Some(&id) => Ok(self.entries[id as usize].clone()),
                None => Err(VocabError::UnknownWord { word: word.to_string(), position }),
            })
            .collect()
    }

    /// Renders known tokens joined by single spaces.
    pub fn decode(&self, tokens: &[Token]) -> Result<String, VocabError> {
        self.ids(tokens)?;
        Ok(crate::token::render(tokens))
    }

    /// Serializes to the one-surface-per-line file form.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for token in &self.entries {
            let _ = writeln!(out, "{}", token.surface());
        }
        out
    }

    /// Parses the file form, checking that the specials lead in order.
    pub fn from_file_str(text: &str) -> Result<Vocab, VocabError> {
        let mut vocab = Vocab { entries: Vec::new(), index: HashMap::new() };
        for (line, surface) in text.lines().enumerate() {
            let token = Token::parse(surface).map_err(|e| VocabError::BadFile { line, reason: e.to_string() })?;
            if line < SPECIALS.len() && token != SPECIALS[line] {
                return Err(VocabError::BadFile {
                    line,
                    reason: format!("expected {}, found {surface:?}", SPECIALS[line]),
                });
            }
            if line >= SPECIALS.len() && token.is_special() {
                return Err(VocabError::BadFile { line, reason: "special token out of place".into() });
            }
            if vocab.index.contains_key(surface) {
                return Err(VocabError::BadFile { line, reason: format!("duplicate entry {surface:?}") });
            }
            vocab.push(token);
        }
        if vocab.len() < SPECIALS.len() {
            return Err(VocabError::BadFile { line: vocab.len(), reason: "missing special tokens".into() });
        }
        Ok(vocab)
    }
}

/// Builds a vocabulary containing the specials followed by every distinct
/// base word of `corpus` in first-seen order.
pub fn build_vocab(corpus: &[TokenSeq]) -> Result<Vocab, VocabError> {
    if corpus.is_empty() {
        return Err(VocabError::EmptyCorpus);
    }
    let mut vocab = Vocab::with_specials();
    for seq in corpus {
        for token in seq {
            if let Token::Base(word) = token {
                if Token::special_from_surface(word).is_some() {
                    return Err(VocabError::Collision(word.to_string()));
                }
                vocab.push(token.clone());
            }
        }
    }
    Ok(vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::tokenize;
    use std::sync::Arc;

    fn seq(text: &str) -> TokenSeq {
        tokenize(text).unwrap()
    }

    #[test]
    fn specials_first_then_first_seen_order() {
        let vocab = build_vocab(&[seq("a"), seq("b a")]).unwrap();
        let surfaces: Vec<&str> = vocab.entries().iter().map(Token::surface).collect();
        assert_eq!(
            surfaces,
            ["[CALL]", "[SEP]", "[RETURN]", "<|startoftext|>", "<|endofprompt|>", "<|endoftext|>", "a", "b"]
        );
    }

    #[test]
    fn empty_corpus_and_collisions_are_rejected() {
        assert_eq!(build_vocab(&[]), Err(VocabError::EmptyCorpus));
        let forged = vec![Token::Base(Arc::from("[CALL]"))];
        assert_eq!(build_vocab(&[forged]), Err(VocabError::Collision("[CALL]".into())));
    }

    #[test]
    fn encode_decode_round_trip() {
        let vocab = build_vocab(&[seq("Answer: True False")]).unwrap();
        let tokens = vocab.encode("[SEP] Answer: False [RETURN]").unwrap();
        assert_eq!(tokens, seq("[SEP] Answer: False [RETURN]"));
        assert_eq!(vocab.decode(&tokens).unwrap(), "[SEP] Answer: False [RETURN]");
        assert!(vocab.encode("").unwrap().is_empty());
        assert_eq!(vocab.encode("Answer: Maybe"), Err(VocabError::UnknownWord { word: "Maybe".into(), position: 1 }));
    }

    #[test]
    fn file_form_round_trips() {
        let vocab = build_vocab(&[seq("x y z")]).unwrap();
        let text = vocab.to_file_string();
        assert_eq!(Vocab::from_file_str(&text).unwrap(), vocab);
        assert!(Vocab::from_file_str("[SEP]\n").is_err());
    }
}
