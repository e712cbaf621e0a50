//! Tokens of the extended alphabet and whitespace-level text conversion.

use std::cell::RefCell;
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// One element of the extended alphabet: an ordinary word or one of the
/// structural special tokens.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    /// An ordinary word. Never renders as a special surface form.
    Base(Arc<str>),
    /// `[CALL]`, opens a sub-computation.
    Call,
    /// `[SEP]`, separates thoughts from the answer.
    Sep,
    /// `[RETURN]`, closes a sub-computation and triggers the reduction.
    Return,
    /// `<|startoftext|>`, opens a prompt.
    StartOfText,
    /// `<|endofprompt|>`, closes a prompt.
    EndOfPrompt,
    /// `<|endoftext|>`, the end-of-sequence token that stops generation.
    EndOfText,
}

/// A token sequence. Documentation indexes positions from 1; code uses
/// ordinary zero-based slices.
pub type TokenSeq = Vec<Token>;

/// The special tokens in vocabulary order: they occupy ids `0..6`.
pub const SPECIALS: [Token; 6] =
    [Token::Call, Token::Sep, Token::Return, Token::StartOfText, Token::EndOfPrompt, Token::EndOfText];

/// Errors raised when turning text into tokens.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    /// The word is empty or contains whitespace.
    #[error("invalid word {0:?}: words must be non-empty and whitespace-free")]
    InvalidWord(String),
    /// A base symbol was requested with a special token's surface form.
    #[error("{0:?} is reserved for a special token")]
    Reserved(String),
}

thread_local! {
    static INTERNER: RefCell<HashSet<Arc<str>>> = RefCell::new(HashSet::new());
}

fn intern(word: &str) -> Arc<str> {
    INTERNER.with(|cell| {
        let mut set = cell.borrow_mut();
        if let Some(existing) = set.get(word) {
            return Arc::clone(existing);
        }
        let fresh: Arc<str> = Arc::from(word);
        set.insert(Arc::clone(&fresh));
        fresh
    })
}

impl Token {
    /// Surface form used in text and vocabulary files.
    pub fn surface(&self) -> &str {
        match self {
            Token::Base(word) => word,
            Token::Call => "[CALL]",
            Token::Sep => "[SEP]",
            Token::Return => "[RETURN]",
            Token::StartOfText => "<|startoftext|>",
            Token::EndOfPrompt => "<|endofprompt|>",
            Token::EndOfText => "<|endoftext|>",
        }
    }

    /// Looks up the special token with the given surface form.
    pub fn special_from_surface(surface: &str) -> Option<Token> {
        SPECIALS.iter().find(|t| t.surface() == surface).cloned()
    }

    /// Builds a base token, rejecting special surface forms.
    pub fn base(word: &str) -> Result<Token, TokenError> {
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(TokenError::InvalidWord(word.to_string()));
        }
        if Token::special_from_surface(word).is_some() {
            return Err(TokenError::Reserved(word.to_string()));
        }
        Ok(Token::Base(intern(word)))
    }

    /// Builds a base token from a word the caller knows to be valid.
    ///
    /// # Panics
    /// Panics if `word` is empty, contains whitespace or is a special
    /// surface form.
    pub fn word(word: &str) -> Token {
        match Token::base(word) {
            Ok(token) => token,
            Err(err) => panic!("{err}"),
        }
    }

    /// Parses one whitespace-free word, mapping special surfaces to their
    /// special kinds.
    pub fn parse(word: &str) -> Result<Token, TokenError> {
        match Token::special_from_surface(word) {
            Some(special) => Ok(special),
            None => Token::base(word),
        }
    }

    /// True for every kind except [`Token::Base`].
    pub fn is_special(&self) -> bool {
        !matches!(self, Token::Base(_))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.surface())
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Base(word) => write!(f, "{word:?}"),
            special => f.write_str(special.surface()),
        }
    }
}

/// Splits text on whitespace and parses every word.
pub fn tokenize(text: &str) -> Result<TokenSeq, TokenError> {
    text.split_whitespace().map(Token::parse).collect()
}

/// Renders tokens as their surface forms joined by single spaces.
pub fn render(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, token) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(token.surface());
    }
    out
}

/// Collapses every whitespace run to a single space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Position of the last occurrence of `target` in `tokens[..end]`.
pub fn rposition(tokens: &[Token], end: usize, target: &Token) -> Option<usize> {
    tokens[..end].iter().rposition(|t| t == target)
}
