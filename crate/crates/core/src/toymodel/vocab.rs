use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::Token;

pub const PAD: Token = 0;
pub const EOS: Token = 1;
const PAD_CHAR: char = '\u{0}';
const EOS_CHAR: char = '\u{4}';

/// Character-level vocabulary. Index 0 is padding, index 1 end-of-sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    symbols: Vec<char>,
    index: HashMap<char, Token>,
}

impl Vocab {
    /// Builds a vocabulary from the listed characters, after the two
    /// reserved symbols.
    pub fn from_chars(chars: &str) -> Result<Self> {
        let mut symbols = vec![PAD_CHAR, EOS_CHAR];
        symbols.extend(chars.chars());
        Self::from_symbols(symbols)
    }

    /// Rebuilds a vocabulary from its full symbol listing (reserved
    /// symbols included), as stored in checkpoint files.
    pub fn from_symbols(symbols: Vec<char>) -> Result<Self> {
        if symbols.len() < 2 || symbols[0] != PAD_CHAR || symbols[1] != EOS_CHAR {
            return Err(Error::format("vocabulary", "missing reserved symbols"));
        }
        if symbols.len() > Token::MAX as usize {
            return Err(Error::format("vocabulary", "too many symbols"));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, &c) in symbols.iter().enumerate() {
            if index.insert(c, i as Token).is_some() {
                return Err(Error::format(
                    "vocabulary",
                    format!("duplicate symbol {c:?}"),
                ));
            }
        }
        Ok(Self { symbols, index })
    }

    /// The 72-symbol alphabet shared by every synthetic task.
    pub fn default_charset() -> Self {
        Self::from_chars(" 0123456789+-*()=:abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
            .expect("default charset is valid")
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn token(&self, c: char) -> Result<Token> {
        self.index.get(&c).copied().ok_or(Error::UnknownSymbol(c))
    }

    pub fn encode(&self, text: &str) -> Result<Vec<Token>> {
        text.chars().map(|c| self.token(c)).collect()
    }

    /// Renders tokens as text. Reserved symbols render as their control
    /// characters, so they never match task output.
    pub fn decode(&self, tokens: &[Token]) -> String {
        tokens
            .iter()
            .map(|&t| {
                self.symbols
                    .get(t as usize)
                    .copied()
                    .unwrap_or(char::REPLACEMENT_CHARACTER)
            })
            .collect()
    }
}

impl Default for Vocab {
    fn default() -> Self {
        Self::default_charset()
    }
}
