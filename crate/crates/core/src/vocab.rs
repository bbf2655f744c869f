//! Token ids and the vocabulary file.
//!
//! The vocabulary file is UTF-8 with one token per line; the line number is
//! the id. Line 0 must be `<s>` and line 1 must be `</s>`.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into a [`Vocabulary`].
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    /// Sentence-start marker. Every hypothesis history begins with it.
    pub const START: TokenId = TokenId(0);
    /// End of sentence.
    pub const EOS: TokenId = TokenId(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_eos(self) -> bool {
        self == Self::EOS
    }
}

impl From<u32> for TokenId {
    fn from(v: u32) -> Self {
        TokenId(v)
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub const START_SYMBOL: &str = "<s>";
pub const EOS_SYMBOL: &str = "</s>";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// Builds a vocabulary from an ordered token list. The first two entries
    /// must be the reserved start and EOS symbols.
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.first().map(String::as_str) != Some(START_SYMBOL)
            || tokens.get(1).map(String::as_str) != Some(EOS_SYMBOL)
        {
            return Err(Error::Format(format!(
                "vocabulary must start with {START_SYMBOL:?} and {EOS_SYMBOL:?}"
            )));
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::Format(format!(
                    "line {i}: token {tok:?} is empty or contains whitespace"
                )));
            }
            if ids.insert(tok.clone(), TokenId(i as u32)).is_some() {
                return Err(Error::Format(format!("line {i}: duplicate token {tok:?}")));
            }
        }
        Ok(Self { tokens, ids })
    }

    /// Parses newline-separated vocabulary text. A trailing newline is
    /// allowed; blank lines elsewhere are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Format("empty vocabulary".into()));
        }
        Self::new(text.lines().map(|l| l.trim_end_matches('\r')))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Number of tokens, including the two reserved ones.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id.index()).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn check(&self, id: TokenId) -> Result<TokenId> {
        if id.index() < self.len() {
            Ok(id)
        } else {
            Err(Error::Range {
                token: id,
                vocab_size: self.len(),
            })
        }
    }

    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> Result<Vec<TokenId>> {
        words
            .iter()
            .map(|w| {
                let w = w.as_ref();
                self.id(w).ok_or_else(|| Error::OutOfVocabulary(w.to_owned()))
            })
            .collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Result<Vec<String>> {
        ids.iter()
            .map(|&id| {
                self.check(id)?;
                Ok(self.tokens[id.index()].clone())
            })
            .collect()
    }

    /// Joins the surface forms of `ids`, dropping start and EOS markers.
    pub fn detokenize(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .filter(|id| **id != TokenId::START && !id.is_eos())
            .filter_map(|&id| self.token(id))
            .collect::<Vec<_>>()
            .join(" ")
    }
}
