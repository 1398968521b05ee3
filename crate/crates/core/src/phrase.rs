use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PhraseError {
    #[error("phrase has no tokens")]
    Empty,
    #[error("phrase token {0:?} is empty or contains whitespace")]
    BadToken(String),
}

/// A text-only clue: an ordered list of whitespace-free tokens.
///
/// Ordering is lexicographic over the token list, which is the tie-break
/// order used throughout the agents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Phrase {
    tokens: Vec<String>,
}

impl Phrase {
    pub fn new<I, S>(tokens: I) -> Result<Self, PhraseError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(PhraseError::Empty);
        }
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(PhraseError::BadToken(bad.clone()));
        }
        Ok(Phrase { tokens })
    }

    /// Splits on whitespace; the token count is the phrase length.
    pub fn parse(text: &str) -> Result<Self, PhraseError> {
        Phrase::new(text.split_whitespace())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

impl fmt::Display for Phrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

impl FromStr for Phrase {
    type Err = PhraseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Phrase::parse(s)
    }
}

impl TryFrom<Vec<String>> for Phrase {
    type Error = PhraseError;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        Phrase::new(tokens)
    }
}

impl From<Phrase> for Vec<String> {
    fn from(p: Phrase) -> Self {
        p.tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_tokenization() {
        let p = Phrase::parse("  a difficult\tchoice ").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.text(), "a difficult choice");
        assert_eq!(Phrase::parse("   "), Err(PhraseError::Empty));
    }

    #[test]
    fn tokens_must_be_whitespace_free() {
        assert!(matches!(
            Phrase::new(["two words"]),
            Err(PhraseError::BadToken(_))
        ));
        let json = r#"["ok",""]"#;
        assert!(serde_json::from_str::<Phrase>(json).is_err());
    }

    #[test]
    fn orders_by_tokens() {
        let a = Phrase::parse("moon").unwrap();
        let b = Phrase::parse("moon dark").unwrap();
        let c = Phrase::parse("night").unwrap();
        assert!(a < b && b < c);
    }
}
