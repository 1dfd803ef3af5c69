use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub type TokenId = usize;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const SEP: &str = "<sep>";
pub const UNK: &str = "<unk>";
pub const ASPECT_OPEN: &str = "<asp>";
pub const ASPECT_CLOSE: &str = "</asp>";

pub const RESERVED: [&str; 6] = [BOS, EOS, SEP, UNK, ASPECT_OPEN, ASPECT_CLOSE];

/// Lowercased token inventory. Reserved markers occupy ids `0..6` in the
/// order of [`RESERVED`]; other tokens follow in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    pub fn build<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .filter(|w| !RESERVED.contains(&w.as_str()))
            .collect();
        let tokens = RESERVED.iter().map(|s| s.to_string()).chain(words).collect();
        Self::from_tokens(tokens).expect("reserved tokens are unique")
    }

    /// Restores a vocabulary from its token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, String> {
        if tokens.len() < RESERVED.len() || tokens[..RESERVED.len()] != RESERVED {
            return Err("vocabulary must start with the reserved tokens".into());
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(format!("duplicate token {t:?}"));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> TokenId {
        self.get(token).unwrap_or(self.unk())
    }

    pub fn get(&self, token: &str) -> Option<TokenId> {
        self.index
            .get(token)
            .or_else(|| self.index.get(&token.to_lowercase()))
            .copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> Vec<TokenId> {
        words.iter().map(|w| self.id(w.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter().map(|&i| self.tokens[i].clone()).collect()
    }

    pub fn bos(&self) -> TokenId {
        0
    }
    pub fn eos(&self) -> TokenId {
        1
    }
    pub fn sep(&self) -> TokenId {
        2
    }
    pub fn unk(&self) -> TokenId {
        3
    }
    pub fn aspect_open(&self) -> TokenId {
        4
    }
    pub fn aspect_close(&self) -> TokenId {
        5
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = String;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        Self::from_tokens(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_first_and_bijective() {
        let v = Vocabulary::build(["Food", "great", "food", "<s>"]);
        assert_eq!(&v.tokens()[..6], &RESERVED);
        assert_eq!(v.len(), 8);
        for (i, t) in v.tokens().iter().enumerate() {
            assert_eq!(v.id(t), i);
        }
        assert_eq!(v.id("FOOD"), v.id("food"));
        assert_eq!(v.id("missing"), v.unk());
    }

    #[test]
    fn serde_round_trip_rebuilds_index() {
        let v = Vocabulary::build(["a", "b"]);
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back.id("b"), v.id("b"));
        assert!(serde_json::from_str::<Vocabulary>(r#"["a"]"#).is_err());
    }
}
