//! Tokenization, vocabulary building and fixed-length integer encoding.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
const PAD_TOKEN: &str = "[PAD]";
const UNK_TOKEN: &str = "[UNK]";

pub const DEFAULT_SEQ_LEN: usize = 64;
pub const DEFAULT_MAX_VOCAB: usize = 20_000;
pub const DEFAULT_MIN_FREQ: usize = 2;

/// Lowercases and splits on every non-alphanumeric character. Hashtag markers
/// vanish with the split; empty pieces are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
}

impl Vocabulary {
    /// Builds from tokens in id order, starting at id 2.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut id_to_token = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        let mut token_to_id = HashMap::new();
        for tok in tokens {
            let tok = tok.into();
            if tok.is_empty() || tok == PAD_TOKEN || tok == UNK_TOKEN {
                return Err(Error::Input(format!("token {tok:?} is reserved or empty")));
            }
            if token_to_id.insert(tok.clone(), id_to_token.len()).is_some() {
                return Err(Error::Input(format!("duplicate token {tok:?}")));
            }
            id_to_token.push(tok);
        }
        Ok(Self {
            token_to_id,
            id_to_token,
        })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    /// JSON array of all tokens in id order, reserved entries included.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.id_to_token).expect("string array serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let tokens: Vec<String> = serde_json::from_str(json)?;
        match tokens.as_slice() {
            [pad, unk, rest @ ..] if pad == PAD_TOKEN && unk == UNK_TOKEN => {
                Self::from_tokens(rest.iter().cloned())
            }
            _ => Err(Error::Input("vocabulary must start with [PAD], [UNK]".into())),
        }
    }
}

/// Ranks corpus tokens by (frequency desc, token asc) and admits the top
/// `max_size - 2` with frequency at least `min_freq`.
pub fn build_vocabulary(corpus: &Corpus, max_size: usize, min_freq: usize) -> Result<Vocabulary> {
    if max_size < 3 {
        return Err(Error::Config(format!("max_size {max_size} must be at least 3")));
    }
    let mut freq: HashMap<String, usize> = HashMap::new();
    for doc in corpus.documents() {
        for tok in tokenize(&doc.text) {
            *freq.entry(tok).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = freq.into_iter().filter(|(_, n)| *n >= min_freq).collect();
    ranked.sort_by(|(ta, na), (tb, nb)| nb.cmp(na).then_with(|| ta.cmp(tb)));
    ranked.truncate(max_size - 2);
    Vocabulary::from_tokens(ranked.into_iter().map(|(t, _)| t))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedText {
    pub ids: Vec<usize>,
    pub true_length: usize,
}

pub fn encode(tokens: &[String], vocab: &Vocabulary, len: usize) -> EncodedText {
    assert!(len >= 1, "sequence length must be positive");
    let mut ids: Vec<usize> = tokens
        .iter()
        .take(len)
        .map(|t| vocab.id(t).unwrap_or(UNK))
        .collect();
    let true_length = ids.len();
    ids.resize(len, PAD);
    EncodedText { ids, true_length }
}

pub fn encode_text(text: &str, vocab: &Vocabulary, len: usize) -> EncodedText {
    encode(&tokenize(text), vocab, len)
}
