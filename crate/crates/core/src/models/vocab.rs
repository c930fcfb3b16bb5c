use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{ModelError, TokenId};

/// Spelling of the end-of-sequence token. It never collides with a
/// single-character token.
pub const EOS_TOKEN: &str = "<eos>";

/// Ordered, duplicate-free token list with a designated end-of-sequence id.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    eos_id: TokenId,
    index: HashMap<String, TokenId>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    tokens: Vec<String>,
    eos_id: TokenId,
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = ModelError;

    fn try_from(repr: VocabularyRepr) -> Result<Self, Self::Error> {
        Vocabulary::new(repr.tokens, repr.eos_id)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            tokens: v.tokens,
            eos_id: v.eos_id,
        }
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.eos_id == other.eos_id && self.tokens == other.tokens
    }
}

impl Eq for Vocabulary {}

impl Vocabulary {
    pub fn new(tokens: Vec<String>, eos_id: TokenId) -> Result<Self, ModelError> {
        if tokens.len() < 2 {
            return Err(ModelError::InvalidVocabulary(format!(
                "need at least 2 tokens, got {}",
                tokens.len()
            )));
        }
        if eos_id as usize >= tokens.len() {
            return Err(ModelError::InvalidVocabulary(format!(
                "eos id {eos_id} out of range"
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            if index.insert(tok.clone(), id as TokenId).is_some() {
                return Err(ModelError::InvalidVocabulary(format!(
                    "duplicate token {tok:?}"
                )));
            }
        }
        Ok(Self {
            tokens,
            eos_id,
            index,
        })
    }

    /// Character vocabulary of `text`: its distinct characters in code-point
    /// order, then [`EOS_TOKEN`]. Line breaks separate sequences and are not tokens.
    pub fn from_corpus(text: &str) -> Result<Self, ModelError> {
        let chars: BTreeSet<char> = text.chars().filter(|c| !is_line_break(*c)).collect();
        if chars.is_empty() {
            return Err(ModelError::EmptyCorpus);
        }
        let mut tokens: Vec<String> = chars.into_iter().map(String::from).collect();
        let eos_id = tokens.len() as TokenId;
        tokens.push(EOS_TOKEN.to_owned());
        Self::new(tokens, eos_id)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn eos_id(&self) -> TokenId {
        self.eos_id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Character-level encoding; any character without a token is an error
    /// reporting its byte offset in `text`.
    pub fn encode(&self, text: &str) -> Result<Vec<TokenId>, ModelError> {
        let mut buf = [0u8; 4];
        text.char_indices()
            .map(|(byte_offset, ch)| {
                self.id_of(ch.encode_utf8(&mut buf))
                    .ok_or(ModelError::UnknownCharacter { ch, byte_offset })
            })
            .collect()
    }

    /// Concatenates token spellings, dropping EOS.
    pub fn decode(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .filter(|&&id| id != self.eos_id)
            .filter_map(|&id| self.token(id))
            .collect()
    }
}

fn is_line_break(c: char) -> bool {
    c == '\n' || c == '\r'
}

/// Splits a corpus into training sequences: one per non-empty line, each
/// terminated by EOS.
pub fn corpus_sequences(text: &str, vocab: &Vocabulary) -> Result<Vec<Vec<TokenId>>, ModelError> {
    let mut sequences = Vec::new();
    let mut offset = 0usize;
    for line in text.split_inclusive('\n') {
        let body = line.trim_end_matches(is_line_break);
        if !body.is_empty() {
            let mut ids = vocab.encode(body).map_err(|e| match e {
                ModelError::UnknownCharacter { ch, byte_offset } => ModelError::UnknownCharacter {
                    ch,
                    byte_offset: offset + byte_offset,
                },
                other => other,
            })?;
            ids.push(vocab.eos_id());
            sequences.push(ids);
        }
        offset += line.len();
    }
    if sequences.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    Ok(sequences)
}

/// UTF-8 validation that reports the offset of the first bad byte.
pub fn decode_utf8(bytes: Vec<u8>) -> Result<String, ModelError> {
    String::from_utf8(bytes).map_err(|e| ModelError::NotUtf8 {
        byte_offset: e.utf8_error().valid_up_to(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_vocabulary_is_sorted_with_trailing_eos() {
        let v = Vocabulary::from_corpus("ba\nab").unwrap();
        assert_eq!(v.tokens(), &["a", "b", EOS_TOKEN]);
        assert_eq!(v.eos_id(), 2);
    }

    #[test]
    fn vocabulary_invariants() {
        assert!(Vocabulary::new(vec!["a".into()], 0).is_err());
        assert!(Vocabulary::new(vec!["a".into(), "a".into()], 0).is_err());
        assert!(Vocabulary::new(vec!["a".into(), "b".into()], 2).is_err());
        assert!(Vocabulary::from_corpus("\n\n").is_err());
    }

    #[test]
    fn encode_rejects_unknown_characters_with_offset() {
        let v = Vocabulary::from_corpus("abc").unwrap();
        assert_eq!(v.encode("cab").unwrap(), vec![2, 0, 1]);
        match v.encode("aéz") {
            Err(ModelError::UnknownCharacter { ch: 'é', byte_offset: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sequences_split_on_lines() {
        let v = Vocabulary::from_corpus("ab\nba").unwrap();
        let seqs = corpus_sequences("ab\r\n\nba\n", &v).unwrap();
        assert_eq!(seqs, vec![vec![0, 1, 2], vec![1, 0, 2]]);
        match corpus_sequences("ab\nax", &v) {
            Err(ModelError::UnknownCharacter { ch: 'x', byte_offset: 4 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_utf8_reports_offset() {
        match decode_utf8(vec![b'a', b'b', 0xff, b'c']) {
            Err(ModelError::NotUtf8 { byte_offset: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn serde_roundtrip_validates() {
        let v = Vocabulary::from_corpus("xyz").unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(v, back);
        assert_eq!(back.id_of("y"), Some(1));
        assert!(serde_json::from_str::<Vocabulary>(r#"{"tokens":["a","a"],"eos_id":0}"#).is_err());
    }
}
