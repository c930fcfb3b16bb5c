//! Language models over a shared character vocabulary.
//!
//! A [`LanguageModel`] maps a token context to the distribution of the next
//! token. Speculative decoding requires the draft and target models to share
//! one [`Vocabulary`] exactly; every decoder checks this before running.

mod ngram;
mod sampling;
mod table;
mod vocab;

use thiserror::Error;

use crate::info_theory::{DistError, ProbDist};
use crate::scalar::Scalar;

pub use ngram::{train_ngram, NGramModel, DEFAULT_SMOOTHING_ALPHA};
pub use sampling::{argmax_token, sample_token, session_rng, unit_interval, SessionRng};
pub use table::TableModel;
pub use vocab::{corpus_sequences, decode_utf8, Vocabulary, EOS_TOKEN};

pub type TokenId = u32;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("token id {token} is outside the vocabulary of size {vocab_size}")]
    TokenOutOfRange { token: TokenId, vocab_size: usize },
    #[error("character {ch:?} at byte offset {byte_offset} is not in the vocabulary")]
    UnknownCharacter { ch: char, byte_offset: usize },
    #[error("input is not valid UTF-8 (first invalid byte at offset {byte_offset})")]
    NotUtf8 { byte_offset: usize },
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("smoothing constant must be finite and non-negative, got {0}")]
    InvalidSmoothing(f64),
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("invalid model file: {0}")]
    InvalidModel(String),
    #[error("draft and target vocabularies differ; both models must use identical tokens")]
    VocabularyMismatch,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Next-token distribution provider.
///
/// Implementations must be deterministic: the same context always yields the
/// same distribution, with one entry per vocabulary token.
pub trait LanguageModel<T: Scalar> {
    fn vocabulary(&self) -> &Vocabulary;

    fn next_distribution(&self, context: &[TokenId]) -> Result<ProbDist<T>, ModelError>;
}

impl<T: Scalar, M: LanguageModel<T> + ?Sized> LanguageModel<T> for &M {
    fn vocabulary(&self) -> &Vocabulary {
        (**self).vocabulary()
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<ProbDist<T>, ModelError> {
        (**self).next_distribution(context)
    }
}

/// Fails with [`ModelError::TokenOutOfRange`] on the first id not in `vocab`.
pub fn check_tokens(vocab: &Vocabulary, tokens: &[TokenId]) -> Result<(), ModelError> {
    match tokens.iter().find(|&&t| t as usize >= vocab.len()) {
        Some(&token) => Err(ModelError::TokenOutOfRange {
            token,
            vocab_size: vocab.len(),
        }),
        None => Ok(()),
    }
}

/// Fails with [`ModelError::VocabularyMismatch`] unless both models share tokens and EOS.
pub fn check_shared_vocabulary<T: Scalar>(
    draft: &(impl LanguageModel<T> + ?Sized),
    target: &(impl LanguageModel<T> + ?Sized),
) -> Result<(), ModelError> {
    if draft.vocabulary() == target.vocabulary() {
        Ok(())
    } else {
        Err(ModelError::VocabularyMismatch)
    }
}
