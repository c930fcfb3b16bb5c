//! Additively smoothed character n-gram model.
//!
//! `P(x | c) = (count(c, x) + alpha) / (count(c) + alpha * |V|)` where `c` is the
//! last `order - 1` tokens of the context. Contexts never seen in training, and
//! contexts shorter than `order - 1`, fall back to the smoothed unigram.
//!
//! On disk a model is one JSON object:
//!
//! ```text
//! {
//!   "order": 4,
//!   "smoothing_alpha": 0.1,
//!   "vocabulary": { "tokens": ["a", "b", "<eos>"], "eos_id": 2 },
//!   "counts": [
//!     { "context": [],        "next": [[0, 12], [1, 9], [2, 3]] },
//!     { "context": [0, 1, 0], "next": [[1, 4]] }
//!   ]
//! }
//! ```
//!
//! `counts` holds the unigram row (empty context) first and then one row per
//! observed context in lexicographic order. `next` lists `[token_id, count]`
//! pairs with non-zero counts in increasing token id.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::vocab::corpus_sequences;
use super::{check_tokens, LanguageModel, ModelError, TokenId, Vocabulary};
use crate::info_theory::ProbDist;
use crate::scalar::Scalar;

pub const DEFAULT_SMOOTHING_ALPHA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    smoothing_alpha: f64,
    vocabulary: Vocabulary,
    unigram: Vec<u64>,
    contexts: BTreeMap<Vec<TokenId>, Vec<u64>>,
}

/// Counts n-grams line by line in `corpus_text`; each line ends with EOS.
pub fn train_ngram(
    corpus_text: &str,
    order: usize,
    vocab: &Vocabulary,
    smoothing_alpha: f64,
) -> Result<NGramModel, ModelError> {
    if order == 0 {
        return Err(ModelError::InvalidOrder);
    }
    check_alpha(smoothing_alpha)?;
    let sequences = corpus_sequences(corpus_text, vocab)?;
    let n = vocab.len();
    let mut unigram = vec![0u64; n];
    let mut contexts: BTreeMap<Vec<TokenId>, Vec<u64>> = BTreeMap::new();
    let span = order - 1;
    for seq in &sequences {
        for (pos, &tok) in seq.iter().enumerate() {
            unigram[tok as usize] += 1;
            if span > 0 && pos >= span {
                let row = contexts
                    .entry(seq[pos - span..pos].to_vec())
                    .or_insert_with(|| vec![0; n]);
                row[tok as usize] += 1;
            }
        }
    }
    Ok(NGramModel {
        order,
        smoothing_alpha,
        vocabulary: vocab.clone(),
        unigram,
        contexts,
    })
}

fn check_alpha(alpha: f64) -> Result<(), ModelError> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidSmoothing(alpha))
    }
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing_alpha(&self) -> f64 {
        self.smoothing_alpha
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    /// Number of distinct `order - 1` contexts observed in training.
    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    fn smoothed<T: Scalar>(&self, row: &[u64]) -> Result<ProbDist<T>, ModelError> {
        let alpha = T::lift(self.smoothing_alpha);
        let total: u64 = row.iter().sum();
        let denom = T::lift(total as f64) + alpha * T::lift(row.len() as f64);
        let weights = row
            .iter()
            .map(|&c| (T::lift(c as f64) + alpha) / denom)
            .collect();
        Ok(ProbDist::for_vocabulary(weights, self.vocabulary.len())?)
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        Ok(serde_json::to_string(&ModelFile::from(self))?)
    }

    pub fn from_json(json: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(json)?;
        file.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl<T: Scalar> LanguageModel<T> for NGramModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<ProbDist<T>, ModelError> {
        check_tokens(&self.vocabulary, context)?;
        let span = self.order - 1;
        if span > 0 && context.len() >= span {
            if let Some(row) = self.contexts.get(&context[context.len() - span..]) {
                return self.smoothed(row);
            }
        }
        self.smoothed(&self.unigram)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    order: usize,
    smoothing_alpha: f64,
    vocabulary: Vocabulary,
    counts: Vec<CountRow>,
}

#[derive(Serialize, Deserialize)]
struct CountRow {
    context: Vec<TokenId>,
    next: Vec<(TokenId, u64)>,
}

fn sparse(row: &[u64]) -> Vec<(TokenId, u64)> {
    row.iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(id, &c)| (id as TokenId, c))
        .collect()
}

impl From<&NGramModel> for ModelFile {
    fn from(m: &NGramModel) -> Self {
        let mut counts = vec![CountRow {
            context: Vec::new(),
            next: sparse(&m.unigram),
        }];
        counts.extend(m.contexts.iter().map(|(ctx, row)| CountRow {
            context: ctx.clone(),
            next: sparse(row),
        }));
        ModelFile {
            order: m.order,
            smoothing_alpha: m.smoothing_alpha,
            vocabulary: m.vocabulary.clone(),
            counts,
        }
    }
}

impl TryFrom<ModelFile> for NGramModel {
    type Error = ModelError;

    fn try_from(file: ModelFile) -> Result<Self, Self::Error> {
        if file.order == 0 {
            return Err(ModelError::InvalidOrder);
        }
        check_alpha(file.smoothing_alpha)?;
        let n = file.vocabulary.len();
        let span = file.order - 1;
        let mut unigram = None;
        let mut contexts = BTreeMap::new();
        for row in file.counts {
            check_tokens(&file.vocabulary, &row.context)?;
            let mut dense = vec![0u64; n];
            for (id, c) in row.next {
                check_tokens(&file.vocabulary, &[id])?;
                dense[id as usize] += c;
            }
            if row.context.is_empty() {
                if unigram.replace(dense).is_some() {
                    return Err(ModelError::InvalidModel("duplicate unigram row".into()));
                }
            } else if row.context.len() != span {
                return Err(ModelError::InvalidModel(format!(
                    "context of length {} in an order-{} model",
                    row.context.len(),
                    file.order
                )));
            } else if contexts.insert(row.context, dense).is_some() {
                return Err(ModelError::InvalidModel("duplicate context row".into()));
            }
        }
        let unigram =
            unigram.ok_or_else(|| ModelError::InvalidModel("missing unigram row".into()))?;
        if unigram.iter().all(|&c| c == 0) {
            return Err(ModelError::EmptyCorpus);
        }
        Ok(NGramModel {
            order: file.order,
            smoothing_alpha: file.smoothing_alpha,
            vocabulary: file.vocabulary,
            unigram,
            contexts,
        })
    }
}
