#![allow(dead_code)]

use adasd::models::train_ngram;
use adasd::{NGramModel, TokenId, Vocabulary, BUNDLED_CORPUS};

pub struct Pair {
    pub vocab: Vocabulary,
    pub draft: NGramModel,
    pub target: NGramModel,
}

pub fn bundled_pair() -> Pair {
    let vocab = Vocabulary::from_corpus(BUNDLED_CORPUS).unwrap();
    let draft = train_ngram(BUNDLED_CORPUS, 2, &vocab, 0.1).unwrap();
    let target = train_ngram(BUNDLED_CORPUS, 4, &vocab, 0.1).unwrap();
    Pair { vocab, draft, target }
}

/// First 32 characters of the first `n` corpus lines.
pub fn prompts(vocab: &Vocabulary, n: usize) -> Vec<Vec<TokenId>> {
    BUNDLED_CORPUS
        .lines()
        .filter(|l| l.chars().count() >= 32)
        .take(n)
        .map(|l| vocab.encode(&l.chars().take(32).collect::<String>()).unwrap())
        .collect()
}
