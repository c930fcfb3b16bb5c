//! `adasd train`: fit an n-gram model on a corpus and save it as JSON.

use std::path::Path;

use adasd::models::train_ngram;
use adasd::{NGramModel, Vocabulary, BUNDLED_CORPUS};
use anyhow::{Context, Result};

use crate::run::read_text;

/// Trains on `corpus` (the bundled corpus when `None`) and writes the model to `out`.
pub fn cmd_train(corpus: Option<&Path>, order: usize, smoothing_alpha: f64, out: &Path) -> Result<NGramModel> {
    let text = match corpus {
        Some(p) => read_text(p)?,
        None => BUNDLED_CORPUS.to_string(),
    };
    let vocab = Vocabulary::from_corpus(&text).context("building the vocabulary")?;
    let model = train_ngram(&text, order, &vocab, smoothing_alpha)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    model.save(out).with_context(|| format!("writing {}", out.display()))?;
    Ok(model)
}
