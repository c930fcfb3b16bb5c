use std::collections::BTreeMap;

use super::{check_tokens, LanguageModel, ModelError, TokenId, Vocabulary};
use crate::info_theory::ProbDist;
use crate::scalar::Scalar;

/// Explicit context-to-distribution table.
///
/// Lookup uses the longest stored suffix of the context, so an entry keyed
/// by `[a]` answers every context ending in `a` unless a longer key matches.
/// Contexts with no matching suffix get the default distribution.
#[derive(Debug, Clone)]
pub struct TableModel<T> {
    vocabulary: Vocabulary,
    entries: BTreeMap<Vec<TokenId>, ProbDist<T>>,
    default_dist: ProbDist<T>,
    longest_key: usize,
}

impl<T: Scalar> TableModel<T> {
    pub fn new(vocabulary: Vocabulary, default_dist: ProbDist<T>) -> Result<Self, ModelError> {
        let default_dist =
            ProbDist::for_vocabulary(default_dist.into_weights(), vocabulary.len())?;
        Ok(Self {
            vocabulary,
            entries: BTreeMap::new(),
            default_dist,
            longest_key: 0,
        })
    }

    pub fn insert(&mut self, context: Vec<TokenId>, dist: ProbDist<T>) -> Result<(), ModelError> {
        check_tokens(&self.vocabulary, &context)?;
        let dist = ProbDist::for_vocabulary(dist.into_weights(), self.vocabulary.len())?;
        self.longest_key = self.longest_key.max(context.len());
        self.entries.insert(context, dist);
        Ok(())
    }

    pub fn with_entry(mut self, context: Vec<TokenId>, dist: ProbDist<T>) -> Result<Self, ModelError> {
        self.insert(context, dist)?;
        Ok(self)
    }
}

impl<T: Scalar> LanguageModel<T> for TableModel<T> {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<ProbDist<T>, ModelError> {
        check_tokens(&self.vocabulary, context)?;
        let longest = self.longest_key.min(context.len());
        for len in (0..=longest).rev() {
            if let Some(d) = self.entries.get(&context[context.len() - len..]) {
                return Ok(d.clone());
            }
        }
        Ok(self.default_dist.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::from_corpus("abc").unwrap()
    }

    #[test]
    fn stored_entry_is_returned_verbatim() {
        let hit = ProbDist::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let m = TableModel::new(vocab(), ProbDist::<f64>::uniform(4).unwrap())
            .unwrap()
            .with_entry(vec![0, 1], hit.clone())
            .unwrap();
        assert_eq!(m.next_distribution(&[2, 0, 1]).unwrap(), hit);
        assert_eq!(
            m.next_distribution(&[1]).unwrap(),
            ProbDist::<f64>::uniform(4).unwrap()
        );
    }

    #[test]
    fn longest_suffix_wins() {
        let short = ProbDist::<f64>::one_hot(4, 0).unwrap();
        let long = ProbDist::<f64>::one_hot(4, 2).unwrap();
        let m = TableModel::new(vocab(), ProbDist::<f64>::uniform(4).unwrap())
            .unwrap()
            .with_entry(vec![1], short.clone())
            .unwrap()
            .with_entry(vec![0, 1], long.clone())
            .unwrap();
        assert_eq!(m.next_distribution(&[0, 1]).unwrap(), long);
        assert_eq!(m.next_distribution(&[2, 1]).unwrap(), short);
    }

    #[test]
    fn rejects_wrong_dimension() {
        let m = TableModel::<f64>::new(vocab(), ProbDist::<f64>::uniform(4).unwrap()).unwrap();
        assert!(m
            .clone()
            .with_entry(vec![0], ProbDist::<f64>::uniform(3).unwrap())
            .is_err());
        assert!(TableModel::<f64>::new(vocab(), ProbDist::<f64>::uniform(2).unwrap()).is_err());
        assert!(m.next_distribution(&[9]).is_err());
    }
}
