//! Discrete-distribution measures in bits.
//!
//! All logarithms are base 2, so entropies are bounded by `log2 |V|` and the
//! Jensen-Shannon divergence lies in `[0, 1]`. Masses at or below
//! [`Scalar::ZERO_MASS`] contribute nothing to `p log p` terms (`0 log 0 = 0`).
//! Cross-entropy and KL divergence return `+inf` when `p` puts mass where `q`
//! has none instead of failing.

use num_traits::Float;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("distribution has no entries")]
    Empty,
    #[error("weight at index {index} is negative or not finite ({value})")]
    InvalidWeight { index: usize, value: f64 },
    #[error("weights sum to {total}, expected 1")]
    NotNormalized { total: f64 },
    #[error("cannot normalize weights with zero total mass")]
    ZeroMass,
    #[error("distribution has {actual} entries, vocabulary has {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("numeric excursion {value} outside the rounding guard")]
    Numeric { value: f64 },
}

/// A probability vector indexed by token id.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist<T> {
    weights: Vec<T>,
}

impl<T: Scalar> ProbDist<T> {
    /// Validates `weights` as a distribution: non-empty, non-negative, finite, unit mass.
    pub fn new(weights: Vec<T>) -> Result<Self, DistError> {
        if weights.is_empty() {
            return Err(DistError::Empty);
        }
        for (index, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w < T::zero() {
                return Err(DistError::InvalidWeight {
                    index,
                    value: w.lower(),
                });
            }
        }
        let total: f64 = weights.iter().map(|w| w.lower()).sum();
        if (total - 1.0).abs() > T::MASS_TOLERANCE {
            return Err(DistError::NotNormalized { total });
        }
        Ok(Self { weights })
    }

    /// Like [`ProbDist::new`], additionally requiring `weights.len() == vocab_size`.
    pub fn for_vocabulary(weights: Vec<T>, vocab_size: usize) -> Result<Self, DistError> {
        if weights.len() != vocab_size {
            return Err(DistError::DimensionMismatch {
                expected: vocab_size,
                actual: weights.len(),
            });
        }
        Self::new(weights)
    }

    /// Divides non-negative weights by their sum.
    pub fn normalized(mut weights: Vec<T>) -> Result<Self, DistError> {
        if weights.is_empty() {
            return Err(DistError::Empty);
        }
        for (index, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w < T::zero() {
                return Err(DistError::InvalidWeight {
                    index,
                    value: w.lower(),
                });
            }
        }
        let total: T = weights.iter().copied().sum();
        if total <= T::zero() {
            return Err(DistError::ZeroMass);
        }
        for w in &mut weights {
            *w = *w / total;
        }
        Self::new(weights)
    }

    pub fn uniform(n: usize) -> Result<Self, DistError> {
        if n == 0 {
            return Err(DistError::Empty);
        }
        let w = T::one() / T::lift(n as f64);
        Self::new(vec![w; n])
    }

    pub fn one_hot(n: usize, index: usize) -> Result<Self, DistError> {
        if index >= n {
            return Err(DistError::DimensionMismatch {
                expected: n,
                actual: index + 1,
            });
        }
        let mut weights = vec![T::zero(); n];
        weights[index] = T::one();
        Self::new(weights)
    }

    /// `m = (p + q) / 2`.
    pub fn mixture(&self, other: &Self) -> Result<Self, DistError> {
        check_lengths(self, other)?;
        let half = T::lift(0.5);
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(&a, &b)| half * (a + b))
            .collect();
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn prob(&self, index: usize) -> T {
        self.weights.get(index).copied().unwrap_or_else(T::zero)
    }

    pub fn into_weights(self) -> Vec<T> {
        self.weights
    }
}

fn check_lengths<T>(p: &ProbDist<T>, q: &ProbDist<T>) -> Result<(), DistError> {
    if p.weights.len() != q.weights.len() {
        return Err(DistError::DimensionMismatch {
            expected: p.weights.len(),
            actual: q.weights.len(),
        });
    }
    Ok(())
}

#[inline]
fn is_zero_mass<T: Scalar>(x: T) -> bool {
    x <= T::lift(T::ZERO_MASS)
}

/// Shannon entropy `-sum p log2 p`, in `[0, log2 |V|]`.
pub fn entropy<T: Scalar>(p: &ProbDist<T>) -> T {
    let h: T = p
        .weights
        .iter()
        .filter(|&&w| !is_zero_mass(w))
        .map(|&w| w * w.log2())
        .sum();
    // -0.0 for one-hot inputs
    (-h).max(T::zero())
}

/// `-sum p log2 q`; `+inf` when some token has `p > 0` and `q = 0`.
pub fn cross_entropy<T: Scalar>(p: &ProbDist<T>, q: &ProbDist<T>) -> Result<T, DistError> {
    check_lengths(p, q)?;
    let mut acc = T::zero();
    for (&pw, &qw) in p.weights.iter().zip(&q.weights) {
        if is_zero_mass(pw) {
            continue;
        }
        if is_zero_mass(qw) {
            return Ok(T::infinity());
        }
        acc = acc - pw * qw.log2();
    }
    Ok(acc)
}

/// `KL(p || q) = H(p, q) - H(p)`, non-negative, `+inf` on unsupported mass.
pub fn kl_divergence<T: Scalar>(p: &ProbDist<T>, q: &ProbDist<T>) -> Result<T, DistError> {
    check_lengths(p, q)?;
    let mut acc = T::zero();
    for (&pw, &qw) in p.weights.iter().zip(&q.weights) {
        if is_zero_mass(pw) {
            continue;
        }
        if is_zero_mass(qw) {
            return Ok(T::infinity());
        }
        acc = acc + pw * (pw.log2() - qw.log2());
    }
    guard_lower(acc)
}

fn guard_lower<T: Scalar>(x: T) -> Result<T, DistError> {
    if x >= T::zero() {
        Ok(x)
    } else if x >= -T::lift(T::NEGATIVE_GUARD) {
        Ok(T::zero())
    } else {
        Err(DistError::Numeric { value: x.lower() })
    }
}

/// Jensen-Shannon divergence `H(m) - (H(p) + H(q)) / 2` with `m = (p + q) / 2`.
///
/// Always finite and in `[0, 1]`. Rounding excursions past either bound are
/// clamped when they are within [`Scalar::NEGATIVE_GUARD`]; larger ones are
/// reported as [`DistError::Numeric`].
pub fn js_divergence<T: Scalar>(p: &ProbDist<T>, q: &ProbDist<T>) -> Result<T, DistError> {
    let m = p.mixture(q)?;
    let half = T::lift(0.5);
    let jsd = entropy(&m) - half * (entropy(p) + entropy(q));
    let jsd = guard_lower(jsd)?;
    if jsd <= T::one() {
        Ok(jsd)
    } else if jsd <= T::one() + T::lift(T::NEGATIVE_GUARD) {
        Ok(T::one())
    } else {
        Err(DistError::Numeric { value: jsd.lower() })
    }
}

/// Jensen-Shannon distance, the square root of [`js_divergence`]. A metric on
/// distributions with values in `[0, 1]`.
pub fn js_distance<T: Scalar>(p: &ProbDist<T>, q: &ProbDist<T>) -> Result<T, DistError> {
    js_divergence(p, q).map(Float::sqrt)
}
