//! Seeded token selection.
//!
//! Sessions draw from ChaCha8 seeded through `SeedableRng::seed_from_u64`.
//! A uniform in `[0, 1)` is built from the top 53 bits of one `next_u64`
//! word, and sampling walks the cumulative weights in token-id order, returning
//! the first id whose running sum exceeds `u * total`. Any other implementation
//! following these three steps reproduces the same token streams.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::TokenId;
use crate::info_theory::ProbDist;
use crate::scalar::Scalar;

pub type SessionRng = ChaCha8Rng;

pub fn session_rng(seed: u64) -> SessionRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)` with 53 bits of resolution.
pub fn unit_interval<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF draw. Consumes exactly one `u64` from `rng`.
pub fn sample_token<T: Scalar, R: RngCore + ?Sized>(dist: &ProbDist<T>, rng: &mut R) -> TokenId {
    let weights = dist.weights();
    let total: T = weights.iter().copied().sum();
    let target = T::lift(unit_interval(rng)) * total;
    let mut cumulative = T::zero();
    for (id, &w) in weights.iter().enumerate() {
        cumulative = cumulative + w;
        if target < cumulative {
            return id as TokenId;
        }
    }
    // rounding left `target` at the top of the range
    weights
        .iter()
        .rposition(|&w| w > T::zero())
        .unwrap_or(weights.len() - 1) as TokenId
}

/// Highest-probability token; ties go to the smallest id.
pub fn argmax_token<T: Scalar>(dist: &ProbDist<T>) -> TokenId {
    let mut best = 0usize;
    for (id, &w) in dist.weights().iter().enumerate().skip(1) {
        if w > dist.weights()[best] {
            best = id;
        }
    }
    best as TokenId
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(w: &[f64]) -> ProbDist<f64> {
        ProbDist::new(w.to_vec()).unwrap()
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_token(&d(&[0.1, 0.7, 0.2])), 1);
        assert_eq!(argmax_token(&d(&[0.5, 0.5])), 0);
        assert_eq!(argmax_token(&d(&[0.0, 0.0, 1.0])), 2);
    }

    #[test]
    fn one_hot_always_sampled() {
        let p = d(&[0.0, 0.0, 1.0, 0.0]);
        for seed in 0..50 {
            assert_eq!(sample_token(&p, &mut session_rng(seed)), 2);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let p = d(&[0.1, 0.2, 0.3, 0.4]);
        let run = |seed| {
            let mut rng = session_rng(seed);
            (0..64).map(|_| sample_token(&p, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn uniform_frequencies() {
        let p = ProbDist::<f64>::uniform(4).unwrap();
        let mut rng = session_rng(123);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample_token(&p, &mut rng) as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn unit_interval_bounds() {
        struct Max;
        impl RngCore for Max {
            fn next_u32(&mut self) -> u32 {
                u32::MAX
            }
            fn next_u64(&mut self) -> u64 {
                u64::MAX
            }
            fn fill_bytes(&mut self, _: &mut [u8]) {}
            fn try_fill_bytes(&mut self, _: &mut [u8]) -> Result<(), rand_core::Error> {
                Ok(())
            }
        }
        let u = unit_interval(&mut Max);
        assert!(u < 1.0);
        // the top of the range still lands on a supported token
        assert_eq!(sample_token(&d(&[0.5, 0.5, 0.0]), &mut Max), 1);
    }
}
