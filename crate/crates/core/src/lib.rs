//! Speculative decoding with adaptive, tuning-free thresholds.
//!
//! A cheap draft model proposes tokens and a target model verifies them in a
//! single pass. [`adasd`] decides how many tokens to draft from the draft
//! model's entropy and how strictly to verify from the Jensen-Shannon distance
//! between the two models, both learned online. [`decoding`] holds the
//! autoregressive and fixed-window baselines, [`metrics`] the traces and the
//! simulated cost model used to compare them.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the common double-precision instantiations.

pub mod adasd;
pub mod decoding;
pub mod info_theory;
pub mod metrics;
pub mod models;
mod scalar;

pub use scalar::Scalar;

pub use adasd::{adasd_decode, AdaSdConfig, ThresholdState, Variant};
pub use decoding::{autoregressive_decode, fixed_window_sd, DecodeConfig, DecodeError, Strategy, Verdict};
pub use info_theory::{cross_entropy, entropy, js_distance, js_divergence, kl_divergence, DistError, ProbDist};
pub use metrics::{acceptance_stats, separation_report, simulated_speedup, CostModel, DecodeTrace};
pub use models::{LanguageModel, ModelError, NGramModel, TableModel, TokenId, Vocabulary};

/// The bundled character-level training corpus, one paragraph per line.
pub const BUNDLED_CORPUS: &str = include_str!("../data/corpus.txt");

pub type Dist = ProbDist<f64>;
pub type Dist32 = ProbDist<f32>;
pub type Table = TableModel<f64>;
pub type Table32 = TableModel<f32>;
pub type Thresholds = ThresholdState<f64>;
pub type Thresholds32 = ThresholdState<f32>;
