//! Baseline decoders: plain autoregressive sampling and fixed-window
//! speculative decoding with three verification rules.
//!
//! * greedy: accept while the target argmax equals the candidate;
//! * speculative sampling: accept with probability `min(1, p(x) / q(x))`,
//!   resample from `norm(max(0, p - q))` on rejection;
//! * sampled match: draw `y_i ~ p_i` for every position and accept while
//!   `x_i == y_i`.
//!
//! Every decoder returns the full context (prompt followed by generated
//! tokens). The loop runs while fewer than `max_tokens` tokens have been
//! generated, so the last window can overshoot; the returned context is cut
//! back to `max_tokens` generated tokens while the trace keeps everything.
//! Generation stops at the first emitted EOS.

use rand_core::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::info_theory::{entropy, js_distance, DistError, ProbDist};
use crate::metrics::{DecodeTrace, IterationRecord};
use crate::models::{
    argmax_token, check_shared_vocabulary, check_tokens, sample_token, unit_interval,
    LanguageModel, ModelError, TokenId,
};
use crate::scalar::Scalar;

/// Candidate window of the vanilla speculative decoding baseline.
pub const VANILLA_WINDOW: usize = 5;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("{what}: expected {expected} entries, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("candidate {token} at position {position} has zero draft probability")]
    InvalidCandidate { position: usize, token: TokenId },
    #[error("invalid decode configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    AutoregressiveTarget,
    AutoregressiveDraft,
    GreedySd,
    SpecSamplingSd,
    SampledMatchSd,
}

impl Strategy {
    pub fn is_speculative(self) -> bool {
        matches!(
            self,
            Strategy::GreedySd | Strategy::SpecSamplingSd | Strategy::SampledMatchSd
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub strategy: Strategy,
    pub max_tokens: usize,
    pub window: usize,
    pub seed: u64,
    /// Autoregressive strategies only: pick the argmax instead of sampling.
    #[serde(default)]
    pub greedy: bool,
}

impl DecodeConfig {
    pub fn new(strategy: Strategy, max_tokens: usize) -> Self {
        Self {
            strategy,
            max_tokens,
            window: VANILLA_WINDOW,
            seed: 0,
            greedy: false,
        }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn greedy(mut self, greedy: bool) -> Self {
        self.greedy = greedy;
        self
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.max_tokens == 0 {
            return Err(DecodeError::InvalidConfig("max_tokens must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(DecodeError::InvalidConfig("window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The candidate agreed with the target.
    AcceptedMatch,
    /// The tokens differed, but the two distributions were close enough.
    AcceptedRelaxed,
    Rejected,
}

impl Verdict {
    pub fn is_accepted(self) -> bool {
        !matches!(self, Verdict::Rejected)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyOutcome {
    pub accepted: usize,
    pub verdicts: Vec<Verdict>,
    pub bonus: TokenId,
}

/// Draft tokens with the distributions and entropies they were drawn from.
#[derive(Debug, Clone)]
pub struct DraftWindow<T> {
    pub tokens: Vec<TokenId>,
    pub dists: Vec<ProbDist<T>>,
    pub entropies: Vec<T>,
}

impl<T> DraftWindow<T> {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Runs the draft model for up to `max_len` tokens on top of `context`.
///
/// `stop_after` sees each draft entropy once its token has been kept; returning
/// true ends the window with that token included. Drafting also ends after EOS.
pub(crate) fn draft_window<T, M, R>(
    draft: &M,
    context: &[TokenId],
    max_len: usize,
    greedy: bool,
    mut stop_after: impl FnMut(T) -> bool,
    rng: &mut R,
) -> Result<DraftWindow<T>, DecodeError>
where
    T: Scalar,
    M: LanguageModel<T> + ?Sized,
    R: RngCore + ?Sized,
{
    let eos = draft.vocabulary().eos_id();
    let mut buf = context.to_vec();
    let mut window = DraftWindow {
        tokens: Vec::with_capacity(max_len),
        dists: Vec::with_capacity(max_len),
        entropies: Vec::with_capacity(max_len),
    };
    for _ in 0..max_len {
        let q = draft.next_distribution(&buf)?;
        let x = if greedy {
            argmax_token(&q)
        } else {
            sample_token(&q, rng)
        };
        let h = entropy(&q);
        buf.push(x);
        window.tokens.push(x);
        window.dists.push(q);
        window.entropies.push(h);
        if x == eos || stop_after(h) {
            break;
        }
    }
    Ok(window)
}

/// `p_1 .. p_{w+1}`: target distributions after each candidate prefix.
pub(crate) fn target_window<T, M>(
    target: &M,
    context: &[TokenId],
    candidates: &[TokenId],
) -> Result<Vec<ProbDist<T>>, DecodeError>
where
    T: Scalar,
    M: LanguageModel<T> + ?Sized,
{
    let mut buf = context.to_vec();
    let mut dists = Vec::with_capacity(candidates.len() + 1);
    dists.push(target.next_distribution(&buf)?);
    for &x in candidates {
        buf.push(x);
        dists.push(target.next_distribution(&buf)?);
    }
    Ok(dists)
}

fn check_window<T>(
    candidates: &[TokenId],
    draft_dists: Option<&[ProbDist<T>]>,
    target_dists: &[ProbDist<T>],
) -> Result<(), DecodeError> {
    if let Some(d) = draft_dists {
        if d.len() != candidates.len() {
            return Err(DecodeError::LengthMismatch {
                what: "draft distributions",
                expected: candidates.len(),
                actual: d.len(),
            });
        }
    }
    if target_dists.len() != candidates.len() + 1 {
        return Err(DecodeError::LengthMismatch {
            what: "target distributions",
            expected: candidates.len() + 1,
            actual: target_dists.len(),
        });
    }
    Ok(())
}

/// Accepts the longest prefix whose candidates equal the target argmax.
pub fn greedy_verify<T: Scalar>(
    candidates: &[TokenId],
    draft_dists: &[ProbDist<T>],
    target_dists: &[ProbDist<T>],
) -> Result<VerifyOutcome, DecodeError> {
    check_window(candidates, Some(draft_dists), target_dists)?;
    let mut verdicts = Vec::with_capacity(candidates.len());
    for (i, &x) in candidates.iter().enumerate() {
        let best = argmax_token(&target_dists[i]);
        if best != x {
            verdicts.push(Verdict::Rejected);
            return Ok(VerifyOutcome {
                accepted: i,
                verdicts,
                bonus: best,
            });
        }
        verdicts.push(Verdict::AcceptedMatch);
    }
    Ok(VerifyOutcome {
        accepted: candidates.len(),
        verdicts,
        bonus: argmax_token(&target_dists[candidates.len()]),
    })
}

/// `min(1, p(x) / q(x))`; zero when `q(x) = 0`.
pub fn acceptance_probability<T: Scalar>(p: &ProbDist<T>, q: &ProbDist<T>, token: TokenId) -> T {
    let (pt, qt) = (p.prob(token as usize), q.prob(token as usize));
    if qt <= T::zero() {
        return T::zero();
    }
    (pt / qt).min(T::one())
}

/// `norm(max(0, p - q))`, or `p` itself when the two coincide.
pub fn residual_distribution<T: Scalar>(
    p: &ProbDist<T>,
    q: &ProbDist<T>,
) -> Result<ProbDist<T>, DistError> {
    if p.len() != q.len() {
        return Err(DistError::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    let residual: Vec<T> = p
        .weights()
        .iter()
        .zip(q.weights())
        .map(|(&a, &b)| (a - b).max(T::zero()))
        .collect();
    match ProbDist::normalized(residual) {
        Err(DistError::ZeroMass) => Ok(p.clone()),
        other => other,
    }
}

/// Speculative sampling. The emitted token at each position is distributed
/// exactly as the target distribution.
///
/// Consumes one uniform per examined position, plus one token draw for the bonus.
pub fn speculative_sampling_verify<T: Scalar, R: RngCore + ?Sized>(
    candidates: &[TokenId],
    draft_dists: &[ProbDist<T>],
    target_dists: &[ProbDist<T>],
    rng: &mut R,
) -> Result<VerifyOutcome, DecodeError> {
    check_window(candidates, Some(draft_dists), target_dists)?;
    for (position, (&token, q)) in candidates.iter().zip(draft_dists).enumerate() {
        if q.prob(token as usize) <= T::zero() {
            return Err(DecodeError::InvalidCandidate { position, token });
        }
    }
    let mut verdicts = Vec::with_capacity(candidates.len());
    for (i, &x) in candidates.iter().enumerate() {
        let (p, q) = (&target_dists[i], &draft_dists[i]);
        let alpha = acceptance_probability(p, q, x);
        if T::lift(unit_interval(rng)) < alpha {
            verdicts.push(Verdict::AcceptedMatch);
            continue;
        }
        verdicts.push(Verdict::Rejected);
        let bonus = sample_token(&residual_distribution(p, q)?, rng);
        return Ok(VerifyOutcome {
            accepted: i,
            verdicts,
            bonus,
        });
    }
    Ok(VerifyOutcome {
        accepted: candidates.len(),
        verdicts,
        bonus: sample_token(&target_dists[candidates.len()], rng),
    })
}

/// Draws `y_1 .. y_{w+1}` from the target up front, then accepts while the
/// candidate equals the target sample.
pub fn sampled_match_verify<T: Scalar, R: RngCore + ?Sized>(
    candidates: &[TokenId],
    target_dists: &[ProbDist<T>],
    rng: &mut R,
) -> Result<VerifyOutcome, DecodeError> {
    check_window::<T>(candidates, None, target_dists)?;
    let samples: Vec<TokenId> = target_dists.iter().map(|p| sample_token(p, rng)).collect();
    let mut verdicts = Vec::with_capacity(candidates.len());
    for (i, &x) in candidates.iter().enumerate() {
        if x != samples[i] {
            verdicts.push(Verdict::Rejected);
            return Ok(VerifyOutcome {
                accepted: i,
                verdicts,
                bonus: samples[i],
            });
        }
        verdicts.push(Verdict::AcceptedMatch);
    }
    Ok(VerifyOutcome {
        accepted: candidates.len(),
        verdicts,
        bonus: samples[candidates.len()],
    })
}

/// Accepted prefix plus bonus, cut after the first EOS. Returns the tokens and
/// whether EOS was reached.
pub(crate) fn emitted_tokens(
    candidates: &[TokenId],
    accepted: usize,
    bonus: TokenId,
    eos: TokenId,
) -> (Vec<TokenId>, bool) {
    let mut out: Vec<TokenId> = candidates[..accepted].to_vec();
    out.push(bonus);
    match out.iter().position(|&t| t == eos) {
        Some(i) => {
            out.truncate(i + 1);
            (out, true)
        }
        None => (out, false),
    }
}

pub(crate) fn finish(mut context: Vec<TokenId>, prompt_len: usize, max_tokens: usize) -> Vec<TokenId> {
    context.truncate(prompt_len + max_tokens);
    context
}

fn lower<T: Scalar>(xs: &[T]) -> Vec<f64> {
    xs.iter().map(|x| x.lower()).collect()
}

pub(crate) fn js_per_position<T: Scalar>(
    draft_dists: &[ProbDist<T>],
    target_dists: &[ProbDist<T>],
    examined: usize,
) -> Result<Vec<T>, DecodeError> {
    (0..examined)
        .map(|i| js_distance(&target_dists[i], &draft_dists[i]).map_err(DecodeError::from))
        .collect()
}

/// Token-by-token decoding with a single model.
///
/// `cfg.strategy` must be `AutoregressiveTarget` or `AutoregressiveDraft`; it
/// decides whether each step is charged as a target pass or a draft step.
pub fn autoregressive_decode<T, M, R>(
    model: &M,
    prompt: &[TokenId],
    cfg: &DecodeConfig,
    rng: &mut R,
) -> Result<(Vec<TokenId>, DecodeTrace), DecodeError>
where
    T: Scalar,
    M: LanguageModel<T> + ?Sized,
    R: RngCore + ?Sized,
{
    cfg.validate()?;
    let (draft_steps, target_passes) = match cfg.strategy {
        Strategy::AutoregressiveTarget => (0, 1),
        Strategy::AutoregressiveDraft => (1, 0),
        other => {
            return Err(DecodeError::InvalidConfig(format!(
                "{other:?} is not an autoregressive strategy"
            )))
        }
    };
    check_tokens(model.vocabulary(), prompt)?;
    let eos = model.vocabulary().eos_id();
    let mut context = prompt.to_vec();
    let mut trace = DecodeTrace::new(strategy_name(cfg.strategy), prompt.len());
    for _ in 0..cfg.max_tokens {
        let dist = model.next_distribution(&context)?;
        let token = if cfg.greedy {
            argmax_token(&dist)
        } else {
            sample_token(&dist, rng)
        };
        context.push(token);
        trace.push(IterationRecord::autoregressive(token, draft_steps, target_passes));
        if token == eos {
            break;
        }
    }
    Ok((context, trace))
}

/// Speculative decoding with a fixed draft window of `cfg.window` tokens.
pub fn fixed_window_sd<T, D, M, R>(
    draft: &D,
    target: &M,
    prompt: &[TokenId],
    cfg: &DecodeConfig,
    rng: &mut R,
) -> Result<(Vec<TokenId>, DecodeTrace), DecodeError>
where
    T: Scalar,
    D: LanguageModel<T> + ?Sized,
    M: LanguageModel<T> + ?Sized,
    R: RngCore + ?Sized,
{
    cfg.validate()?;
    if !cfg.strategy.is_speculative() {
        return Err(DecodeError::InvalidConfig(format!(
            "{:?} is not a speculative strategy",
            cfg.strategy
        )));
    }
    check_shared_vocabulary(draft, target)?;
    check_tokens(target.vocabulary(), prompt)?;
    let eos = target.vocabulary().eos_id();
    let greedy = cfg.strategy == Strategy::GreedySd;
    let mut context = prompt.to_vec();
    let mut trace = DecodeTrace::new(strategy_name(cfg.strategy), prompt.len());
    let mut done = false;
    while context.len() - prompt.len() < cfg.max_tokens && !done {
        let window = draft_window(draft, &context, cfg.window, greedy, |_| false, rng)?;
        let target_dists = target_window(target, &context, &window.tokens)?;
        let outcome = match cfg.strategy {
            Strategy::GreedySd => greedy_verify(&window.tokens, &window.dists, &target_dists)?,
            Strategy::SpecSamplingSd => {
                speculative_sampling_verify(&window.tokens, &window.dists, &target_dists, rng)?
            }
            Strategy::SampledMatchSd => sampled_match_verify(&window.tokens, &target_dists, rng)?,
            _ => unreachable!("checked above"),
        };
        let js = js_per_position(&window.dists, &target_dists, outcome.verdicts.len())?;
        let (emitted, hit_eos) = emitted_tokens(&window.tokens, outcome.accepted, outcome.bonus, eos);
        done = hit_eos;
        context.extend_from_slice(&emitted);
        trace.push(IterationRecord {
            draft_steps: window.len(),
            target_passes: 1,
            accepted: outcome.accepted,
            bonus: Some(outcome.bonus),
            emitted,
            entropies: lower(&window.entropies),
            js_distances: lower(&js),
            candidates: window.tokens,
            verdicts: outcome.verdicts,
            generation_threshold: None,
            verification_threshold: None,
            generation_threshold_after: None,
            verification_threshold_after: None,
        });
    }
    Ok((finish(context, prompt.len(), cfg.max_tokens), trace))
}

pub fn strategy_name(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::AutoregressiveTarget => "autoregressive_target",
        Strategy::AutoregressiveDraft => "autoregressive_draft",
        Strategy::GreedySd => "greedy_sd",
        Strategy::SpecSamplingSd => "spec_sampling_sd",
        Strategy::SampledMatchSd => "sampled_match_sd",
    }
}
