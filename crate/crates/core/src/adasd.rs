//! Adaptive speculative decoding.
//!
//! Two thresholds adapt online from the decode's own history, with no tuning:
//!
//! * the generation threshold `T_G` ends a draft window as soon as a drafted
//!   token's entropy `H(q_i)` exceeds it. `T_G` is the mean draft entropy of
//!   every rejected token seen so far;
//! * the verification threshold `T_V` keeps a candidate whose sampled target
//!   token differs from it when `d_JS(p_i, q_i) <= T_V`. By default `T_V` is the
//!   midpoint of the mean JS distances of accepted and rejected tokens.
//!
//! Both start at 0. A mean over an empty set leaves its threshold unchanged,
//! so the first window holds a single token (any non-degenerate entropy
//! exceeds 0) and verification is strict until both classes have been seen.
//!
//! [`Variant`] selects the threshold rule, including the two ablations
//! (`GenOnly` pins `T_V = 0`; `VerifyOnly` drafts a fixed window).

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::decoding::{
    draft_window, emitted_tokens, finish, js_per_position, target_window, DecodeError,
    DraftWindow, Verdict, VerifyOutcome,
};
use crate::info_theory::ProbDist;
use crate::metrics::{DecodeTrace, IterationRecord};
use crate::models::{check_shared_vocabulary, check_tokens, sample_token, LanguageModel, TokenId};
use crate::scalar::Scalar;

pub const DEFAULT_WINDOW: usize = 20;
pub const DEFAULT_VERIFY_ONLY_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Midpoint of the accepted and rejected JS means.
    AdasdMidpoint,
    /// Mean JS distance of accepted tokens.
    VariantA,
    /// Pooled mean over all recorded tokens.
    VariantB,
    /// Class means weighted by the number of windows containing each class.
    VariantC,
    /// Adaptive `T_G`, verification pinned at `T_V = 0`.
    GenOnly,
    /// Adaptive midpoint `T_V` over a fixed-length draft window.
    VerifyOnly,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::AdasdMidpoint,
        Variant::VariantA,
        Variant::VariantB,
        Variant::VariantC,
        Variant::GenOnly,
        Variant::VerifyOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::AdasdMidpoint => "adasd_midpoint",
            Variant::VariantA => "variant_a",
            Variant::VariantB => "variant_b",
            Variant::VariantC => "variant_c",
            Variant::GenOnly => "gen_only",
            Variant::VerifyOnly => "verify_only",
        }
    }

    fn uses_generation_threshold(self) -> bool {
        self != Variant::VerifyOnly
    }

    fn uses_verification_threshold(self) -> bool {
        self != Variant::GenOnly
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaSdConfig {
    pub variant: Variant,
    /// Upper bound on drafted tokens per window.
    pub window: usize,
    /// Draft length used by [`Variant::VerifyOnly`].
    pub verify_only_window: usize,
    pub max_tokens: usize,
    pub seed: u64,
    /// Holds `T_V` at a constant instead of adapting it.
    #[serde(default)]
    pub pinned_verification_threshold: Option<f64>,
}

impl AdaSdConfig {
    pub fn new(variant: Variant, max_tokens: usize) -> Self {
        Self {
            variant,
            window: DEFAULT_WINDOW,
            verify_only_window: DEFAULT_VERIFY_ONLY_WINDOW,
            max_tokens,
            seed: 0,
            pinned_verification_threshold: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn pin_verification_threshold(mut self, value: f64) -> Self {
        self.pinned_verification_threshold = Some(value);
        self
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.max_tokens == 0 {
            return Err(DecodeError::InvalidConfig("max_tokens must be at least 1".into()));
        }
        if self.window == 0 || self.verify_only_window == 0 {
            return Err(DecodeError::InvalidConfig("window must be at least 1".into()));
        }
        if let Some(v) = self.pinned_verification_threshold {
            if !(0.0..=1.0).contains(&v) {
                return Err(DecodeError::InvalidConfig(format!(
                    "pinned verification threshold {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Running statistics behind the two thresholds.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ThresholdState<T> {
    pub rejected_entropy_sum: T,
    pub rejected_entropy_count: usize,
    pub accepted_js_sum: T,
    pub accepted_js_count: usize,
    pub rejected_js_sum: T,
    pub rejected_js_count: usize,
    /// Windows with at least one accepted token.
    pub accepted_sequences: usize,
    /// Windows with a rejected token.
    pub rejected_sequences: usize,
    pub generation_threshold: T,
    pub verification_threshold: T,
}

fn mean<T: Scalar>(sum: T, count: usize) -> Option<T> {
    (count > 0).then(|| sum / T::lift(count as f64))
}

impl<T: Scalar> ThresholdState<T> {
    pub fn new() -> Self {
        Self {
            rejected_entropy_sum: T::zero(),
            rejected_entropy_count: 0,
            accepted_js_sum: T::zero(),
            accepted_js_count: 0,
            rejected_js_sum: T::zero(),
            rejected_js_count: 0,
            accepted_sequences: 0,
            rejected_sequences: 0,
            generation_threshold: T::zero(),
            verification_threshold: T::zero(),
        }
    }

    pub fn record_accepted(&mut self, js: T) {
        self.accepted_js_sum = self.accepted_js_sum + js;
        self.accepted_js_count += 1;
    }

    pub fn record_rejected(&mut self, entropy: T, js: T) {
        self.rejected_entropy_sum = self.rejected_entropy_sum + entropy;
        self.rejected_entropy_count += 1;
        self.rejected_js_sum = self.rejected_js_sum + js;
        self.rejected_js_count += 1;
    }

    pub fn record_sequence(&mut self, any_accepted: bool, any_rejected: bool) {
        self.accepted_sequences += usize::from(any_accepted);
        self.rejected_sequences += usize::from(any_rejected);
    }

    pub fn mean_rejected_entropy(&self) -> Option<T> {
        mean(self.rejected_entropy_sum, self.rejected_entropy_count)
    }

    pub fn mean_accepted_js(&self) -> Option<T> {
        mean(self.accepted_js_sum, self.accepted_js_count)
    }

    pub fn mean_rejected_js(&self) -> Option<T> {
        mean(self.rejected_js_sum, self.rejected_js_count)
    }

    /// `T_G <- mean rejected entropy`; unchanged before the first rejection.
    pub fn update_generation_threshold(&mut self) -> T {
        if let Some(m) = self.mean_rejected_entropy() {
            self.generation_threshold = m;
        }
        self.generation_threshold
    }

    /// Recomputes `T_V` under `variant`; unchanged while the rule is undefined.
    pub fn update_verification_threshold(&mut self, variant: Variant) -> T {
        if let Some(v) = self.verification_rule(variant) {
            self.verification_threshold = v.max(T::zero()).min(T::one());
        }
        self.verification_threshold
    }

    fn verification_rule(&self, variant: Variant) -> Option<T> {
        let two = T::lift(2.0);
        match variant {
            Variant::GenOnly => Some(T::zero()),
            Variant::AdasdMidpoint | Variant::VerifyOnly => {
                Some((self.mean_accepted_js()? + self.mean_rejected_js()?) / two)
            }
            Variant::VariantA => self.mean_accepted_js(),
            Variant::VariantB => mean(
                self.accepted_js_sum + self.rejected_js_sum,
                self.accepted_js_count + self.rejected_js_count,
            ),
            Variant::VariantC => {
                let (a, r) = (self.mean_accepted_js()?, self.mean_rejected_js()?);
                let total = self.accepted_sequences + self.rejected_sequences;
                if total == 0 {
                    return None;
                }
                // normalized weights: exactly 1/2 each when the counts are equal,
                // which reproduces the midpoint bit for bit
                let total = T::lift(total as f64);
                let wa = T::lift(self.accepted_sequences as f64) / total;
                let wr = T::lift(self.rejected_sequences as f64) / total;
                Some(wa * a + wr * r)
            }
        }
    }
}

/// Drafts until a token's entropy exceeds `state.generation_threshold` (that
/// token included), EOS is drafted, or `window` tokens exist.
pub fn generate_candidates<T, M, R>(
    draft: &M,
    context: &[TokenId],
    state: &ThresholdState<T>,
    window: usize,
    rng: &mut R,
) -> Result<DraftWindow<T>, DecodeError>
where
    T: Scalar,
    M: LanguageModel<T> + ?Sized,
    R: RngCore + ?Sized,
{
    let threshold = state.generation_threshold;
    draft_window(draft, context, window, false, |h| h > threshold, rng)
}

#[derive(Debug, Clone)]
pub struct Verification<T> {
    pub outcome: VerifyOutcome,
    /// `d_JS(p_i, q_i)` per examined position.
    pub js_distances: Vec<T>,
    pub target_dists: Vec<ProbDist<T>>,
}

/// One parallel verification pass.
///
/// Samples `y_i ~ p_i` for all `w + 1` positions, then walks the window: a
/// position is rejected when `x_i != y_i` and `d_JS(p_i, q_i) > T_V`. Accepted
/// positions add their JS distance to the accepted statistics; the rejected
/// one adds its draft entropy and JS distance to the rejected statistics.
pub fn verify_candidates<T, M, R>(
    target: &M,
    context: &[TokenId],
    candidates: &DraftWindow<T>,
    state: &mut ThresholdState<T>,
    rng: &mut R,
) -> Result<Verification<T>, DecodeError>
where
    T: Scalar,
    M: LanguageModel<T> + ?Sized,
    R: RngCore + ?Sized,
{
    if candidates.is_empty() {
        return Err(DecodeError::InvalidConfig("empty candidate window".into()));
    }
    if candidates.dists.len() != candidates.len() || candidates.entropies.len() != candidates.len() {
        return Err(DecodeError::LengthMismatch {
            what: "draft distributions",
            expected: candidates.len(),
            actual: candidates.dists.len(),
        });
    }
    let target_dists = target_window(target, context, &candidates.tokens)?;
    let samples: Vec<TokenId> = target_dists.iter().map(|p| sample_token(p, rng)).collect();
    let js_all = js_per_position(&candidates.dists, &target_dists, candidates.len())?;
    let threshold = state.verification_threshold;

    let mut verdicts = Vec::with_capacity(candidates.len());
    let mut rejected_at = None;
    for (i, (&x, &js)) in candidates.tokens.iter().zip(&js_all).enumerate() {
        if x != samples[i] && js > threshold {
            state.record_rejected(candidates.entropies[i], js);
            verdicts.push(Verdict::Rejected);
            rejected_at = Some(i);
            break;
        }
        state.record_accepted(js);
        verdicts.push(if x == samples[i] {
            Verdict::AcceptedMatch
        } else {
            Verdict::AcceptedRelaxed
        });
    }
    let accepted = rejected_at.unwrap_or(candidates.len());
    state.record_sequence(accepted > 0, rejected_at.is_some());
    let mut js_distances = js_all;
    js_distances.truncate(verdicts.len());
    Ok(Verification {
        outcome: VerifyOutcome {
            accepted,
            verdicts,
            bonus: samples[accepted],
        },
        js_distances,
        target_dists,
    })
}

/// The full adaptive loop.
///
/// Each iteration drafts, verifies, appends the accepted prefix and the target
/// token, then refreshes both thresholds. Returns the prompt followed by at
/// most `cfg.max_tokens` generated tokens.
pub fn adasd_decode<T, D, M, R>(
    draft: &D,
    target: &M,
    prompt: &[TokenId],
    cfg: &AdaSdConfig,
    rng: &mut R,
) -> Result<(Vec<TokenId>, DecodeTrace), DecodeError>
where
    T: Scalar,
    D: LanguageModel<T> + ?Sized,
    M: LanguageModel<T> + ?Sized,
    R: RngCore + ?Sized,
{
    let (tokens, trace, _) = adasd_decode_with_state(draft, target, prompt, cfg, rng)?;
    Ok((tokens, trace))
}

/// [`adasd_decode`], also returning the final threshold state.
pub fn adasd_decode_with_state<T, D, M, R>(
    draft: &D,
    target: &M,
    prompt: &[TokenId],
    cfg: &AdaSdConfig,
    rng: &mut R,
) -> Result<(Vec<TokenId>, DecodeTrace, ThresholdState<T>), DecodeError>
where
    T: Scalar,
    D: LanguageModel<T> + ?Sized,
    M: LanguageModel<T> + ?Sized,
    R: RngCore + ?Sized,
{
    cfg.validate()?;
    check_shared_vocabulary(draft, target)?;
    check_tokens(target.vocabulary(), prompt)?;
    let eos = target.vocabulary().eos_id();
    let pinned = match (cfg.variant, cfg.pinned_verification_threshold) {
        (_, Some(v)) => Some(T::lift(v)),
        (Variant::GenOnly, None) => Some(T::zero()),
        _ => None,
    };

    let mut state = ThresholdState::new();
    if let Some(v) = pinned {
        state.verification_threshold = v;
    }
    let mut context = prompt.to_vec();
    let mut trace = DecodeTrace::new(cfg.variant.name(), prompt.len());
    let mut done = false;

    while context.len() - prompt.len() < cfg.max_tokens && !done {
        let generation_used = cfg
            .variant
            .uses_generation_threshold()
            .then(|| state.generation_threshold.lower());
        let window = if cfg.variant.uses_generation_threshold() {
            generate_candidates(draft, &context, &state, cfg.window, rng)?
        } else {
            draft_window(draft, &context, cfg.verify_only_window, false, |_| false, rng)?
        };
        let verification_used = cfg
            .variant
            .uses_verification_threshold()
            .then(|| state.verification_threshold.lower());
        let verified = verify_candidates(target, &context, &window, &mut state, rng)?;
        let outcome = verified.outcome;

        let (emitted, hit_eos) = emitted_tokens(&window.tokens, outcome.accepted, outcome.bonus, eos);
        done = hit_eos;
        context.extend_from_slice(&emitted);

        state.update_generation_threshold();
        match pinned {
            Some(v) => state.verification_threshold = v,
            None => {
                state.update_verification_threshold(cfg.variant);
            }
        }

        trace.push(IterationRecord {
            draft_steps: window.len(),
            target_passes: 1,
            accepted: outcome.accepted,
            bonus: Some(outcome.bonus),
            emitted,
            entropies: window.entropies.iter().map(|h| h.lower()).collect(),
            js_distances: verified.js_distances.iter().map(|d| d.lower()).collect(),
            candidates: window.tokens,
            verdicts: outcome.verdicts,
            generation_threshold: generation_used,
            verification_threshold: verification_used,
            generation_threshold_after: Some(state.generation_threshold.lower()),
            verification_threshold_after: Some(state.verification_threshold.lower()),
        });
    }
    Ok((finish(context, prompt.len(), cfg.max_tokens), trace, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info_theory::{entropy, js_distance};
    use crate::models::{session_rng, TableModel, Vocabulary};

    fn d(w: &[f64]) -> ProbDist<f64> {
        ProbDist::new(w.to_vec()).unwrap()
    }

    // a=0 b=1 c=2 <eos>=3
    fn vocab() -> Vocabulary {
        Vocabulary::from_corpus("abc").unwrap()
    }

    #[test]
    fn generation_threshold_examples() {
        let mut s = ThresholdState::<f64>::new();
        assert_eq!(s.update_generation_threshold(), 0.0);
        s.record_rejected(1.7, 0.5);
        assert_eq!(s.update_generation_threshold(), 1.7);
        let mut s = ThresholdState::<f64>::new();
        s.record_rejected(2.0, 0.5);
        s.record_rejected(4.0, 0.5);
        assert_eq!(s.update_generation_threshold(), 3.0);
    }

    #[test]
    fn midpoint_worked_example() {
        let mut s = ThresholdState::<f64>::new();
        s.record_accepted(0.15);
        assert_eq!(s.update_verification_threshold(Variant::AdasdMidpoint), 0.0);
        s.record_rejected(1.0, 0.49);
        assert_eq!(s.update_verification_threshold(Variant::AdasdMidpoint), 0.32);
    }

    #[test]
    fn variant_rules() {
        let mut s = ThresholdState::<f64>::new();
        for _ in 0..3 {
            s.record_accepted(0.1);
        }
        s.record_rejected(1.0, 0.5);
        assert!((s.clone().update_verification_threshold(Variant::VariantB) - 0.2).abs() < 1e-15);
        assert!((s.clone().update_verification_threshold(Variant::VariantA) - 0.1).abs() < 1e-15);
        assert_eq!(s.clone().update_verification_threshold(Variant::GenOnly), 0.0);

        s.record_sequence(true, true);
        s.record_sequence(true, false);
        s.record_sequence(false, true);
        let mid = s.clone().update_verification_threshold(Variant::AdasdMidpoint);
        let c = s.clone().update_verification_threshold(Variant::VariantC);
        assert_eq!(mid.to_bits(), c.to_bits());

        s.record_sequence(true, false);
        let c = s.clone().update_verification_threshold(Variant::VariantC);
        let a = 0.3 / 3.0;
        assert!((c - (3.0 * a + 2.0 * 0.5) / 5.0).abs() < 1e-15);
    }

    #[test]
    fn variant_c_waits_for_sequences() {
        let mut s = ThresholdState::<f64>::new();
        s.record_accepted(0.2);
        s.record_rejected(1.0, 0.4);
        assert_eq!(s.update_verification_threshold(Variant::VariantC), 0.0);
    }

    #[test]
    fn initial_state_drafts_one_candidate() {
        let draft = TableModel::new(vocab(), d(&[0.4, 0.3, 0.3, 0.0])).unwrap();
        let s = ThresholdState::new();
        let w = generate_candidates(&draft, &[0], &s, 20, &mut session_rng(0)).unwrap();
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn zero_entropy_draft_fills_window() {
        let draft = TableModel::new(vocab(), ProbDist::<f64>::one_hot(4, 1).unwrap()).unwrap();
        let w = generate_candidates(&draft, &[0], &ThresholdState::new(), 20, &mut session_rng(0)).unwrap();
        assert_eq!(w.len(), 20);
    }

    #[test]
    fn stops_on_first_entropy_above_threshold() {
        // sampled chain a -> b -> c -> ...; entropies 0.47, 0.88, 1.5, 0
        let draft = TableModel::new(vocab(), ProbDist::<f64>::one_hot(4, 0).unwrap())
            .unwrap()
            .with_entry(vec![0], d(&[0.0, 0.9, 0.0, 0.1]))
            .unwrap()
            .with_entry(vec![1], d(&[0.0, 0.0, 0.7, 0.3]))
            .unwrap()
            .with_entry(vec![0, 1, 2], d(&[0.5, 0.25, 0.25, 0.0]))
            .unwrap();
        let mut s = ThresholdState::new();
        s.generation_threshold = 1.0;
        // pick a seed that walks the likely branch
        let seed = (0..1000)
            .find(|&seed| {
                let w = generate_candidates(&draft, &[2, 0], &s, 20, &mut session_rng(seed)).unwrap();
                w.tokens[..2] == [1, 2]
            })
            .unwrap();
        let w = generate_candidates(&draft, &[2, 0], &s, 20, &mut session_rng(seed)).unwrap();
        assert_eq!(w.len(), 3);
        assert!(w.entropies[0] < 1.0 && w.entropies[1] < 1.0);
        assert!((w.entropies[2] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn relaxed_acceptance_under_threshold() {
        // x = a, target samples b with certainty, distributions close
        let q = d(&[0.30, 0.30, 0.2, 0.2]);
        let p = d(&[0.0, 0.4, 0.3, 0.3]);
        let js = js_distance(&p, &q).unwrap();
        assert!(js < 0.6, "{js}");
        let target = TableModel::new(vocab(), ProbDist::<f64>::one_hot(4, 1).unwrap())
            .unwrap()
            .with_entry(vec![2], p.clone())
            .unwrap();
        let window = DraftWindow {
            tokens: vec![0],
            dists: vec![q.clone()],
            entropies: vec![entropy(&q)],
        };
        let mut s = ThresholdState::new();
        s.verification_threshold = 0.6;
        let v = verify_candidates(&target, &[2], &window, &mut s, &mut session_rng(0)).unwrap();
        assert_eq!(v.outcome.verdicts, vec![Verdict::AcceptedRelaxed]);
        assert_eq!(v.outcome.accepted, 1);
        assert_eq!(v.outcome.bonus, 1);
        assert_eq!(s.accepted_js_count, 1);
        assert_eq!(s.accepted_js_sum, js);

        let mut strict = ThresholdState::new();
        let v = verify_candidates(&target, &[2], &window, &mut strict, &mut session_rng(0)).unwrap();
        assert_eq!(v.outcome.verdicts, vec![Verdict::Rejected]);
        assert_eq!(v.outcome.accepted, 0);
        assert_eq!(strict.rejected_entropy_sum, entropy(&q));
        assert_eq!(strict.rejected_js_sum, js);
        assert_eq!(strict.rejected_sequences, 1);
        assert_eq!(strict.accepted_sequences, 0);
    }

    #[test]
    fn full_match_takes_bonus_from_last_position() {
        let m = TableModel::new(vocab(), ProbDist::<f64>::one_hot(4, 0).unwrap())
            .unwrap()
            .with_entry(vec![0, 0, 0], ProbDist::<f64>::one_hot(4, 2).unwrap())
            .unwrap();
        let w = generate_candidates(&m, &[1], &ThresholdState::new(), 3, &mut session_rng(0)).unwrap();
        assert_eq!(w.tokens, vec![0, 0, 0]);
        let v = verify_candidates(&m, &[1], &w, &mut ThresholdState::new(), &mut session_rng(0)).unwrap();
        assert_eq!(v.outcome.accepted, 3);
        assert_eq!(v.outcome.bonus, 2);
        assert_eq!(v.target_dists.len(), 4);
    }

    #[test]
    fn scripted_threshold_progression() {
        // iteration 1: the draft is uniform over four tokens (2 bits) and the
        // target is certain of "d"
        let vocab = Vocabulary::from_corpus("abcd").unwrap();
        let q5 = d(&[0.25, 0.25, 0.25, 0.25, 0.0]);
        let draft = TableModel::new(vocab.clone(), q5.clone()).unwrap();
        let target = TableModel::new(vocab.clone(), ProbDist::<f64>::one_hot(5, 3).unwrap()).unwrap();
        let mut rng = session_rng(11);
        let mut state = ThresholdState::<f64>::new();
        let ctx = vec![0];
        // draw until the candidate differs from "d"
        let window = loop {
            let w = generate_candidates(&draft, &ctx, &state, 20, &mut rng).unwrap();
            if w.tokens[0] != 3 {
                break w;
            }
        };
        assert_eq!(window.len(), 1);
        verify_candidates(&target, &ctx, &window, &mut state, &mut rng).unwrap();
        let expected_js = js_distance(&ProbDist::<f64>::one_hot(5, 3).unwrap(), &q5).unwrap();
        assert_eq!(state.update_generation_threshold(), 2.0);
        assert_eq!(state.update_verification_threshold(Variant::AdasdMidpoint), 0.0);
        assert_eq!(state.rejected_js_sum, expected_js);

        // later: one accepted token at 0.2, one rejected at 0.6
        let mut s = ThresholdState::<f64>::new();
        s.record_rejected(2.0, 0.6);
        s.update_verification_threshold(Variant::AdasdMidpoint);
        s.record_accepted(0.2);
        s.record_rejected(1.0, 0.6);
        s.update_generation_threshold();
        let tv = s.update_verification_threshold(Variant::AdasdMidpoint);
        assert!((tv - 0.4).abs() < 1e-15);
        assert_eq!(s.generation_threshold, 1.5);
    }

    #[test]
    fn gen_only_pins_verification_at_zero() {
        let q = d(&[0.3, 0.3, 0.3, 0.1]);
        let p = d(&[0.1, 0.3, 0.5, 0.1]);
        let draft = TableModel::new(vocab(), q).unwrap();
        let target = TableModel::new(vocab(), p).unwrap();
        let cfg = AdaSdConfig::new(Variant::GenOnly, 200).with_seed(4);
        let (_, trace, state) =
            adasd_decode_with_state(&draft, &target, &[0], &cfg, &mut session_rng(cfg.seed)).unwrap();
        assert_eq!(state.verification_threshold, 0.0);
        for it in &trace.iterations {
            assert_eq!(it.verification_threshold, None);
            assert_eq!(it.verification_threshold_after, Some(0.0));
            assert!(it.verdicts.iter().all(|v| *v != Verdict::AcceptedRelaxed));
        }
    }

    #[test]
    fn identical_models_accept_everything_under_gen_only() {
        let m = TableModel::new(vocab(), d(&[0.3, 0.3, 0.3, 0.1])).unwrap();
        let cfg = AdaSdConfig::new(Variant::GenOnly, 100).with_seed(2);
        let (_, trace) = adasd_decode(&m, &m, &[0], &cfg, &mut session_rng(cfg.seed)).unwrap();
        // d_JS = 0 <= T_V = 0, so no position is ever rejected
        assert!(trace.iterations.iter().all(|it| it.accepted == it.candidates.len()));
    }

    #[test]
    fn output_is_capped_at_max_tokens() {
        let m = TableModel::new(vocab(), ProbDist::<f64>::one_hot(4, 0).unwrap()).unwrap();
        let cfg = AdaSdConfig::new(Variant::AdasdMidpoint, 7);
        let (out, trace) = adasd_decode(&m, &m, &[1], &cfg, &mut session_rng(0)).unwrap();
        assert_eq!(out.len(), 8);
        assert_eq!(trace.iterations.len(), 1);
        assert_eq!(trace.tokens_emitted, 21);
    }

    #[test]
    fn config_validation() {
        let m = TableModel::new(vocab(), ProbDist::<f64>::uniform(4).unwrap()).unwrap();
        let run = |cfg: AdaSdConfig| adasd_decode(&m, &m, &[0], &cfg, &mut session_rng(0));
        assert!(run(AdaSdConfig::new(Variant::AdasdMidpoint, 0)).is_err());
        assert!(run(AdaSdConfig::new(Variant::AdasdMidpoint, 4).with_window(0)).is_err());
        assert!(run(AdaSdConfig::new(Variant::VerifyOnly, 4).pin_verification_threshold(1.5)).is_err());
        assert!(adasd_decode(&m, &m, &[7], &AdaSdConfig::new(Variant::AdasdMidpoint, 4), &mut session_rng(0)).is_err());
    }

    #[test]
    fn runs_in_single_precision() {
        let q = ProbDist::<f32>::new(vec![0.3, 0.3, 0.3, 0.1]).unwrap();
        let p = ProbDist::<f32>::new(vec![0.2, 0.4, 0.3, 0.1]).unwrap();
        let draft = TableModel::new(vocab(), q).unwrap();
        let target = TableModel::new(vocab(), p).unwrap();
        let cfg = AdaSdConfig::new(Variant::AdasdMidpoint, 64).with_seed(9);
        let (out, trace, state) =
            adasd_decode_with_state(&draft, &target, &[0], &cfg, &mut session_rng(cfg.seed)).unwrap();
        assert!(out.len() <= 65);
        assert!(trace.totals_consistent());
        assert!(state.verification_threshold >= 0.0 && state.verification_threshold <= 1.0);
    }
}
