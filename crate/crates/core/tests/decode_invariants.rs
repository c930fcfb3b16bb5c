mod common;

use adasd::adasd::{adasd_decode, AdaSdConfig, Variant};
use adasd::decoding::{fixed_window_sd, DecodeConfig, Strategy};
use adasd::metrics::{acceptance_stats, DecodeTrace, IterationRecord};
use adasd::models::session_rng;
use adasd::Verdict;

const K: usize = 160;

fn verdicts_are_prefix_then_reject(it: &IterationRecord) -> bool {
    let n = it.verdicts.len();
    it.verdicts[..n.saturating_sub(1)].iter().all(|v| v.is_accepted())
        && (it.accepted == n || (it.accepted + 1 == n && it.verdicts[n - 1] == Verdict::Rejected))
}

fn run_variant(variant: Variant, seed: u64) -> Vec<(Vec<u32>, DecodeTrace)> {
    let pair = common::bundled_pair();
    common::prompts(&pair.vocab, 6)
        .iter()
        .enumerate()
        .map(|(i, prompt)| {
            let cfg = AdaSdConfig::new(variant, K).with_seed(seed + i as u64);
            let (out, trace) = adasd_decode::<f64, _, _, _>(&pair.draft, &pair.target, prompt, &cfg, &mut session_rng(cfg.seed)).unwrap();
            assert!(out.len() <= prompt.len() + K);
            assert_eq!(&out[..prompt.len()], &prompt[..]);
            (out, trace)
        })
        .collect()
}

#[test]
fn adaptive_traces_satisfy_structural_invariants() {
    let eos = eos();
    for variant in Variant::ALL {
        for (_, trace) in run_variant(variant, 100) {
            assert!(trace.totals_consistent());
            assert_eq!(trace.target_passes, trace.iterations.len());
            let window = if variant == Variant::VerifyOnly { 5 } else { 20 };
            for it in &trace.iterations {
                assert!(verdicts_are_prefix_then_reject(it), "{variant:?}: {it:?}");
                assert!(it.candidates.len() <= window);
                assert_eq!(it.entropies.len(), it.candidates.len());
                assert_eq!(it.js_distances.len(), it.verdicts.len());
                let rejected = it.verdicts.last() == Some(&Verdict::Rejected);
                assert!(rejected != (it.accepted == it.candidates.len()));
                if let Some(tg) = it.generation_threshold {
                    let last = it.candidates.len() - 1;
                    let stopped_on_eos = it.candidates[last] == eos;
                    if it.candidates.len() < window && !stopped_on_eos {
                        assert!(it.entropies[last] > tg);
                    }
                    assert!(it.entropies[..last].iter().all(|&h| h <= tg));
                }
                if let Some(tv) = it.verification_threshold {
                    for (i, v) in it.verdicts.iter().enumerate() {
                        match v {
                            Verdict::AcceptedRelaxed => assert!(it.js_distances[i] <= tv),
                            Verdict::Rejected => assert!(it.js_distances[i] > tv),
                            Verdict::AcceptedMatch => {}
                        }
                    }
                }
            }
        }
    }
}

fn eos() -> u32 {
    common::bundled_pair().vocab.eos_id()
}

#[test]
fn thresholds_match_recomputed_means() {
    for (_, trace) in run_variant(Variant::AdasdMidpoint, 7) {
        let (mut rej_h, mut rej_d, mut acc_d) = (Vec::new(), Vec::new(), Vec::new());
        for it in &trace.iterations {
            for (i, v) in it.verdicts.iter().enumerate() {
                if v.is_accepted() {
                    acc_d.push(it.js_distances[i]);
                } else {
                    rej_h.push(it.entropies[i]);
                    rej_d.push(it.js_distances[i]);
                }
            }
            let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
            if !rej_h.is_empty() {
                assert!((it.generation_threshold_after.unwrap() - mean(&rej_h)).abs() < 1e-12);
            }
            if !rej_d.is_empty() && !acc_d.is_empty() {
                let tv = (mean(&acc_d) + mean(&rej_d)) / 2.0;
                assert!((it.verification_threshold_after.unwrap() - tv).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn pinned_zero_threshold_never_relaxes() {
    let pair = common::bundled_pair();
    for (i, prompt) in common::prompts(&pair.vocab, 8).iter().enumerate() {
        for variant in [Variant::GenOnly, Variant::VerifyOnly, Variant::AdasdMidpoint] {
            let cfg = AdaSdConfig::new(variant, K).with_seed(i as u64).pin_verification_threshold(0.0);
            let (_, trace) = adasd_decode::<f64, _, _, _>(&pair.draft, &pair.target, prompt, &cfg, &mut session_rng(cfg.seed)).unwrap();
            for it in &trace.iterations {
                assert!(it.verdicts.iter().all(|v| *v != Verdict::AcceptedRelaxed));
            }
        }
    }
}

#[test]
fn verify_only_pinned_at_zero_reproduces_sampled_match_baseline() {
    let pair = common::bundled_pair();
    for (i, prompt) in common::prompts(&pair.vocab, 12).iter().enumerate() {
        let seed = 1000 + i as u64;
        let base_cfg = DecodeConfig::new(Strategy::SampledMatchSd, K).with_window(5).with_seed(seed);
        let (base, base_trace) = fixed_window_sd::<f64, _, _, _>(&pair.draft, &pair.target, prompt, &base_cfg, &mut session_rng(seed)).unwrap();
        let cfg = AdaSdConfig::new(Variant::VerifyOnly, K).with_seed(seed).pin_verification_threshold(0.0);
        let (ada, ada_trace) = adasd_decode::<f64, _, _, _>(&pair.draft, &pair.target, prompt, &cfg, &mut session_rng(seed)).unwrap();
        assert_eq!(base, ada);
        assert_eq!(
            acceptance_stats(&base_trace).unwrap().total_matched,
            acceptance_stats(&ada_trace).unwrap().total_matched
        );
    }
}

#[test]
fn baselines_keep_one_pass_per_iteration() {
    let pair = common::bundled_pair();
    let prompt = &common::prompts(&pair.vocab, 1)[0];
    for strategy in [Strategy::GreedySd, Strategy::SpecSamplingSd, Strategy::SampledMatchSd] {
        let cfg = DecodeConfig::new(strategy, K).with_seed(3);
        let (out, trace) = fixed_window_sd::<f64, _, _, _>(&pair.draft, &pair.target, prompt, &cfg, &mut session_rng(3)).unwrap();
        assert!(out.len() <= prompt.len() + K);
        assert_eq!(trace.target_passes, trace.iterations.len());
        for it in &trace.iterations {
            assert!(verdicts_are_prefix_then_reject(it));
            assert!(it.accepted <= 5);
            assert_eq!(it.emitted.len(), it.accepted + 1);
        }
    }
}

#[test]
fn same_seed_same_stream() {
    let a = run_variant(Variant::VariantC, 55);
    let b = run_variant(Variant::VariantC, 55);
    assert_eq!(a, b);
}
