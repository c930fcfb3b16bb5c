//! `adasd run`: decode every prompt with every configured method and write
//! traces plus a summary table.

use std::fs;
use std::path::{Path, PathBuf};

use adasd::adasd::adasd_decode;
use adasd::decoding::{autoregressive_decode, fixed_window_sd};
use adasd::metrics::mean_verification_threshold;
use adasd::models::{decode_utf8, session_rng, train_ngram, unit_interval};
use adasd::{
    acceptance_stats, AdaSdConfig, DecodeConfig, DecodeTrace, NGramModel, Strategy, TokenId,
    Vocabulary, BUNDLED_CORPUS,
};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, MethodKind, MethodSpec, ModelSpec, PromptSpec};

pub const SUMMARY_HEADER: [&str; 7] = ["method", "tks_sim", "JSDist", "cand", "match", "AccRate", "speedup"];

/// One summary row. `None` prints as `-`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub tks_sim: f64,
    #[serde(rename = "JSDist")]
    pub js_dist: Option<f64>,
    pub cand: Option<f64>,
    #[serde(rename = "match")]
    pub matched: Option<f64>,
    #[serde(rename = "AccRate")]
    pub acc_rate: Option<f64>,
    pub speedup: f64,
    pub tokens: usize,
    pub target_passes: usize,
    pub draft_steps: usize,
    pub tokens_per_target_pass: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    /// Sorted by method name.
    pub summary: Vec<SummaryRow>,
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_utf8(bytes).with_context(|| format!("decoding {}", path.display()))
}

fn load_corpus(cfg: &ExperimentConfig) -> Result<String> {
    match &cfg.corpus_path {
        Some(p) => read_text(p),
        None => Ok(BUNDLED_CORPUS.to_string()),
    }
}

fn build_model(spec: &ModelSpec, corpus: &str, vocab: &Vocabulary, role: &str) -> Result<NGramModel> {
    match spec {
        ModelSpec::Train { order, smoothing_alpha } => train_ngram(corpus, *order, vocab, *smoothing_alpha)
            .with_context(|| format!("training the {role} model")),
        ModelSpec::File { path } => {
            NGramModel::load(path).with_context(|| format!("loading the {role} model from {}", path.display()))
        }
    }
}

/// Prompts as text, in config order.
pub fn resolve_prompts(spec: &PromptSpec, corpus: &str, seed: u64) -> Result<Vec<String>> {
    let prompts = match spec {
        PromptSpec::List { items } => items.clone(),
        PromptSpec::File { path } => read_text(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string)
            .collect(),
        PromptSpec::Sampled { count, length } => sample_prompts(corpus, *count, *length, seed)?,
    };
    if prompts.is_empty() {
        bail!("no prompts");
    }
    Ok(prompts)
}

fn sample_prompts(corpus: &str, count: usize, length: usize, seed: u64) -> Result<Vec<String>> {
    let lines: Vec<Vec<char>> = corpus.lines().map(|l| l.chars().collect()).collect();
    let starts: Vec<(usize, usize)> = lines
        .iter()
        .enumerate()
        .filter(|(_, chars)| chars.len() >= length)
        .flat_map(|(n, chars)| {
            (0..=chars.len() - length)
                .filter(move |&i| i == 0 || chars[i - 1] == ' ')
                .map(move |i| (n, i))
        })
        .collect();
    if starts.is_empty() {
        bail!("corpus has no line with at least {length} characters");
    }
    let mut rng = session_rng(seed);
    Ok((0..count)
        .map(|_| {
            let pick = ((unit_interval(&mut rng) * starts.len() as f64) as usize).min(starts.len() - 1);
            let (n, i) = starts[pick];
            lines[n][i..i + length].iter().collect()
        })
        .collect())
}

fn decode_one(
    method: &MethodSpec,
    draft: &NGramModel,
    target: &NGramModel,
    prompt: &[TokenId],
    seed: u64,
) -> Result<(Vec<TokenId>, DecodeTrace)> {
    let max_tokens = method.max_tokens.expect("resolved config");
    let mut rng = session_rng(seed);
    let (tokens, mut trace) = match &method.kind {
        MethodKind::Baseline { strategy, window } => {
            let cfg = DecodeConfig::new(*strategy, max_tokens).with_window(*window).with_seed(seed);
            match strategy {
                Strategy::AutoregressiveTarget => autoregressive_decode::<f64, _, _>(target, prompt, &cfg, &mut rng)?,
                Strategy::AutoregressiveDraft => autoregressive_decode::<f64, _, _>(draft, prompt, &cfg, &mut rng)?,
                _ => fixed_window_sd::<f64, _, _, _>(draft, target, prompt, &cfg, &mut rng)?,
            }
        }
        MethodKind::Adaptive {
            variant,
            window,
            verify_only_window,
            pinned_verification_threshold,
        } => {
            let mut cfg = AdaSdConfig::new(*variant, max_tokens).with_window(*window).with_seed(seed);
            cfg.verify_only_window = *verify_only_window;
            cfg.pinned_verification_threshold = *pinned_verification_threshold;
            adasd_decode::<f64, _, _, _>(draft, target, prompt, &cfg, &mut rng)?
        }
    };
    trace.method = method.name.clone();
    Ok((tokens, trace))
}

fn summarize(name: &str, traces: &[&DecodeTrace], cfg: &ExperimentConfig, baseline_tks: f64) -> Result<SummaryRow> {
    let merged = DecodeTrace::merged(name, traces.iter().copied());
    let tks_sim = cfg.cost_model.throughput(&merged)?;
    let stats = acceptance_stats(&merged).ok();
    Ok(SummaryRow {
        method: name.to_string(),
        tks_sim,
        js_dist: mean_verification_threshold(&merged),
        cand: stats.map(|s| s.mean_candidates),
        matched: stats.map(|s| s.mean_matched),
        acc_rate: stats.map(|s| s.acceptance_rate),
        speedup: tks_sim / baseline_tks,
        tokens: merged.tokens_emitted,
        target_passes: merged.target_passes,
        draft_steps: merged.draft_steps,
        tokens_per_target_pass: merged.tokens_emitted as f64 / merged.target_passes as f64,
    })
}

fn fmt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"))
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            fmt(Some(r.tks_sim)),
            fmt(r.js_dist),
            fmt(r.cand),
            fmt(r.matched),
            fmt(r.acc_rate),
            fmt(Some(r.speedup)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_file_name(method: &str, prompt_index: usize) -> String {
    format!("{method}__{prompt_index:03}.json")
}

#[derive(Serialize)]
struct ResolvedRun<'a> {
    #[serde(flatten)]
    config: &'a ExperimentConfig,
    resolved_prompts: &'a [String],
}

/// Runs the experiment described by `cfg` and writes into `cfg.output_dir`:
///
/// * `resolved_config.json`, the config with every default and prompt spelled out;
/// * `traces/<method>__<prompt>.json`, one trace per session;
/// * `runs.csv`, per-session totals and generated text;
/// * `summary.csv` and `summary.json`, one row per method sorted by name.
///
/// Session `i` of every method uses seed `cfg.seed + i`.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let cfg = cfg.resolved();
    cfg.validate()?;
    let corpus = load_corpus(&cfg)?;
    let vocab = Vocabulary::from_corpus(&corpus).context("building the corpus vocabulary")?;
    let draft = build_model(&cfg.draft, &corpus, &vocab, "draft")?;
    let target = build_model(&cfg.target, &corpus, &vocab, "target")?;
    if draft.vocabulary() != target.vocabulary() {
        bail!(
            "draft and target vocabularies differ ({} vs {} tokens); speculative decoding requires \
             both models to share one vocabulary",
            draft.vocabulary().len(),
            target.vocabulary().len()
        );
    }
    let vocab = target.vocabulary();
    let prompt_text = resolve_prompts(&cfg.prompts, &corpus, cfg.seed)?;
    let prompts: Vec<Vec<TokenId>> = prompt_text
        .iter()
        .enumerate()
        .map(|(i, p)| vocab.encode(p).with_context(|| format!("encoding prompt {i}")))
        .collect::<Result<_>>()?;

    let mut methods: Vec<&MethodSpec> = cfg.methods.iter().collect();
    methods.sort_by(|a, b| a.name.cmp(&b.name));
    let jobs: Vec<(usize, usize)> = (0..methods.len())
        .flat_map(|m| (0..prompts.len()).map(move |p| (m, p)))
        .collect();
    let results: Vec<(Vec<TokenId>, DecodeTrace)> = jobs
        .par_iter()
        .map(|&(m, p)| {
            decode_one(methods[m], &draft, &target, &prompts[p], cfg.seed + p as u64)
                .with_context(|| format!("method {} on prompt {p}", methods[m].name))
        })
        .collect::<Result<_>>()?;

    let out = &cfg.output_dir;
    let trace_dir = out.join("traces");
    fs::create_dir_all(&trace_dir).with_context(|| format!("creating {}", trace_dir.display()))?;
    let resolved = ResolvedRun {
        config: &cfg,
        resolved_prompts: &prompt_text,
    };
    fs::write(out.join("resolved_config.json"), serde_json::to_string_pretty(&resolved)? + "\n")?;

    let mut runs = csv::Writer::from_path(out.join("runs.csv"))?;
    runs.write_record(["method", "prompt", "seed", "tokens", "target_passes", "draft_steps", "text"])?;
    for (&(m, p), (tokens, trace)) in jobs.iter().zip(&results) {
        fs::write(trace_dir.join(trace_file_name(&methods[m].name, p)), trace.to_json()? + "\n")?;
        runs.write_record([
            methods[m].name.clone(),
            p.to_string(),
            (cfg.seed + p as u64).to_string(),
            trace.tokens_emitted.to_string(),
            trace.target_passes.to_string(),
            trace.draft_steps.to_string(),
            vocab.decode(&tokens[prompts[p].len()..]),
        ])?;
    }
    runs.flush()?;

    let per_method = |m: usize| -> Vec<&DecodeTrace> {
        jobs.iter()
            .zip(&results)
            .filter(|((mi, _), _)| *mi == m)
            .map(|(_, (_, t))| t)
            .collect()
    };
    let base_idx = methods.iter().position(|m| m.name == cfg.baseline).expect("validated");
    let base_traces = per_method(base_idx);
    let baseline_tks = cfg
        .cost_model
        .throughput(&DecodeTrace::merged(&cfg.baseline, base_traces.iter().copied()))?;
    let summary: Vec<SummaryRow> = (0..methods.len())
        .map(|m| summarize(&methods[m].name, &per_method(m), &cfg, baseline_tks))
        .collect::<Result<_>>()?;
    write_summary_csv(&out.join("summary.csv"), &summary)?;
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(RunOutcome {
        output_dir: out.clone(),
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_prompts_are_deterministic_and_sized() {
        let a = sample_prompts(BUNDLED_CORPUS, 12, 32, 9).unwrap();
        assert_eq!(a, sample_prompts(BUNDLED_CORPUS, 12, 32, 9).unwrap());
        assert_ne!(a, sample_prompts(BUNDLED_CORPUS, 12, 32, 10).unwrap());
        assert!(a.iter().all(|p| p.chars().count() == 32));
    }

    #[test]
    fn too_long_prompts_fail() {
        assert!(sample_prompts("short line", 1, 32, 0).is_err());
    }

    #[test]
    fn missing_values_print_as_dash() {
        assert_eq!(fmt(None), "-");
        assert_eq!(fmt(Some(1.0)), "1.000000");
    }
}
