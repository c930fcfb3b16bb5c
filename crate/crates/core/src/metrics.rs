//! Decode traces, acceptance statistics, the simulated cost model, and the
//! accepted-versus-rejected separation analysis.
//!
//! Throughput is never measured on the wall clock. A [`CostModel`] charges a
//! fixed price per draft step and per target verification pass, and
//! `tokens / cost` stands in for tokens per second.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoding::Verdict;
use crate::models::TokenId;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Price of one target pass in draft-step units.
pub const DEFAULT_TARGET_PASS_COST: f64 = 7.5;

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.05;
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("trace has no iterations")]
    EmptyTrace,
    #[error("trace has no drafted candidates")]
    NoCandidates,
    #[error("trace emitted no tokens")]
    ZeroTokens,
    #[error("trace has no verified tokens to score")]
    NoScoredTokens,
    #[error("cost model prices must be positive and finite")]
    InvalidCost,
}

/// One draft/verify round, or one token of an autoregressive run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub candidates: Vec<TokenId>,
    /// One verdict per examined position: accepts, then at most one reject.
    pub verdicts: Vec<Verdict>,
    pub accepted: usize,
    pub bonus: Option<TokenId>,
    /// Tokens appended to the output this round, after EOS truncation.
    pub emitted: Vec<TokenId>,
    /// Draft entropy `H(q_i)` in bits for every candidate.
    pub entropies: Vec<f64>,
    /// `d_JS(p_i, q_i)` for every examined position.
    pub js_distances: Vec<f64>,
    pub draft_steps: usize,
    pub target_passes: usize,
    /// Generation threshold in force while drafting, if one was applied.
    pub generation_threshold: Option<f64>,
    /// Verification threshold in force while verifying, if one was applied.
    pub verification_threshold: Option<f64>,
    pub generation_threshold_after: Option<f64>,
    pub verification_threshold_after: Option<f64>,
}

impl IterationRecord {
    pub(crate) fn autoregressive(token: TokenId, draft_steps: usize, target_passes: usize) -> Self {
        Self {
            candidates: Vec::new(),
            verdicts: Vec::new(),
            accepted: 0,
            bonus: None,
            emitted: vec![token],
            entropies: Vec::new(),
            js_distances: Vec::new(),
            draft_steps,
            target_passes,
            generation_threshold: None,
            verification_threshold: None,
            generation_threshold_after: None,
            verification_threshold_after: None,
        }
    }

    /// `(entropy, js_distance, verdict)` for each examined position.
    pub fn scored(&self) -> impl Iterator<Item = (f64, f64, Verdict)> + '_ {
        self.verdicts
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.entropies[i], self.js_distances[i], v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeTrace {
    pub schema_version: u32,
    pub method: String,
    pub prompt_len: usize,
    pub iterations: Vec<IterationRecord>,
    pub target_passes: usize,
    pub draft_steps: usize,
    pub tokens_emitted: usize,
}

impl DecodeTrace {
    pub fn new(method: impl Into<String>, prompt_len: usize) -> Self {
        Self {
            schema_version: TRACE_SCHEMA_VERSION,
            method: method.into(),
            prompt_len,
            iterations: Vec::new(),
            target_passes: 0,
            draft_steps: 0,
            tokens_emitted: 0,
        }
    }

    pub fn push(&mut self, record: IterationRecord) {
        self.target_passes += record.target_passes;
        self.draft_steps += record.draft_steps;
        self.tokens_emitted += record.emitted.len();
        self.iterations.push(record);
    }

    /// Concatenates several traces of one method into a single trace.
    pub fn merged<'a>(method: impl Into<String>, traces: impl IntoIterator<Item = &'a DecodeTrace>) -> Self {
        let mut out = DecodeTrace::new(method, 0);
        for t in traces {
            for it in &t.iterations {
                out.push(it.clone());
            }
        }
        out
    }

    /// True when the stored totals equal the per-iteration sums.
    pub fn totals_consistent(&self) -> bool {
        let mut check = DecodeTrace::new(self.method.clone(), self.prompt_len);
        for it in &self.iterations {
            check.push(it.clone());
        }
        check.target_passes == self.target_passes
            && check.draft_steps == self.draft_steps
            && check.tokens_emitted == self.tokens_emitted
            && self.iterations.iter().all(|it| it.accepted <= it.candidates.len())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(json: &str) -> serde_json::Result<Self> {
        serde_json::from_str(json)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    /// Iterations that drafted at least one candidate.
    pub iterations: usize,
    pub total_candidates: usize,
    pub total_matched: usize,
    pub mean_candidates: f64,
    pub mean_matched: f64,
    pub acceptance_rate: f64,
}

/// `#cand`, `#match` and `AccRate = total matched / total candidates`.
///
/// Bonus tokens are produced by the target and are not counted as matches.
pub fn acceptance_stats(trace: &DecodeTrace) -> Result<AcceptanceStats, MetricsError> {
    if trace.iterations.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let drafted = trace.iterations.iter().filter(|it| !it.candidates.is_empty());
    let (mut iterations, mut total_candidates, mut total_matched) = (0, 0, 0);
    for it in drafted {
        iterations += 1;
        total_candidates += it.candidates.len();
        total_matched += it.accepted;
    }
    if total_candidates == 0 {
        return Err(MetricsError::NoCandidates);
    }
    Ok(AcceptanceStats {
        iterations,
        total_candidates,
        total_matched,
        mean_candidates: total_candidates as f64 / iterations as f64,
        mean_matched: total_matched as f64 / iterations as f64,
        acceptance_rate: total_matched as f64 / total_candidates as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub draft_step_cost: f64,
    pub target_pass_cost: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            draft_step_cost: 1.0,
            target_pass_cost: DEFAULT_TARGET_PASS_COST,
        }
    }
}

impl CostModel {
    pub fn new(draft_step_cost: f64, target_pass_cost: f64) -> Result<Self, MetricsError> {
        let cost = Self {
            draft_step_cost,
            target_pass_cost,
        };
        cost.validate()?;
        Ok(cost)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(self.draft_step_cost) && ok(self.target_pass_cost) {
            Ok(())
        } else {
            Err(MetricsError::InvalidCost)
        }
    }

    pub fn simulated_cost(&self, trace: &DecodeTrace) -> f64 {
        trace.draft_steps as f64 * self.draft_step_cost
            + trace.target_passes as f64 * self.target_pass_cost
    }

    /// Emitted tokens per simulated time unit.
    pub fn throughput(&self, trace: &DecodeTrace) -> Result<f64, MetricsError> {
        if trace.tokens_emitted == 0 {
            return Err(MetricsError::ZeroTokens);
        }
        Ok(trace.tokens_emitted as f64 / self.simulated_cost(trace))
    }
}

/// Simulated throughput of `method` divided by that of `baseline`.
pub fn simulated_speedup(
    method: &DecodeTrace,
    baseline: &DecodeTrace,
    cost: &CostModel,
) -> Result<f64, MetricsError> {
    cost.validate()?;
    Ok(cost.throughput(method)? / cost.throughput(baseline)?)
}

/// Token-weighted mean of the verification threshold in force at each
/// examined position. `None` when no position ran under a threshold.
pub fn mean_verification_threshold(trace: &DecodeTrace) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for it in &trace.iterations {
        if let Some(tv) = it.verification_threshold {
            sum += tv * it.verdicts.len() as f64;
            n += it.verdicts.len();
        }
    }
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenClass {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub count: usize,
    pub mean_entropy: f64,
    pub mean_js_distance: f64,
}

/// Fixed-width histogram of JS distances over `[0, 1]`; 1.0 lands in the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsHistogram {
    pub bin_width: f64,
    pub accepted: Vec<usize>,
    pub rejected: Vec<usize>,
}

impl JsHistogram {
    fn new() -> Self {
        Self {
            bin_width: HISTOGRAM_BIN_WIDTH,
            accepted: vec![0; HISTOGRAM_BINS],
            rejected: vec![0; HISTOGRAM_BINS],
        }
    }

    pub fn bin_of(js: f64) -> usize {
        ((js / HISTOGRAM_BIN_WIDTH) as usize).min(HISTOGRAM_BINS - 1)
    }

    pub fn total(&self) -> usize {
        self.accepted.iter().chain(&self.rejected).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub entropy: bool,
    pub js_distance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub accepted: Option<ClassSummary>,
    pub rejected: Option<ClassSummary>,
    /// Classes with no scored tokens.
    pub missing: Vec<TokenClass>,
    /// Whether rejected means strictly exceed accepted means; absent when a class is missing.
    pub rejected_exceeds_accepted: Option<Separation>,
    pub histogram: JsHistogram,
}

#[derive(Default)]
struct Acc {
    n: usize,
    entropy: f64,
    js: f64,
}

impl Acc {
    fn summary(&self) -> Option<ClassSummary> {
        (self.n > 0).then(|| ClassSummary {
            count: self.n,
            mean_entropy: self.entropy / self.n as f64,
            mean_js_distance: self.js / self.n as f64,
        })
    }
}

/// Per-class means of draft entropy and JS distance, with a JS histogram.
pub fn separation_report(trace: &DecodeTrace) -> Result<SeparationReport, MetricsError> {
    let mut accepted = Acc::default();
    let mut rejected = Acc::default();
    let mut histogram = JsHistogram::new();
    for it in &trace.iterations {
        for (h, js, verdict) in it.scored() {
            let bin = JsHistogram::bin_of(js);
            let acc = if verdict.is_accepted() {
                histogram.accepted[bin] += 1;
                &mut accepted
            } else {
                histogram.rejected[bin] += 1;
                &mut rejected
            };
            acc.n += 1;
            acc.entropy += h;
            acc.js += js;
        }
    }
    if accepted.n + rejected.n == 0 {
        return Err(MetricsError::NoScoredTokens);
    }
    let (accepted, rejected) = (accepted.summary(), rejected.summary());
    let mut missing = Vec::new();
    if accepted.is_none() {
        missing.push(TokenClass::Accepted);
    }
    if rejected.is_none() {
        missing.push(TokenClass::Rejected);
    }
    let rejected_exceeds_accepted = match (accepted, rejected) {
        (Some(a), Some(r)) => Some(Separation {
            entropy: r.mean_entropy > a.mean_entropy,
            js_distance: r.mean_js_distance > a.mean_js_distance,
        }),
        _ => None,
    };
    Ok(SeparationReport {
        accepted,
        rejected,
        missing,
        rejected_exceeds_accepted,
        histogram,
    })
}
