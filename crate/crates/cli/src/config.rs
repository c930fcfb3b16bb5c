//! Experiment configuration.
//!
//! A config is one JSON document. Every field has a default, and `cmd_run`
//! writes the fully expanded form to `resolved_config.json` so each run records
//! the exact settings it used.

use std::path::{Path, PathBuf};

use adasd::adasd::{DEFAULT_VERIFY_ONLY_WINDOW, DEFAULT_WINDOW};
use adasd::decoding::VANILLA_WINDOW;
use adasd::models::DEFAULT_SMOOTHING_ALPHA;
use adasd::{CostModel, Strategy, Variant};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 48763;
pub const DEFAULT_MAX_TOKENS: usize = 128;
pub const DEFAULT_PROMPT_COUNT: usize = 10;
pub const DEFAULT_PROMPT_LENGTH: usize = 32;
pub const DEFAULT_DRAFT_ORDER: usize = 2;
pub const DEFAULT_TARGET_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Train an n-gram model on the experiment corpus.
    Train {
        order: usize,
        #[serde(default = "default_alpha")]
        smoothing_alpha: f64,
    },
    /// Load a model file written by `adasd train`.
    File { path: PathBuf },
}

fn default_alpha() -> f64 {
    DEFAULT_SMOOTHING_ALPHA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodKind {
    /// Autoregressive or fixed-window speculative decoding.
    Baseline {
        strategy: Strategy,
        #[serde(default = "default_vanilla_window")]
        window: usize,
    },
    Adaptive {
        variant: Variant,
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default = "default_verify_only_window")]
        verify_only_window: usize,
        #[serde(default)]
        pinned_verification_threshold: Option<f64>,
    },
}

fn default_vanilla_window() -> usize {
    VANILLA_WINDOW
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

fn default_verify_only_window() -> usize {
    DEFAULT_VERIFY_ONLY_WINDOW
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: MethodKind,
    /// Overrides the experiment-wide `max_tokens`.
    #[serde(default)]
    pub max_tokens: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PromptSpec {
    List { items: Vec<String> },
    /// One prompt per non-empty line.
    File { path: PathBuf },
    /// Seeded draws of `length`-character spans starting at word boundaries
    /// of the corpus.
    Sampled {
        #[serde(default = "default_prompt_count")]
        count: usize,
        #[serde(default = "default_prompt_length")]
        length: usize,
    },
}

fn default_prompt_count() -> usize {
    DEFAULT_PROMPT_COUNT
}

fn default_prompt_length() -> usize {
    DEFAULT_PROMPT_LENGTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// `None` selects the bundled corpus.
    pub corpus_path: Option<PathBuf>,
    pub draft: ModelSpec,
    pub target: ModelSpec,
    pub methods: Vec<MethodSpec>,
    /// Method whose throughput is the denominator of the speedup column.
    pub baseline: String,
    pub max_tokens: usize,
    pub prompts: PromptSpec,
    pub seed: u64,
    pub cost_model: CostModel,
    pub output_dir: PathBuf,
}

fn baseline(name: &str, strategy: Strategy) -> MethodSpec {
    MethodSpec {
        name: name.into(),
        kind: MethodKind::Baseline {
            strategy,
            window: VANILLA_WINDOW,
        },
        max_tokens: None,
    }
}

fn adaptive(name: &str, variant: Variant) -> MethodSpec {
    MethodSpec {
        name: name.into(),
        kind: MethodKind::Adaptive {
            variant,
            window: DEFAULT_WINDOW,
            verify_only_window: DEFAULT_VERIFY_ONLY_WINDOW,
            pinned_verification_threshold: None,
        },
        max_tokens: None,
    }
}

/// Vanilla sampled-equality SD with `W = 5`, AdaSD, both ablations and the
/// three alternative verification thresholds.
pub fn default_methods() -> Vec<MethodSpec> {
    vec![
        baseline("vanilla", Strategy::SampledMatchSd),
        adaptive("adasd", Variant::AdasdMidpoint),
        adaptive("gen_only", Variant::GenOnly),
        adaptive("verify_only", Variant::VerifyOnly),
        adaptive("variant_a", Variant::VariantA),
        adaptive("variant_b", Variant::VariantB),
        adaptive("variant_c", Variant::VariantC),
    ]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus_path: None,
            draft: ModelSpec::Train {
                order: DEFAULT_DRAFT_ORDER,
                smoothing_alpha: DEFAULT_SMOOTHING_ALPHA,
            },
            target: ModelSpec::Train {
                order: DEFAULT_TARGET_ORDER,
                smoothing_alpha: DEFAULT_SMOOTHING_ALPHA,
            },
            methods: default_methods(),
            baseline: "vanilla".into(),
            max_tokens: DEFAULT_MAX_TOKENS,
            prompts: PromptSpec::Sampled {
                count: DEFAULT_PROMPT_COUNT,
                length: DEFAULT_PROMPT_LENGTH,
            },
            seed: DEFAULT_SEED,
            cost_model: CostModel::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fills per-method `max_tokens` so the resolved copy is fully explicit.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        for m in &mut out.methods {
            m.max_tokens.get_or_insert(self.max_tokens);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            bail!("config lists no methods");
        }
        let mut names: Vec<&str> = self.methods.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            bail!("method name {:?} appears more than once", w[0]);
        }
        if !names.contains(&self.baseline.as_str()) {
            bail!("baseline {:?} is not one of the configured methods", self.baseline);
        }
        if self.max_tokens == 0 || self.methods.iter().any(|m| m.max_tokens == Some(0)) {
            bail!("max_tokens must be at least 1");
        }
        if let PromptSpec::Sampled { count, length } = self.prompts {
            if count == 0 || length == 0 {
                bail!("sampled prompts need a positive count and length");
            }
        }
        self.cost_model.validate()?;
        Ok(())
    }
}
