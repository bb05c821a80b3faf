use std::time::Duration;

use serde::{Deserialize, Serialize};

pub const DEFAULT_TEMPERATURE: f64 = 0.8;
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub model_name: String,
    pub temperature: f64,
    /// Seed of run 0; run `i` uses `seed + i`.
    pub seed: u64,
    pub max_output_tokens: u32,
}

impl SamplingParams {
    pub fn new(model_name: impl Into<String>) -> Self {
        Self {
            model_name: model_name.into(),
            temperature: DEFAULT_TEMPERATURE,
            seed: 0,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn run_seed(&self, run_index: usize) -> u64 {
        self.seed + run_index as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// Body of an OpenAI-compatible chat completion request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub seed: u64,
    pub max_tokens: u32,
    /// Bookkeeping only, never sent.
    #[serde(skip)]
    pub instance_id: String,
    #[serde(skip)]
    pub run_index: usize,
}

impl ChatRequest {
    pub fn new(instance_id: &str, run_index: usize, prompt: &str, params: &SamplingParams) -> Self {
        Self {
            model: params.model_name.clone(),
            messages: vec![ChatMessage { role: "user".into(), content: prompt.to_string() }],
            temperature: params.temperature,
            seed: params.run_seed(run_index),
            max_tokens: params.max_output_tokens,
            instance_id: instance_id.to_string(),
            run_index,
        }
    }

    pub fn prompt(&self) -> &str {
        self.messages.last().map_or("", |m| m.content.as_str())
    }
}

/// One of the k completions for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub instance_id: String,
    pub run_index: usize,
    pub seed: u64,
    /// Completion content exactly as returned; `None` when the request failed.
    pub text: Option<String>,
    pub failure: Option<String>,
    pub cache_hit: bool,
    pub latency: Duration,
}

impl Generation {
    pub fn succeeded(&self) -> bool {
        self.text.is_some()
    }
}
