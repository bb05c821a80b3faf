//! Prompt construction and a cached, bounded-concurrency client for
//! OpenAI-compatible chat completion endpoints.

mod cache;
mod client;
mod endpoint;
mod error;
mod generation;
pub mod mock;
pub mod prompt;

pub use cache::{cache_key, ResponseCache};
pub use client::{ClientConfig, InferenceClient, RetryPolicy, SampleJob};
pub use endpoint::{completion_content, ChatEndpoint, HttpEndpoint, HttpEndpointConfig};
pub use error::{ClientError, EndpointError, Result};
pub use generation::{ChatMessage, ChatRequest, Generation, SamplingParams, DEFAULT_MAX_OUTPUT_TOKENS, DEFAULT_TEMPERATURE};
pub use mock::{MockEndpoint, MockReply, MockScript};
pub use prompt::{build_prompt, PromptBuilder, PromptContent, PromptTemplate};
