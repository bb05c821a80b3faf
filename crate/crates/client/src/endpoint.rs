use std::time::Duration;

use async_trait::async_trait;
use serde_json::Value;

use crate::error::{ClientError, EndpointError, Result};
use crate::generation::ChatRequest;

/// Anything that turns a chat request into completion text.
#[async_trait]
pub trait ChatEndpoint: Send + Sync {
    async fn complete(&self, req: &ChatRequest) -> std::result::Result<String, EndpointError>;
}

#[derive(Debug, Clone)]
pub struct HttpEndpointConfig {
    /// Base URL up to and including the API version, e.g. `http://localhost:8000/v1`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl HttpEndpointConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self { base_url: base_url.into(), api_key: None, timeout: Duration::from_secs(120) }
    }
}

/// OpenAI-compatible `POST {base_url}/chat/completions`.
#[derive(Debug, Clone)]
pub struct HttpEndpoint {
    client: reqwest::Client,
    url: String,
    api_key: Option<String>,
}

impl HttpEndpoint {
    pub fn new(config: HttpEndpointConfig) -> Result<Self> {
        let client = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ClientError::Config(format!("HTTP client: {e}")))?;
        let url = format!("{}/chat/completions", config.base_url.trim_end_matches('/'));
        Ok(Self { client, url, api_key: config.api_key })
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

/// `choices[0].message.content` of a chat completion response.
pub fn completion_content(body: &Value) -> Option<&str> {
    body.get("choices")?.get(0)?.get("message")?.get("content")?.as_str()
}

#[async_trait]
impl ChatEndpoint for HttpEndpoint {
    async fn complete(&self, req: &ChatRequest) -> std::result::Result<String, EndpointError> {
        let mut builder = self.client.post(&self.url).json(req);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let resp = builder.send().await.map_err(|e| {
            if e.is_connect() || e.is_timeout() || e.is_request() {
                EndpointError::Unreachable(e.to_string())
            } else {
                EndpointError::Transient(e.to_string())
            }
        })?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(EndpointError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err(EndpointError::Permanent(format!("HTTP {status}: {}", body.chars().take(200).collect::<String>())));
        }
        let body: Value = resp
            .json()
            .await
            .map_err(|e| EndpointError::Transient(format!("reading response body: {e}")))?;
        completion_content(&body)
            .map(str::to_string)
            .ok_or_else(|| EndpointError::Permanent("response has no choices[0].message.content".into()))
    }
}
