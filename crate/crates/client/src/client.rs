use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use futures::future::join_all;
use log::{debug, warn};
use tokio::sync::Semaphore;

use crate::cache::ResponseCache;
use crate::endpoint::ChatEndpoint;
use crate::error::{ClientError, EndpointError, Result};
use crate::generation::{ChatRequest, Generation, SamplingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts per request, including the first.
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 4, base_delay: Duration::from_millis(500), max_delay: Duration::from_secs(8) }
    }
}

impl RetryPolicy {
    /// Wait before attempt `attempt + 1` (attempts count from 1).
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClientConfig {
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self { max_in_flight: 16, retry: RetryPolicy::default() }
    }
}

/// One instance's prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleJob {
    pub instance_id: String,
    pub prompt: String,
}

enum Outcome {
    Done(Generation),
    Unreachable(String),
    Skipped,
    Failed(ClientError),
}

/// Issues k seeded requests per prompt with bounded concurrency, retries and caching.
pub struct InferenceClient {
    endpoint: Arc<dyn ChatEndpoint>,
    cache: Option<ResponseCache>,
    permits: Semaphore,
    retry: RetryPolicy,
    network_calls: AtomicUsize,
    cache_hits: AtomicUsize,
}

impl InferenceClient {
    pub fn new(endpoint: Arc<dyn ChatEndpoint>, config: ClientConfig) -> Result<Self> {
        if config.max_in_flight == 0 {
            return Err(ClientError::Config("max_in_flight must be at least 1".into()));
        }
        if config.retry.max_attempts == 0 {
            return Err(ClientError::Config("retry.max_attempts must be at least 1".into()));
        }
        Ok(Self {
            endpoint,
            cache: None,
            permits: Semaphore::new(config.max_in_flight),
            retry: config.retry,
            network_calls: AtomicUsize::new(0),
            cache_hits: AtomicUsize::new(0),
        })
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    /// Endpoint calls issued so far, retries included.
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> usize {
        self.cache_hits.load(Ordering::SeqCst)
    }

    /// k generations for one prompt, ordered by run index.
    pub async fn sample_k(&self, instance_id: &str, prompt: &str, k: usize, params: &SamplingParams) -> Result<Vec<Generation>> {
        let job = SampleJob { instance_id: instance_id.to_string(), prompt: prompt.to_string() };
        Ok(self.sample_batch(std::slice::from_ref(&job), k, params).await?.remove(0))
    }

    /// k generations for every job, all requests sharing one in-flight limit.
    ///
    /// A request that still fails after retries yields a failed [`Generation`].
    /// If the endpoint is unreachable, pending requests are abandoned and a
    /// transport error carries every generation that completed.
    pub async fn sample_batch(&self, jobs: &[SampleJob], k: usize, params: &SamplingParams) -> Result<Vec<Vec<Generation>>> {
        if k == 0 {
            return Err(ClientError::Config("k must be at least 1".into()));
        }
        let abort = AtomicBool::new(false);
        let requests: Vec<ChatRequest> = jobs
            .iter()
            .flat_map(|j| (0..k).map(move |run| ChatRequest::new(&j.instance_id, run, &j.prompt, params)))
            .collect();
        let outcomes = join_all(requests.iter().map(|r| self.run_one(r, &abort))).await;

        let mut unreachable = None;
        let mut done = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            match o {
                Outcome::Done(g) => done.push(g),
                Outcome::Unreachable(m) => unreachable = unreachable.or(Some(m)),
                Outcome::Skipped => {}
                Outcome::Failed(e) => return Err(e),
            }
        }
        if let Some(message) = unreachable {
            return Err(ClientError::Transport { message, partial: done });
        }
        let mut out: Vec<Vec<Generation>> = Vec::with_capacity(jobs.len());
        let mut it = done.into_iter();
        for _ in jobs {
            out.push(it.by_ref().take(k).collect());
        }
        Ok(out)
    }

    async fn run_one(&self, req: &ChatRequest, abort: &AtomicBool) -> Outcome {
        let started = Instant::now();
        let generation = |text: Option<String>, failure: Option<String>, cache_hit: bool| Generation {
            instance_id: req.instance_id.clone(),
            run_index: req.run_index,
            seed: req.seed,
            text,
            failure,
            cache_hit,
            latency: started.elapsed(),
        };
        if let Some(cache) = &self.cache {
            match cache.get(req) {
                Ok(Some(text)) => {
                    self.cache_hits.fetch_add(1, Ordering::SeqCst);
                    return Outcome::Done(generation(Some(text), None, true));
                }
                Ok(None) => {}
                Err(e) => return Outcome::Failed(e),
            }
        }

        let mut attempt = 0;
        loop {
            attempt += 1;
            let result = {
                let _permit = self.permits.acquire().await.expect("semaphore is never closed");
                if abort.load(Ordering::SeqCst) {
                    return Outcome::Skipped;
                }
                self.network_calls.fetch_add(1, Ordering::SeqCst);
                self.endpoint.complete(req).await
            };
            match result {
                Ok(text) => {
                    if let Some(cache) = &self.cache {
                        if let Err(e) = cache.put(req, &text) {
                            return Outcome::Failed(e);
                        }
                    }
                    return Outcome::Done(generation(Some(text), None, false));
                }
                Err(e) if e.is_retryable() && attempt < self.retry.max_attempts => {
                    debug!("{} run {}: attempt {attempt} failed ({e}); retrying", req.instance_id, req.run_index);
                    tokio::time::sleep(self.retry.delay(attempt)).await;
                }
                Err(EndpointError::Unreachable(m)) => {
                    abort.store(true, Ordering::SeqCst);
                    return Outcome::Unreachable(m);
                }
                Err(e) => {
                    warn!("{} run {}: giving up after {attempt} attempt(s): {e}", req.instance_id, req.run_index);
                    return Outcome::Done(generation(None, Some(e.to_string()), false));
                }
            }
        }
    }
}
