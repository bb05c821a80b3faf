//! Scripted endpoint for hermetic runs and tests.
//!
//! Fixture file:
//!
//! ```json
//! {
//!   "default": ["[]"],
//!   "instances": {
//!     "r1": ["[...]", {"fail": "permanent"}, {"fail": "transient", "times": 2, "then": "[...]"}]
//!   }
//! }
//! ```
//!
//! Run `i` of an instance gets reply `i mod len` of its script. A `fail`
//! reply errors on every attempt, or only on the first `times` attempts
//! before answering `then`. Instances without a script use `default`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use async_trait::async_trait;
use serde::Deserialize;

use crate::endpoint::ChatEndpoint;
use crate::error::{ClientError, EndpointError, Result};
use crate::generation::ChatRequest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailKind {
    Unreachable,
    Transient,
    Permanent,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum MockReply {
    Text(String),
    Fail {
        fail: FailKind,
        #[serde(default)]
        times: Option<u32>,
        #[serde(default)]
        then: Option<String>,
    },
}

impl MockReply {
    pub fn text(s: impl Into<String>) -> Self {
        MockReply::Text(s.into())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    #[serde(default)]
    pub default: Vec<MockReply>,
    #[serde(default)]
    pub instances: HashMap<String, Vec<MockReply>>,
}

impl MockScript {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let fixture = |message: String| ClientError::Fixture { path: path.to_path_buf(), message };
        let text = fs::read_to_string(path).map_err(|e| fixture(e.to_string()))?;
        let script: MockScript = serde_json::from_str(&text).map_err(|e| fixture(e.to_string()))?;
        for (id, replies) in script.instances.iter().map(|(k, v)| (k.as_str(), v)).chain([("default", &script.default)]) {
            for r in replies {
                if let MockReply::Fail { times: Some(_), then: None, .. } = r {
                    return Err(fixture(format!("{id}: a reply with \"times\" needs \"then\"")));
                }
            }
        }
        Ok(script)
    }
}

#[derive(Debug, Default)]
pub struct MockEndpoint {
    script: MockScript,
    delay: Duration,
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    attempts: Mutex<HashMap<(String, usize), u32>>,
}

struct InFlight<'a>(&'a AtomicUsize);

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::SeqCst);
    }
}

impl MockEndpoint {
    pub fn new(script: MockScript) -> Self {
        Self { script, ..Default::default() }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(MockScript::load(path)?))
    }

    /// Every call fails as unreachable.
    pub fn unreachable() -> Self {
        Self::new(MockScript {
            default: vec![MockReply::Fail { fail: FailKind::Unreachable, times: None, then: None }],
            instances: HashMap::new(),
        })
    }

    /// Hold each call open for `delay`, to make overlap observable.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    fn reply_for(&self, req: &ChatRequest) -> Option<&MockReply> {
        let script = self.script.instances.get(&req.instance_id).unwrap_or(&self.script.default);
        if script.is_empty() {
            return None;
        }
        Some(&script[req.run_index % script.len()])
    }
}

#[async_trait]
impl ChatEndpoint for MockEndpoint {
    async fn complete(&self, req: &ChatRequest) -> std::result::Result<String, EndpointError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        let _guard = InFlight(&self.in_flight);
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        if !self.delay.is_zero() {
            tokio::time::sleep(self.delay).await;
        }

        let attempt = {
            let mut map = self.attempts.lock().expect("attempt counter lock");
            let n = map.entry((req.instance_id.clone(), req.run_index)).or_insert(0);
            *n += 1;
            *n
        };
        match self.reply_for(req) {
            None => Err(EndpointError::Permanent(format!("no scripted reply for instance {}", req.instance_id))),
            Some(MockReply::Text(t)) => Ok(t.clone()),
            Some(MockReply::Fail { fail, times, then }) => {
                if let (Some(times), Some(then)) = (times, then) {
                    if attempt > *times {
                        return Ok(then.clone());
                    }
                }
                let msg = format!("scripted failure for {} run {}", req.instance_id, req.run_index);
                Err(match fail {
                    FailKind::Unreachable => EndpointError::Unreachable(msg),
                    FailKind::Transient => EndpointError::Transient(msg),
                    FailKind::Permanent => EndpointError::Permanent(msg),
                })
            }
        }
    }
}
