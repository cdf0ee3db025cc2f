//! Client side of the text-generation contract.
//!
//! A service answers `POST /generate` with a JSON body
//! `{prompt, n, max_new_tokens, temperature, seed}` and replies with
//! `{continuations, model_id}`, where each continuation is the text that
//! follows the prompt. `schema/generation.schema.json` holds the same
//! contract for other implementations.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const DEFAULT_MAX_NEW_TOKENS: usize = 40;
pub const DEFAULT_TEMPERATURE: f64 = 0.9;
pub const DEFAULT_TIMEOUT_SECS: u64 = 60;
pub const DEFAULT_RETRIES: u32 = 3;
pub const DEFAULT_PARALLELISM: usize = 4;
/// Environment variable consulted when no endpoint is configured.
pub const ENDPOINT_ENV: &str = "FCGEN_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub n: usize,
    pub max_new_tokens: usize,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, n: usize) -> Self {
        GenerationRequest {
            prompt: prompt.into(),
            n,
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            temperature: DEFAULT_TEMPERATURE,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.prompt.is_empty() {
            return Err(GenError::InvalidRequest("prompt is empty".into()));
        }
        if self.n == 0 {
            return Err(GenError::InvalidRequest("n must be at least 1".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(GenError::InvalidRequest("max_new_tokens must be at least 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GenError::InvalidRequest(format!("temperature {} is not a non-negative number", self.temperature)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub continuations: Vec<String>,
    pub model_id: String,
}

impl GenerationResponse {
    /// Checks a decoded JSON body against the contract. Unknown extra
    /// fields are tolerated; missing or mistyped ones are not.
    pub fn from_json(body: &str, request: &GenerationRequest) -> Result<Self, GenError> {
        let value: Value = serde_json::from_str(body).map_err(|e| GenError::Schema(format!("body is not JSON: {e}")))?;
        let obj = value.as_object().ok_or_else(|| GenError::Schema("body is not a JSON object".into()))?;
        let model_id = match obj.get("model_id") {
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(GenError::Schema("model_id is not a string".into())),
            None => return Err(GenError::Schema("missing model_id".into())),
        };
        let items = match obj.get("continuations") {
            Some(Value::Array(items)) => items,
            Some(_) => return Err(GenError::Schema("continuations is not an array".into())),
            None => return Err(GenError::Schema("missing continuations".into())),
        };
        let mut continuations = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            match item {
                Value::String(s) => continuations.push(s.clone()),
                _ => return Err(GenError::Schema(format!("continuations[{i}] is not a string"))),
            }
        }
        if continuations.len() > request.n {
            return Err(GenError::Schema(format!("{} continuations for n = {}", continuations.len(), request.n)));
        }
        Ok(GenerationResponse { continuations, model_id })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("could not reach {endpoint} after {attempts} attempts: {message}")]
    Connection { endpoint: String, attempts: u32, message: String },
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("response violates the generation schema: {0}")]
    Schema(String),
}

/// Anything that can answer generation requests. Implementations are
/// shared across worker threads.
pub trait Generator: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, GenError>;
}

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub timeout: Duration,
    /// Extra attempts after the first one for transient failures.
    pub retries: u32,
    /// Delay before the first retry; doubles on every further one.
    pub backoff: Duration,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            timeout: Duration::from_secs(DEFAULT_TIMEOUT_SECS),
            retries: DEFAULT_RETRIES,
            backoff: Duration::from_millis(500),
        }
    }
}

pub struct HttpGenerator {
    agent: ureq::Agent,
    url: String,
    config: HttpConfig,
}

impl HttpGenerator {
    /// `base` is the service root, e.g. `http://127.0.0.1:8000`; the
    /// `/generate` path is appended unless already present.
    pub fn new(base: &str, config: HttpConfig) -> Self {
        let base = base.trim_end_matches('/');
        let url = if base.ends_with("/generate") { base.to_string() } else { format!("{base}/generate") };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpGenerator { agent, url, config }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(&self, body: &str) -> Attempt {
        let sent = self.agent.post(&self.url).header("content-type", "application/json").send(body);
        let mut resp = match sent {
            Ok(r) => r,
            Err(e) => return Attempt::Transient(GenError::Connection { endpoint: self.url.clone(), attempts: 0, message: e.to_string() }),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Transient(GenError::Connection { endpoint: self.url.clone(), attempts: 0, message: e.to_string() }),
        };
        match status {
            200..=299 => Attempt::Done(text),
            429 | 500..=599 => Attempt::Transient(GenError::Status { status, body: text }),
            _ => Attempt::Fatal(GenError::Status { status, body: text }),
        }
    }
}

enum Attempt {
    Done(String),
    Transient(GenError),
    Fatal(GenError),
}

impl Generator for HttpGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, GenError> {
        request.validate()?;
        let body = serde_json::to_string(request).expect("request serializes");
        let attempts = self.config.retries + 1;
        let mut delay = self.config.backoff;
        let mut last = None;
        for attempt in 1..=attempts {
            log::debug!("POST {} attempt {attempt}: {body}", self.url);
            match self.attempt(&body) {
                Attempt::Done(text) => {
                    log::debug!("response from {}: {text}", self.url);
                    return GenerationResponse::from_json(&text, request);
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Transient(e) => {
                    log::warn!("generation attempt {attempt}/{attempts} failed: {e}");
                    last = Some(e);
                    if attempt < attempts {
                        thread::sleep(delay);
                        delay = delay.saturating_mul(2);
                    }
                }
            }
        }
        Err(match last.expect("at least one attempt") {
            GenError::Connection { endpoint, message, .. } => GenError::Connection { endpoint, attempts, message },
            other => other,
        })
    }
}

/// Deterministic stand-in for a language model.
///
/// In bank mode a request receives `min(n, per_prompt)` distinct endings
/// from a fixed bank, read in a rotation whose starting point is derived
/// from the prompt and the request seed. The answer is a pure function of
/// the request, so identical runs produce identical files. With the
/// default `per_prompt` of 9 every sample gets nine acceptable
/// continuations from its first request.
///
/// A scripted stub instead returns its configured strings verbatim.
#[derive(Debug, Clone)]
pub struct StubGenerator {
    bank: Vec<String>,
    per_prompt: usize,
    scripted: bool,
    model_id: String,
}

pub const STUB_MODEL_ID: &str = "stub-v1";

const STUB_ENDINGS: [&str; 12] = [
    ", so that we can be independent.",
    "when we are older.",
    "every day.",
    "at home.",
    "for a long time.",
    "in the future.",
    "with our friends.",
    "after school.",
    "on the weekend.",
    "because it is important.",
    "in our country.",
    "without any problems.",
];

impl Default for StubGenerator {
    fn default() -> Self {
        StubGenerator::with_limit(9)
    }
}

impl StubGenerator {
    /// Bank mode returning at most `per_prompt` endings per request.
    pub fn with_limit(per_prompt: usize) -> Self {
        assert!(per_prompt <= STUB_ENDINGS.len(), "the stub bank has only {} endings", STUB_ENDINGS.len());
        StubGenerator {
            bank: STUB_ENDINGS.iter().map(|s| s.to_string()).collect(),
            per_prompt,
            scripted: false,
            model_id: STUB_MODEL_ID.into(),
        }
    }

    /// Always answers with `outputs` (truncated to `n`), whatever the prompt.
    pub fn scripted(outputs: Vec<String>) -> Self {
        StubGenerator { per_prompt: outputs.len(), bank: outputs, scripted: true, model_id: STUB_MODEL_ID.into() }
    }
}

impl Generator for StubGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, GenError> {
        request.validate()?;
        let take = request.n.min(self.per_prompt);
        let continuations = if self.scripted {
            self.bank.iter().take(take).cloned().collect()
        } else {
            let key = fcgen_core::augment::stable_hash(&request.prompt) ^ request.seed.unwrap_or(0);
            let offset = (key % self.bank.len() as u64) as usize;
            (0..take).map(|i| self.bank[(offset + i) % self.bank.len()].clone()).collect()
        };
        Ok(GenerationResponse { continuations, model_id: self.model_id.clone() })
    }
}

/// Runs `job` over `items` with at most `workers` in flight and returns
/// the results in input order.
pub fn run_bounded<T, R, F>(items: &[T], workers: usize, job: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = job(&items[i]);
                *slots[i].lock().expect("result slot poisoned") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("result slot poisoned").expect("every item processed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(n: usize) -> GenerationRequest {
        GenerationRequest::new("they can help their father or mother about money", n)
    }

    #[test]
    fn request_validation() {
        assert!(req(1).validate().is_ok());
        assert!(matches!(req(0).validate(), Err(GenError::InvalidRequest(_))));
        let mut r = req(1);
        r.prompt.clear();
        assert!(r.validate().is_err());
        r = req(1);
        r.temperature = f64::NAN;
        assert!(r.validate().is_err());
    }

    #[test]
    fn request_serializes_without_absent_seed() {
        let json = serde_json::to_string(&req(3)).unwrap();
        assert_eq!(
            json,
            r#"{"prompt":"they can help their father or mother about money","n":3,"max_new_tokens":40,"temperature":0.9}"#
        );
    }

    #[test]
    fn response_schema_checks() {
        let r = req(2);
        let ok = GenerationResponse::from_json(r#"{"continuations":["a."],"model_id":"m","extra":1}"#, &r).unwrap();
        assert_eq!(ok.continuations, vec!["a."]);
        for bad in [
            "not json",
            "[]",
            r#"{"model_id":"m"}"#,
            r#"{"continuations":"a","model_id":"m"}"#,
            r#"{"continuations":[1],"model_id":"m"}"#,
            r#"{"continuations":[]}"#,
            r#"{"continuations":["a","b","c"],"model_id":"m"}"#,
        ] {
            assert!(matches!(GenerationResponse::from_json(bad, &r), Err(GenError::Schema(_))), "{bad}");
        }
    }

    #[test]
    fn stub_is_a_function_of_the_request() {
        let a = StubGenerator::default();
        let first = a.generate(&req(10)).unwrap().continuations;
        assert_eq!(first.len(), 9);
        assert_eq!(first, a.generate(&req(10)).unwrap().continuations);
        assert_eq!(first, StubGenerator::default().generate(&req(10)).unwrap().continuations);
        let mut sorted = first.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 9);
        assert_eq!(a.generate(&req(3)).unwrap().continuations, first[..3]);
    }

    #[test]
    fn scripted_stub_echoes() {
        let s = StubGenerator::scripted(vec![", so that we can be independent.".into()]);
        let r = s.generate(&req(3)).unwrap();
        assert_eq!(r.continuations, vec![", so that we can be independent."]);
        assert_eq!(r.model_id, STUB_MODEL_ID);
    }

    #[test]
    fn bounded_runner_keeps_order() {
        let items: Vec<usize> = (0..50).collect();
        let out = run_bounded(&items, 4, |x| x * 2);
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert!(run_bounded(&Vec::<usize>::new(), 4, |x| *x).is_empty());
    }
}
