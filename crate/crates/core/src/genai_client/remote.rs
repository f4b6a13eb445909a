use std::sync::Arc;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde_json::{json, Value};

use super::{BackendEndpoint, GenAiError, BACKOFF_BASE};
use crate::degrade::{io, ImageBuffer};
use crate::scenario::{parse_scenario_file, FaultCategory, FaultScenario, ScenarioFormat};

/// Raw HTTP response as seen by the retry loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// Connection-level failure (refused, reset, timed out).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportFailure(pub String);

/// One JSON POST. Implementations must not retry on their own.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        token: Option<&str>,
        timeout: Duration,
        body: &str,
    ) -> Result<HttpReply, TransportFailure>;
}

/// Blocking HTTP transport.
#[derive(Debug, Default, Clone, Copy)]
pub struct UreqTransport;

const MAX_BODY_BYTES: u64 = 64 * 1024 * 1024;

impl Transport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        token: Option<&str>,
        timeout: Duration,
        body: &str,
    ) -> Result<HttpReply, TransportFailure> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(url).header("Content-Type", "application/json");
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let mut resp = req.send(body).map_err(|e| TransportFailure(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(MAX_BODY_BYTES)
            .read_to_string()
            .map_err(|e| TransportFailure(e.to_string()))?;
        Ok(HttpReply { status, body })
    }
}

pub type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

/// JSON-over-HTTP client with exponential backoff (`250 ms * 2^k`).
/// Immutable after construction; safe to share across threads.
#[derive(Clone)]
pub struct RemoteClient {
    endpoint: BackendEndpoint,
    transport: Arc<dyn Transport>,
    sleeper: Sleeper,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient").field("endpoint", &self.endpoint).finish_non_exhaustive()
    }
}

impl RemoteClient {
    pub fn new(endpoint: BackendEndpoint) -> Result<Self, GenAiError> {
        Self::with_transport(endpoint, Arc::new(UreqTransport), Arc::new(std::thread::sleep))
    }

    pub fn with_transport(
        endpoint: BackendEndpoint,
        transport: Arc<dyn Transport>,
        sleeper: Sleeper,
    ) -> Result<Self, GenAiError> {
        endpoint.validate()?;
        Ok(Self { endpoint, transport, sleeper })
    }

    pub fn endpoint(&self) -> &BackendEndpoint {
        &self.endpoint
    }

    /// Posts `body` to `path`. 5xx replies and transport failures are retried
    /// up to `max_retries` times; 4xx replies fail immediately.
    pub fn call(&self, path: &str, body: &Value) -> Result<Value, GenAiError> {
        let url = self.endpoint.url(path);
        let payload = body.to_string();
        let attempts = self.endpoint.max_retries as u32 + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                (self.sleeper)(BACKOFF_BASE * 2u32.pow(attempt - 1));
            }
            match self.transport.post_json(&url, self.endpoint.auth_token.as_deref(), self.endpoint.timeout, &payload)
            {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    return serde_json::from_str(&reply.body).map_err(|e| GenAiError::DecodeError(e.to_string()));
                }
                Ok(reply) if reply.status >= 500 => last = format!("HTTP {}", reply.status),
                Ok(reply) => return Err(GenAiError::BackendError { status: reply.status }),
                Err(TransportFailure(msg)) => last = msg,
            }
        }
        Err(GenAiError::TransportError { attempts, message: last })
    }

    /// `POST /v1/synthesize {image_b64, prompt, strength} -> {image_b64}`
    pub fn synthesize(&self, base: &ImageBuffer, prompt: &str, strength: f64) -> Result<ImageBuffer, GenAiError> {
        let body = json!({
            "image_b64": B64.encode(io::encode_png(base)?),
            "prompt": prompt,
            "strength": strength,
        });
        let reply = self.call("/v1/synthesize", &body)?;
        let b64 = reply
            .get("image_b64")
            .and_then(Value::as_str)
            .ok_or_else(|| GenAiError::DecodeError("missing `image_b64`".into()))?;
        let png = B64.decode(b64).map_err(|e| GenAiError::DecodeError(e.to_string()))?;
        io::decode_png(&png).map_err(|e| GenAiError::DecodeError(e.to_string()))
    }

    /// `POST /v1/score {image_b64, text} -> {score}`
    pub fn score(&self, image: &ImageBuffer, text: &str) -> Result<f64, GenAiError> {
        let body = json!({ "image_b64": B64.encode(io::encode_png(image)?), "text": text });
        let reply = self.call("/v1/score", &body)?;
        let score = reply
            .get("score")
            .and_then(Value::as_f64)
            .ok_or_else(|| GenAiError::DecodeError("missing numeric `score`".into()))?;
        if !(-1.0..=1.0).contains(&score) {
            return Err(GenAiError::DecodeError(format!("score {score} outside [-1, 1]")));
        }
        Ok(score)
    }

    /// `POST /v1/scenarios {category, count, seed} -> {text}` where `text`
    /// uses the pipe-delimited scenario format.
    pub fn generate_scenarios(
        &self,
        category: FaultCategory,
        count: usize,
        seed: u64,
    ) -> Result<Vec<FaultScenario>, GenAiError> {
        let body = json!({ "category": category.name(), "count": count, "seed": seed });
        let reply = self.call("/v1/scenarios", &body)?;
        let text = reply
            .get("text")
            .and_then(Value::as_str)
            .ok_or_else(|| GenAiError::DecodeError("missing `text`".into()))?;
        parse_scenario_file(text.as_bytes(), ScenarioFormat::PipeText)
            .map_err(|e| GenAiError::DecodeError(e.to_string()))
    }
}
