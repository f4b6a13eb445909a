//! Clients for the offline generative backends (scenario text model, image
//! synthesis model, fidelity scorer) and the similarity gate.
//!
//! Every backend has a deterministic local stand-in so the pipeline runs
//! without network access.

mod remote;
mod stub;

use std::time::Duration;

use thiserror::Error;

use crate::degrade::{io::ImageIoError, DegradeError, ImageBuffer};
use crate::scenario::FaultScenario;

pub use remote::{HttpReply, RemoteClient, Sleeper, Transport, TransportFailure, UreqTransport};
pub use stub::{expected_magnitude, StubScorer};

pub const ENV_LLM_URL: &str = "FAULTFORGE_LLM_URL";
pub const ENV_LDM_URL: &str = "FAULTFORGE_LDM_URL";
pub const ENV_CLIP_URL: &str = "FAULTFORGE_CLIP_URL";
pub const ENV_TOKEN: &str = "FAULTFORGE_TOKEN";

pub const DEFAULT_GATE_THRESHOLD: f64 = 0.25;
pub const MAX_RETRIES_LIMIT: u8 = 5;
pub const BACKOFF_BASE: Duration = Duration::from_millis(250);

#[derive(Debug, Error)]
pub enum GenAiError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    TransportError { attempts: u32, message: String },
    #[error("backend returned HTTP {status}")]
    BackendError { status: u16 },
    #[error("could not decode backend response: {0}")]
    DecodeError(String),
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("environment variable {0} is not set")]
    MissingEnv(&'static str),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Degrade(#[from] DegradeError),
    #[error(transparent)]
    Image(#[from] ImageIoError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendEndpoint {
    pub base_url: String,
    pub auth_token: Option<String>,
    pub timeout: Duration,
    pub max_retries: u8,
}

impl BackendEndpoint {
    pub fn new(
        base_url: impl Into<String>,
        auth_token: Option<String>,
        timeout: Duration,
        max_retries: u8,
    ) -> Result<Self, GenAiError> {
        let ep = Self { base_url: base_url.into(), auth_token, timeout, max_retries };
        ep.validate()?;
        Ok(ep)
    }

    /// Reads the URL from `url_var` and the bearer token from `FAULTFORGE_TOKEN`.
    pub fn from_env(url_var: &'static str, timeout: Duration, max_retries: u8) -> Result<Self, GenAiError> {
        let url = std::env::var(url_var).map_err(|_| GenAiError::MissingEnv(url_var))?;
        let token = std::env::var(ENV_TOKEN).ok().filter(|t| !t.is_empty());
        Self::new(url, token, timeout, max_retries)
    }

    pub fn validate(&self) -> Result<(), GenAiError> {
        if self.timeout.is_zero() {
            return Err(GenAiError::InvalidEndpoint("timeout must be positive".into()));
        }
        if self.max_retries > MAX_RETRIES_LIMIT {
            return Err(GenAiError::InvalidEndpoint(format!(
                "max_retries {} exceeds {MAX_RETRIES_LIMIT}",
                self.max_retries
            )));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(GenAiError::InvalidEndpoint(format!("unsupported url `{}`", self.base_url)));
        }
        Ok(())
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base_url.trim_end_matches('/'), path)
    }
}

/// Outcome of the fidelity gate for one synthesized image.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityScore {
    pub scenario_id: String,
    pub score: f64,
    pub threshold: f64,
    pub accepted: bool,
}

/// Splits scores into (accepted, rejected), preserving input order.
/// Acceptance is non-strict: `score >= threshold`.
pub fn gate(scores: &[(String, f64)], threshold: f64) -> (Vec<FidelityScore>, Vec<FidelityScore>) {
    scores
        .iter()
        .map(|(id, score)| FidelityScore {
            scenario_id: id.clone(),
            score: *score,
            threshold,
            accepted: *score >= threshold,
        })
        .partition(|f| f.accepted)
}

/// Image synthesis backend.
pub enum Synthesizer {
    /// Procedural degradation engine.
    LocalStub,
    Remote(RemoteClient),
}

impl Synthesizer {
    pub fn synth_image(&self, base: &ImageBuffer, scenario: &FaultScenario) -> Result<ImageBuffer, GenAiError> {
        base.check_size()?;
        match self {
            Synthesizer::LocalStub => Ok(crate::degrade::apply_fault(base, &scenario.into())?),
            Synthesizer::Remote(client) => {
                let out = client.synthesize(base, &scenario.description, scenario.strength)?;
                if (out.width(), out.height()) != (base.width(), base.height()) {
                    return Err(GenAiError::DecodeError(format!(
                        "backend returned {}x{} for a {}x{} base",
                        out.width(),
                        out.height(),
                        base.width(),
                        base.height()
                    )));
                }
                Ok(out)
            }
        }
    }
}

/// Everything a scorer may need for one image.
#[derive(Debug, Clone, Copy)]
pub struct ScoreRequest<'a> {
    pub image_id: &'a str,
    pub image: &'a ImageBuffer,
    pub description: &'a str,
    pub strength: f64,
}

/// Fidelity scoring backend.
pub enum Scorer {
    LocalStub(StubScorer),
    Remote(RemoteClient),
}

impl Scorer {
    /// Similarity in [-1, 1] between the image and its description.
    pub fn score_fidelity(&self, req: &ScoreRequest<'_>) -> Result<f64, GenAiError> {
        if req.description.trim().is_empty() {
            return Err(GenAiError::InvalidRequest("empty description".into()));
        }
        match self {
            Scorer::LocalStub(stub) => stub.score(req),
            Scorer::Remote(client) => client.score(req.image, req.description),
        }
    }
}
