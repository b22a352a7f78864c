//! Embedding providers and cosine similarity.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{tokenize, PosHint};

pub const DEFAULT_DIM: usize = 256;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("embedding provider {provider}: {message}")]
    Provider { provider: String, message: String },
}

/// Dense embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector(pub Vec<f64>);

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

/// Cosine similarity; 0.0 when either vector has zero norm.
pub fn cosine(u: &Vector, v: &Vector) -> Result<f64, EmbedError> {
    if u.dim() != v.dim() {
        return Err(EmbedError::DimensionMismatch(u.dim(), v.dim()));
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = u.0.iter().zip(&v.0).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Source of text embeddings. Implementations must be deterministic for a
/// given id and configuration, and always return `dim()` components.
pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> &str;

    fn dim(&self) -> usize;

    fn embed(&self, text: &str) -> Result<Vector, EmbedError>;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vector>, EmbedError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

pub fn embed_text(provider: &dyn EmbeddingProvider, text: &str) -> Result<Vector, EmbedError> {
    provider.embed(text)
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Hashed term-frequency embedding over content tokens, L2-normalized.
#[derive(Debug, Clone)]
pub struct HashedTf {
    dim: usize,
}

impl HashedTf {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashedTf { dim }
    }

    pub fn bucket(&self, norm: &str) -> usize {
        (fnv1a64(norm.as_bytes()) % self.dim as u64) as usize
    }
}

impl Default for HashedTf {
    fn default() -> Self {
        HashedTf::new(DEFAULT_DIM)
    }
}

impl EmbeddingProvider for HashedTf {
    fn id(&self) -> &str {
        "hashed-tf"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vector, EmbedError> {
        let mut v = vec![0.0; self.dim];
        for tok in tokenize(text) {
            if tok.pos_hint == PosHint::Content {
                v[self.bucket(&tok.norm)] += 1.0;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(Vector(v))
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Remote provider: POSTs `{"texts":[...]}` and reads `{"vectors":[[...]]}`.
pub struct HttpProvider {
    url: String,
    dim: usize,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(url: impl Into<String>, dim: usize, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpProvider {
            url: url.into(),
            dim,
            agent,
        }
    }

    fn fail(&self, message: impl Into<String>) -> EmbedError {
        EmbedError::Provider {
            provider: self.url.clone(),
            message: message.into(),
        }
    }
}

impl EmbeddingProvider for HttpProvider {
    fn id(&self) -> &str {
        "http"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vector, EmbedError> {
        let mut out = self.embed_batch(&[text.to_string()])?;
        Ok(out.remove(0))
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vector>, EmbedError> {
        let body = serde_json::to_string(&EmbedRequest { texts })
            .map_err(|e| self.fail(e.to_string()))?;
        let raw = self
            .agent
            .post(&self.url)
            .header("Accept", "application/json")
            .content_type("application/json")
            .send(body)
            .and_then(|mut r| r.body_mut().read_to_string())
            .map_err(|e| self.fail(e.to_string()))?;
        let resp: EmbedResponse =
            serde_json::from_str(&raw).map_err(|e| self.fail(format!("bad response: {e}")))?;
        if resp.vectors.len() != texts.len() {
            return Err(self.fail(format!(
                "expected {} vectors, got {}",
                texts.len(),
                resp.vectors.len()
            )));
        }
        resp.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    Err(self.fail(format!("expected dim {}, got {}", self.dim, v.len())))
                } else if v.iter().any(|x| !x.is_finite()) {
                    Err(self.fail("non-finite component"))
                } else {
                    Ok(Vector(v))
                }
            })
            .collect()
    }
}
