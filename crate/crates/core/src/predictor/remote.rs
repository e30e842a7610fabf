//! HTTP client for an external prediction server.
//!
//! Wire format (JSON over `POST`):
//!
//! ```text
//! request:  {"context": [ids], "direction": "forward"|"backward", "k": n}
//! response: {"candidates": [{"id": int, "score": number}, ...]}
//! ```
//!
//! The context travels in model order, exactly as [`Predictor::predict`]
//! receives it.

use std::collections::HashSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Candidate, Direction, PredictError, Prediction, Predictor};
use crate::tokenizer::TokenId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub context: Vec<TokenId>,
    pub direction: Direction,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCandidate {
    pub id: i64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub candidates: Vec<WireCandidate>,
}

impl From<&Prediction> for PredictResponse {
    fn from(p: &Prediction) -> Self {
        Self {
            candidates: p
                .candidates()
                .iter()
                .map(|c| WireCandidate { id: c.id as i64, score: c.score })
                .collect(),
        }
    }
}

pub struct RemotePredictor {
    endpoint: String,
    vocab_size: usize,
    agent: ureq::Agent,
}

impl RemotePredictor {
    /// `endpoint` is the full URL of the predict route.
    pub fn new(endpoint: impl Into<String>, vocab_size: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        Self { endpoint: endpoint.into(), vocab_size, agent }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn malformed(&self, message: impl Into<String>) -> PredictError {
        PredictError::Malformed { endpoint: self.endpoint.clone(), message: message.into() }
    }

    /// Checks the response and shapes it into exactly `k` candidates.
    ///
    /// Surplus candidates are dropped; missing ones are filled with the
    /// lowest unused ids at score zero. Runs of equal scores are re-ordered
    /// by ascending id.
    pub fn validate(&self, response: PredictResponse, direction: Direction, k: usize) -> Result<Prediction, PredictError> {
        if k == 0 {
            return Err(PredictError::ZeroK);
        }
        if k > self.vocab_size {
            return Err(PredictError::KTooLarge { k, vocab_size: self.vocab_size });
        }
        let mut seen = HashSet::new();
        let mut candidates = Vec::with_capacity(k);
        for c in &response.candidates {
            if c.id < 0 || c.id as usize >= self.vocab_size {
                return Err(self.malformed(format!("token id {} outside vocabulary of {}", c.id, self.vocab_size)));
            }
            let id = c.id as TokenId;
            if !seen.insert(id) {
                return Err(self.malformed(format!("duplicate token id {id}")));
            }
            if !c.score.is_finite() || c.score < 0.0 {
                return Err(self.malformed(format!("score {} of token {id} is not finite and non-negative", c.score)));
            }
            if candidates.last().is_some_and(|prev: &Candidate| c.score > prev.score) {
                return Err(self.malformed("scores are not non-increasing"));
            }
            candidates.push(Candidate { id, score: c.score });
        }
        // stable: only equal-score runs move
        candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
        candidates.truncate(k);
        let mut next_free = 0;
        while candidates.len() < k {
            while seen.contains(&next_free) {
                next_free += 1;
            }
            seen.insert(next_free);
            candidates.push(Candidate { id: next_free, score: 0.0 });
        }
        // zero-score padding must itself be id-ordered among trailing zeros
        candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
        Prediction::new(candidates, direction, k)
    }
}

impl Predictor for RemotePredictor {
    fn predict(&self, context: &[TokenId], direction: Direction, k: usize) -> Result<Prediction, PredictError> {
        let request = PredictRequest { context: context.to_vec(), direction, k };
        let mut response = self.agent.post(&self.endpoint).send_json(&request).map_err(|e| PredictError::Network {
            endpoint: self.endpoint.clone(),
            message: e.to_string(),
        })?;
        let body: PredictResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| self.malformed(e.to_string()))?;
        self.validate(body, direction, k)
    }
}
