//! Ranked top-k next-token prediction in either writing direction.
//!
//! A [`Predictor`] receives its context in *model order*: reading order for
//! forward queries, reversed for backward queries. Backward models are
//! trained on reversed sequences, so a backward query asks "which token
//! comes next in the reversed text", i.e. which token precedes the context.

mod bidirectional;
mod ngram;
mod remote;
mod scripted;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::TokenId;

pub use bidirectional::{BidirectionalMode, BidirectionalPredictor};
pub use ngram::{train_ngram, NgramModel, DEFAULT_DISCOUNT};
pub use remote::{PredictRequest, PredictResponse, RemotePredictor, WireCandidate};
pub use scripted::ScriptedPredictor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(format!("unknown direction `{other}` (expected forward or backward)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the vocabulary size {vocab_size}")]
    KTooLarge { k: usize, vocab_size: usize },
    #[error("{0} prediction is not supported by this predictor")]
    Unsupported(Direction),
    #[error("invalid prediction: {0}")]
    Invalid(String),
    #[error("no scripted prediction for step {step}")]
    Unscripted { step: usize },
    #[error("training input has no non-empty sequence")]
    EmptyTraining,
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("discount {0} must lie strictly between 0 and 1")]
    BadDiscount(f64),
    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    IdOutOfRange { id: TokenId, vocab_size: usize },
    #[error("request to {endpoint} failed: {message}")]
    Network { endpoint: String, message: String },
    #[error("malformed response from {endpoint}: {message}")]
    Malformed { endpoint: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: TokenId,
    pub score: f64,
}

/// Exactly `k` distinct candidates, best first.
///
/// Scores are finite, non-negative and non-increasing; equal scores are
/// ordered by ascending token id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    candidates: Vec<Candidate>,
    direction: Direction,
}

impl Prediction {
    pub fn new(candidates: Vec<Candidate>, direction: Direction, k: usize) -> Result<Self, PredictError> {
        if k == 0 {
            return Err(PredictError::ZeroK);
        }
        if candidates.len() != k {
            return Err(PredictError::Invalid(format!(
                "expected {k} candidates, got {}",
                candidates.len()
            )));
        }
        let mut seen = HashSet::with_capacity(k);
        for c in &candidates {
            if !seen.insert(c.id) {
                return Err(PredictError::Invalid(format!("duplicate token id {}", c.id)));
            }
            if !c.score.is_finite() || c.score < 0.0 {
                return Err(PredictError::Invalid(format!("score {} of token {} is not a finite non-negative number", c.score, c.id)));
            }
        }
        for w in candidates.windows(2) {
            if w[1].score > w[0].score {
                return Err(PredictError::Invalid("scores are not non-increasing".into()));
            }
            if w[1].score == w[0].score && w[1].id < w[0].id {
                return Err(PredictError::Invalid("equal scores not ordered by ascending id".into()));
            }
        }
        Ok(Self { candidates, direction })
    }

    /// Builds a prediction from ids already in rank order, with synthetic
    /// strictly decreasing scores.
    pub fn from_ranked(ids: &[TokenId], direction: Direction) -> Result<Self, PredictError> {
        let n = ids.len();
        let candidates = ids
            .iter()
            .enumerate()
            .map(|(i, &id)| Candidate { id, score: (n - i) as f64 })
            .collect();
        Self::new(candidates, direction, n)
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.candidates.iter().map(|c| c.id)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn k(&self) -> usize {
        self.candidates.len()
    }

    /// 1-based rank of `id`, if present.
    pub fn rank_of(&self, id: TokenId) -> Option<usize> {
        self.candidates.iter().position(|c| c.id == id).map(|i| i + 1)
    }

    /// Keeps the best `k` candidates.
    pub fn truncated(mut self, k: usize) -> Result<Self, PredictError> {
        if k == 0 {
            return Err(PredictError::ZeroK);
        }
        if k > self.candidates.len() {
            return Err(PredictError::Invalid(format!(
                "asked for {k} candidates but only {} are available",
                self.candidates.len()
            )));
        }
        self.candidates.truncate(k);
        Ok(self)
    }

    pub(crate) fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }
}

/// Something that ranks candidate tokens for a context.
pub trait Predictor: Send + Sync {
    /// `context` is in model order (reversed for backward queries).
    fn predict(&self, context: &[TokenId], direction: Direction, k: usize) -> Result<Prediction, PredictError>;

    /// Same query with `context` given in natural reading order.
    fn predict_reading_order(
        &self,
        context: &[TokenId],
        direction: Direction,
        k: usize,
    ) -> Result<Prediction, PredictError> {
        match direction {
            Direction::Forward => self.predict(context, direction, k),
            Direction::Backward => {
                let reversed: Vec<TokenId> = context.iter().rev().copied().collect();
                self.predict(&reversed, direction, k)
            }
        }
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn predict(&self, context: &[TokenId], direction: Direction, k: usize) -> Result<Prediction, PredictError> {
        (**self).predict(context, direction, k)
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn predict(&self, context: &[TokenId], direction: Direction, k: usize) -> Result<Prediction, PredictError> {
        (**self).predict(context, direction, k)
    }
}

impl<P: Predictor + ?Sized> Predictor for Arc<P> {
    fn predict(&self, context: &[TokenId], direction: Direction, k: usize) -> Result<Prediction, PredictError> {
        (**self).predict(context, direction, k)
    }
}
