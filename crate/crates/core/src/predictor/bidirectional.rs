use serde::{Deserialize, Serialize};

use super::{Direction, NgramModel, PredictError, Prediction, Predictor};
use crate::tokenizer::TokenId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BidirectionalMode {
    Dual,
    Mixed,
    ForwardOnly,
    BackwardOnly,
}

/// Forward and backward prediction behind one interface.
///
/// `Dual` keeps a separate model per direction; `Mixed` answers both
/// directions with one model trained on forward and reversed copies.
/// Backward queries always hand the model a reversed context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BidirectionalPredictor<P = NgramModel> {
    Dual { forward: P, backward: P },
    Mixed { model: P },
    ForwardOnly { model: P },
    BackwardOnly { model: P },
}

impl<P> BidirectionalPredictor<P> {
    pub fn mode(&self) -> BidirectionalMode {
        match self {
            Self::Dual { .. } => BidirectionalMode::Dual,
            Self::Mixed { .. } => BidirectionalMode::Mixed,
            Self::ForwardOnly { .. } => BidirectionalMode::ForwardOnly,
            Self::BackwardOnly { .. } => BidirectionalMode::BackwardOnly,
        }
    }

    pub fn supports(&self, direction: Direction) -> bool {
        self.model_for(direction).is_some()
    }

    fn model_for(&self, direction: Direction) -> Option<&P> {
        match (self, direction) {
            (Self::Dual { forward, .. }, Direction::Forward) => Some(forward),
            (Self::Dual { backward, .. }, Direction::Backward) => Some(backward),
            (Self::Mixed { model }, _) => Some(model),
            (Self::ForwardOnly { model }, Direction::Forward) => Some(model),
            (Self::BackwardOnly { model }, Direction::Backward) => Some(model),
            _ => None,
        }
    }

    /// Swaps the roles of the two directions.
    ///
    /// Evaluating a text backward under `self` is the same computation as
    /// evaluating the reversed text forward under `self.mirrored()`.
    pub fn mirrored(self) -> Self {
        match self {
            Self::Dual { forward, backward } => Self::Dual { forward: backward, backward: forward },
            Self::Mixed { model } => Self::Mixed { model },
            Self::ForwardOnly { model } => Self::BackwardOnly { model },
            Self::BackwardOnly { model } => Self::ForwardOnly { model },
        }
    }
}

impl<P: Predictor> BidirectionalPredictor<P> {
    /// Query with `context` in natural reading order.
    pub fn predict_bidirectional(
        &self,
        context: &[TokenId],
        direction: Direction,
        k: usize,
    ) -> Result<Prediction, PredictError> {
        self.predict_reading_order(context, direction, k)
    }
}

impl<P: Predictor> Predictor for BidirectionalPredictor<P> {
    fn predict(&self, context: &[TokenId], direction: Direction, k: usize) -> Result<Prediction, PredictError> {
        let model = self.model_for(direction).ok_or(PredictError::Unsupported(direction))?;
        Ok(model.predict(context, direction, k)?.with_direction(direction))
    }
}
