//! Replays fixed predictions; the test oracle for the evaluation engine.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use super::{Direction, PredictError, Prediction, Predictor};
use crate::tokenizer::TokenId;

/// Predictions keyed by step, where the step is the length of the context
/// the predictor is handed (Algorithm-style `i` for an untruncated prompt).
///
/// Clones share the record of the last context seen.
#[derive(Debug, Clone)]
pub struct ScriptedPredictor {
    script: Arc<BTreeMap<usize, Prediction>>,
    last_context: Arc<Mutex<Option<Vec<TokenId>>>>,
}

impl ScriptedPredictor {
    pub fn new(script: BTreeMap<usize, Prediction>) -> Self {
        Self { script: Arc::new(script), last_context: Arc::default() }
    }

    /// Script from rank-ordered id lists.
    ///
    /// Panics if a list repeats an id.
    pub fn from_ranked(script: BTreeMap<usize, Vec<TokenId>>) -> Self {
        Self::new(
            script
                .into_iter()
                .map(|(step, ids)| {
                    let p = Prediction::from_ranked(&ids, Direction::Forward).expect("distinct scripted ids");
                    (step, p)
                })
                .collect(),
        )
    }

    pub fn last_context(&self) -> Option<Vec<TokenId>> {
        self.last_context.lock().expect("poisoned").clone()
    }
}

impl Predictor for ScriptedPredictor {
    fn predict(&self, context: &[TokenId], direction: Direction, k: usize) -> Result<Prediction, PredictError> {
        *self.last_context.lock().expect("poisoned") = Some(context.to_vec());
        let step = context.len();
        let p = self.script.get(&step).ok_or(PredictError::Unscripted { step })?;
        Ok(p.clone().truncated(k)?.with_direction(direction))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replays_by_step() {
        let s = ScriptedPredictor::from_ranked(BTreeMap::from([(1, vec![4, 5, 6]), (2, vec![7, 8, 9])]));
        let p = s.predict(&[0], Direction::Forward, 3).unwrap();
        assert_eq!(p.rank_of(4), Some(1));
        let p = s.predict(&[0, 1], Direction::Backward, 2).unwrap();
        assert_eq!(p.ids().collect::<Vec<_>>(), vec![7, 8]);
        assert_eq!(p.direction(), Direction::Backward);
    }

    #[test]
    fn unscripted_step_is_an_error() {
        let empty = ScriptedPredictor::new(BTreeMap::new());
        assert_eq!(empty.predict(&[1], Direction::Forward, 1), Err(PredictError::Unscripted { step: 1 }));
    }

    #[test]
    fn short_script_cannot_fill_k() {
        let s = ScriptedPredictor::from_ranked(BTreeMap::from([(1, vec![4])]));
        assert!(matches!(s.predict(&[0], Direction::Forward, 2), Err(PredictError::Invalid(_))));
    }
}
