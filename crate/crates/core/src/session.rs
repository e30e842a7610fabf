//! Interactive autocomplete state with live keystroke accounting.
//!
//! Typed characters collect in a pending buffer until whitespace (or a
//! digit press) turns them into committed tokens. In forward mode new text
//! is appended after the committed span; in backward mode it is prepended.
//!
//! Counters:
//! - `actual` counts every key that changed the text: characters, digits
//!   (or, under the legacy design, `rank` keys per accepted suggestion) and
//!   backspaces.
//! - `manual_equivalent` is what typing the current text by hand would cost:
//!   the stripped length of every committed token plus the non-whitespace
//!   characters still pending.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{self, UiDesign};
use crate::predictor::{Direction, PredictError, Predictor};
use crate::tokenizer::{TokenId, TokenizerError, Vocabulary};

/// One suggestion per digit key.
pub const MAX_SESSION_K: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("k must lie in 1..={MAX_SESSION_K}, got {0}")]
    BadK(usize),
    #[error("digit {digit} selects nothing: only {available} suggestions")]
    DigitOutOfRange { digit: u8, available: usize },
    #[error("nothing pending to erase")]
    NothingToErase,
    #[error("`{0:?}` is a control character")]
    ControlChar(char),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Token(#[from] TokenizerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum KeyEvent {
    /// Accept the suggestion labelled `0`..`9`.
    Digit(u8),
    Char(char),
    Toggle,
    Backspace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SessionLedger {
    pub actual: u64,
    pub manual_equivalent: u64,
    /// Suggestions accepted.
    pub accepted: u64,
}

impl SessionLedger {
    /// `(manual_equivalent - actual) / manual_equivalent`; `None` while nothing is written.
    pub fn ae_ratio(&self) -> Option<f64> {
        (self.manual_equivalent > 0)
            .then(|| (self.manual_equivalent as f64 - self.actual as f64) / self.manual_equivalent as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub design: UiDesign,
    pub direction: Direction,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    /// Key that accepts this suggestion.
    pub digit: u8,
    pub rank: usize,
    pub id: TokenId,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Committed text with the pending buffer at the cursor side.
    pub text: String,
    pub committed: String,
    pub pending: String,
    pub tokens: Vec<TokenId>,
    pub direction: Direction,
    pub design: UiDesign,
    pub k: usize,
    pub ledger: SessionLedger,
    pub saved: i64,
    pub ae_ratio: Option<f64>,
    pub ae_defined: bool,
    pub events_applied: usize,
}

#[derive(Debug, Clone)]
pub struct Session {
    initial: SessionConfig,
    config: SessionConfig,
    /// Reading order.
    committed: Vec<TokenId>,
    committed_manual: u64,
    pending: String,
    actual: u64,
    accepted: u64,
    seed: Option<String>,
    log: Vec<KeyEvent>,
}

fn is_blank(s: &str) -> bool {
    s.chars().all(char::is_whitespace)
}

fn visible_chars(s: &str) -> u64 {
    s.chars().filter(|c| !c.is_whitespace()).count() as u64
}

impl Session {
    /// `seed` is encoded and committed as free starting context.
    pub fn new(config: SessionConfig, vocab: &Vocabulary, seed: Option<&str>) -> Result<Self, SessionError> {
        if config.k == 0 || config.k > MAX_SESSION_K {
            return Err(SessionError::BadK(config.k));
        }
        let committed = seed.map(|s| vocab.encode(s).into_inner()).unwrap_or_default();
        Ok(Self {
            initial: config,
            config,
            committed,
            committed_manual: 0,
            pending: String::new(),
            actual: 0,
            accepted: 0,
            seed: seed.map(str::to_owned),
            log: Vec::new(),
        })
    }

    /// Rebuilds a session from its creation parameters and event log.
    pub fn replay<P: Predictor + ?Sized>(
        config: SessionConfig,
        vocab: &Vocabulary,
        seed: Option<&str>,
        events: &[KeyEvent],
        predictor: &P,
    ) -> Result<Self, SessionError> {
        let mut s = Self::new(config, vocab, seed)?;
        for &e in events {
            s.apply(e, predictor, vocab)?;
        }
        Ok(s)
    }

    /// Current settings; the direction changes with every toggle.
    pub fn config(&self) -> SessionConfig {
        self.config
    }

    /// Settings the session was created with, for [`Session::replay`].
    pub fn initial_config(&self) -> SessionConfig {
        self.initial
    }

    pub fn direction(&self) -> Direction {
        self.config.direction
    }

    pub fn seed(&self) -> Option<&str> {
        self.seed.as_deref()
    }

    /// Successfully applied events, oldest first.
    pub fn events(&self) -> &[KeyEvent] {
        &self.log
    }

    pub fn committed(&self) -> &[TokenId] {
        &self.committed
    }

    pub fn pending(&self) -> &str {
        &self.pending
    }

    pub fn ledger(&self) -> SessionLedger {
        SessionLedger {
            actual: self.actual,
            manual_equivalent: self.committed_manual + visible_chars(&self.pending),
            accepted: self.accepted,
        }
    }

    fn insert(&mut self, tokens: &[TokenId], vocab: &Vocabulary) -> Result<(), SessionError> {
        for &t in tokens {
            self.committed_manual += engine::manual_cost(vocab, t).map_err(|e| match e {
                engine::EngineError::Token(t) => SessionError::Token(t),
                other => unreachable!("manual_cost only fails on ids: {other}"),
            })?;
        }
        match self.config.direction {
            Direction::Forward => self.committed.extend_from_slice(tokens),
            Direction::Backward => {
                self.committed.splice(0..0, tokens.iter().copied());
            }
        }
        Ok(())
    }

    fn commit_pending(&mut self, vocab: &Vocabulary) -> Result<(), SessionError> {
        let text = std::mem::take(&mut self.pending);
        let tokens = vocab.encode(&text);
        self.insert(&tokens, vocab)
    }

    /// Prediction context in reading order, counting pending text that a
    /// digit press would commit first.
    fn context(&self, vocab: &Vocabulary) -> Vec<TokenId> {
        if is_blank(&self.pending) {
            return self.committed.clone();
        }
        let pending = vocab.encode(&self.pending).into_inner();
        match self.config.direction {
            Direction::Forward => [self.committed.as_slice(), &pending].concat(),
            Direction::Backward => [pending.as_slice(), &self.committed].concat(),
        }
    }

    pub fn suggestions<P: Predictor + ?Sized>(
        &self,
        predictor: &P,
        vocab: &Vocabulary,
    ) -> Result<Vec<Suggestion>, SessionError> {
        let context = self.context(vocab);
        let window = context.len().saturating_sub(engine::DEFAULT_MAX_CONTEXT);
        let context = match self.config.direction {
            Direction::Forward => &context[window..],
            Direction::Backward => &context[..context.len() - window],
        };
        let prediction = predictor.predict_reading_order(context, self.config.direction, self.config.k)?;
        prediction
            .candidates()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let (text, _) = vocab.token_surface(c.id)?;
                Ok(Suggestion { digit: i as u8, rank: i + 1, id: c.id, text: text.into_owned(), score: c.score })
            })
            .collect()
    }

    /// Applies one key press. On error the session is unchanged.
    pub fn apply<P: Predictor + ?Sized>(
        &mut self,
        event: KeyEvent,
        predictor: &P,
        vocab: &Vocabulary,
    ) -> Result<(), SessionError> {
        match event {
            KeyEvent::Digit(d) => {
                let suggestions = self.suggestions(predictor, vocab)?;
                let chosen = suggestions
                    .get(d as usize)
                    .ok_or(SessionError::DigitOutOfRange { digit: d, available: suggestions.len() })?;
                let cost = engine::selection_cost(self.config.design, chosen.rank, self.config.k)
                    .expect("rank within k");
                if is_blank(&self.pending) {
                    self.pending.clear();
                } else {
                    self.commit_pending(vocab)?;
                }
                self.insert(&[chosen.id], vocab)?;
                self.actual += cost;
                self.accepted += 1;
            }
            KeyEvent::Char(c) => {
                if c.is_control() && !c.is_whitespace() {
                    return Err(SessionError::ControlChar(c));
                }
                if c.is_whitespace() && !is_blank(&self.pending) {
                    match self.config.direction {
                        Direction::Forward => {
                            self.commit_pending(vocab)?;
                            self.pending.push(c);
                        }
                        Direction::Backward => {
                            // a space typed after a word written backward
                            // separates it from the text still to come before it
                            self.pending.insert(0, c);
                            self.commit_pending(vocab)?;
                        }
                    }
                } else {
                    self.pending.push(c);
                }
                self.actual += 1;
            }
            KeyEvent::Toggle => {
                self.pending.clear();
                self.config.direction = self.config.direction.flipped();
            }
            KeyEvent::Backspace => {
                self.pending.pop().ok_or(SessionError::NothingToErase)?;
                self.actual += 1;
            }
        }
        self.log.push(event);
        Ok(())
    }

    pub fn snapshot(&self, vocab: &Vocabulary) -> Result<Snapshot, SessionError> {
        let committed = vocab.decode(&self.committed)?;
        let text = match self.config.direction {
            Direction::Forward => format!("{committed}{}", self.pending),
            Direction::Backward => format!("{}{committed}", self.pending),
        };
        let ledger = self.ledger();
        let ae_ratio = ledger.ae_ratio();
        Ok(Snapshot {
            text,
            committed,
            pending: self.pending.clone(),
            tokens: self.committed.clone(),
            direction: self.config.direction,
            design: self.config.design,
            k: self.config.k,
            ledger,
            saved: ledger.manual_equivalent as i64 - ledger.actual as i64,
            ae_ratio,
            ae_defined: ae_ratio.is_some(),
            events_applied: self.log.len(),
        })
    }
}
