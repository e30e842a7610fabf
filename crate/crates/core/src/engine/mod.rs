//! Keystroke accounting for autocomplete.
//!
//! One *leg* walks a token sequence in the order given. At every position
//! `i >= count_from` the predictor sees the preceding tokens; if the true
//! token is among its top `k` the user pays the selection cost of its rank,
//! otherwise they type its stripped surface. The manual counter always pays
//! the stripped surface. A traversal plan combines one or two legs so that
//! every token except the starting one is counted exactly once.

mod ledger;

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predictor::{Direction, PredictError, Predictor};
use crate::tokenizer::{TokenId, TokenizerError, Vocabulary};

pub use ledger::KeystrokeLedger;

/// Default prompt window in tokens.
pub const DEFAULT_MAX_CONTEXT: usize = 1024;

/// Default number of suggestions (one per digit key).
pub const DEFAULT_K: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("text has {len} tokens; at least 2 are required")]
    TooShort { len: usize },
    #[error("start index {start} outside a text of {len} tokens")]
    StartOutOfRange { start: usize, len: usize },
    #[error("rank {rank} outside 1..={k}")]
    RankOutOfRange { rank: usize, k: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Token(#[from] TokenizerError),
    #[error("{direction} prediction failed at step {step}: {source}")]
    Predictor {
        step: usize,
        direction: Direction,
        #[source]
        source: PredictError,
    },
    #[error("AE ratio undefined: no manual keystrokes")]
    UndefinedRatio,
    #[error("nothing to aggregate")]
    NoResults,
    #[error("cannot pool results from different UI designs")]
    MixedDesigns,
}

/// How a suggestion is picked from the list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UiDesign {
    /// (rank - 1) down-arrows, then tab.
    LegacyArrowTab,
    /// One key `0`..`9` per suggestion.
    DigitKeys,
}

impl UiDesign {
    pub fn as_str(self) -> &'static str {
        match self {
            UiDesign::LegacyArrowTab => "legacy",
            UiDesign::DigitKeys => "digit",
        }
    }
}

impl fmt::Display for UiDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UiDesign {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "legacy" | "legacy_arrow_tab" => Ok(UiDesign::LegacyArrowTab),
            "digit" | "digit_keys" => Ok(UiDesign::DigitKeys),
            other => Err(format!("unknown design `{other}` (expected legacy or digit)")),
        }
    }
}

/// Legacy selection pricing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegacyCost {
    /// Exactly `rank` keystrokes.
    #[default]
    Rank,
    /// `min(rank, manual cost)`: the user types instead when that is cheaper.
    CappedAtManual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub design: UiDesign,
    pub k: usize,
    /// Prompts keep at most this many of the most recent tokens.
    pub max_context: usize,
    /// Drop steps whose true token has no visible characters.
    pub skip_empty_tokens: bool,
    pub legacy_cost: LegacyCost,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            design: UiDesign::DigitKeys,
            k: DEFAULT_K,
            max_context: DEFAULT_MAX_CONTEXT,
            skip_empty_tokens: false,
            legacy_cost: LegacyCost::Rank,
        }
    }
}

impl EvalOptions {
    pub fn with_design(self, design: UiDesign) -> Self {
        Self { design, ..self }
    }
}

/// Where a traversal starts and which way it goes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraversalPlan {
    pub start: usize,
    pub first_leg: Direction,
}

impl TraversalPlan {
    /// Forward from the first token.
    pub fn begin() -> Self {
        Self { start: 0, first_leg: Direction::Forward }
    }

    /// Backward from the last of `len` tokens.
    pub fn end(len: usize) -> Self {
        Self { start: len.saturating_sub(1), first_leg: Direction::Backward }
    }

    pub fn new(start: usize, first_leg: Direction) -> Self {
        Self { start, first_leg }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeResult {
    pub ledger: KeystrokeLedger,
    /// `None` when no manual keystrokes were counted.
    pub ae_ratio: Option<Rational64>,
    pub design: UiDesign,
    pub plan: TraversalPlan,
}

impl AeResult {
    pub fn ratio_f64(&self) -> Option<f64> {
        self.ae_ratio.map(ratio_to_f64)
    }
}

pub fn ratio_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Keystrokes needed to type `id` by hand.
pub fn manual_cost(vocab: &Vocabulary, id: TokenId) -> Result<u64, EngineError> {
    Ok(vocab.stripped_length(id)? as u64)
}

/// Keystrokes needed to accept the suggestion at 1-based `rank`.
pub fn selection_cost(design: UiDesign, rank: usize, k: usize) -> Result<u64, EngineError> {
    if rank == 0 || rank > k {
        return Err(EngineError::RankOutOfRange { rank, k });
    }
    Ok(match design {
        UiDesign::LegacyArrowTab => rank as u64,
        UiDesign::DigitKeys => 1,
    })
}

/// Digit key that selects the suggestion at 1-based `rank` (`'0'` is rank 1).
pub fn digit_for_rank(rank: usize) -> Option<char> {
    (1..=10).contains(&rank).then(|| char::from(b'0' + (rank - 1) as u8))
}

fn hit_cost(opts: &EvalOptions, rank: usize, manual: u64) -> Result<u64, EngineError> {
    let cost = selection_cost(opts.design, rank, opts.k)?;
    Ok(match (opts.design, opts.legacy_cost) {
        (UiDesign::LegacyArrowTab, LegacyCost::CappedAtManual) => cost.min(manual),
        _ => cost,
    })
}

/// Walks `seq` in the given order, counting positions `count_from..`.
fn run_leg<P: Predictor + ?Sized>(
    predictor: &P,
    vocab: &Vocabulary,
    seq: &[TokenId],
    direction: Direction,
    count_from: usize,
    opts: &EvalOptions,
) -> Result<KeystrokeLedger, EngineError> {
    if opts.k == 0 {
        return Err(EngineError::ZeroK);
    }
    let mut ledger = KeystrokeLedger::default();
    for i in count_from.max(1)..seq.len() {
        let truth = seq[i];
        let manual = manual_cost(vocab, truth)?;
        if opts.skip_empty_tokens && manual == 0 {
            continue;
        }
        let prompt = &seq[i.saturating_sub(opts.max_context)..i];
        let prediction = predictor
            .predict(prompt, direction, opts.k)
            .map_err(|source| EngineError::Predictor { step: i, direction, source })?;
        match prediction.rank_of(truth) {
            Some(rank) => {
                ledger.keys_auto += hit_cost(opts, rank, manual)?;
                ledger.hits += 1;
            }
            None => ledger.keys_auto += manual,
        }
        ledger.keys_manual += manual;
        ledger.tokens_counted += 1;
    }
    Ok(ledger)
}

/// One leg over `seq` in the order given, counting every token but the
/// first. Backward legs expect `seq` already reversed.
pub fn evaluate_leg<P: Predictor + ?Sized>(
    predictor: &P,
    vocab: &Vocabulary,
    seq: &[TokenId],
    direction: Direction,
    opts: &EvalOptions,
) -> Result<KeystrokeLedger, EngineError> {
    run_leg(predictor, vocab, seq, direction, 1, opts)
}

/// Evaluates `tokens` (reading order) under `plan`.
///
/// Forward-first from `n`: leg one runs forward over `t[n..]` starting from
/// `t[n]` alone; leg two runs backward over the whole reversed text, with
/// the forward span as context, counting `t[n-1]` down to `t[0]`.
/// Backward-first is the mirror image.
pub fn evaluate<P: Predictor + ?Sized>(
    predictor: &P,
    vocab: &Vocabulary,
    tokens: &[TokenId],
    plan: TraversalPlan,
    opts: &EvalOptions,
) -> Result<AeResult, EngineError> {
    let len = tokens.len();
    if len < 2 {
        return Err(EngineError::TooShort { len });
    }
    let n = plan.start;
    if n >= len {
        return Err(EngineError::StartOutOfRange { start: n, len });
    }
    let reversed: Vec<TokenId> = tokens.iter().rev().copied().collect();
    let ledger = match plan.first_leg {
        Direction::Forward => {
            let first = run_leg(predictor, vocab, &tokens[n..], Direction::Forward, 1, opts)?;
            let second = run_leg(predictor, vocab, &reversed, Direction::Backward, len - n, opts)?;
            first + second
        }
        Direction::Backward => {
            let first = run_leg(predictor, vocab, &reversed[len - 1 - n..], Direction::Backward, 1, opts)?;
            let second = run_leg(predictor, vocab, tokens, Direction::Forward, n + 1, opts)?;
            first + second
        }
    };
    Ok(AeResult { ae_ratio: ae_ratio(&ledger).ok(), ledger, design: opts.design, plan })
}

/// `(keys_manual - keys_auto) / keys_manual`, exactly.
pub fn ae_ratio(ledger: &KeystrokeLedger) -> Result<Rational64, EngineError> {
    if ledger.keys_manual == 0 {
        return Err(EngineError::UndefinedRatio);
    }
    let manual = ledger.keys_manual as i64;
    Ok(Rational64::new(manual - ledger.keys_auto as i64, manual))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Sum ledgers, then take one ratio.
    #[default]
    Micro,
    /// Mean of per-text ratios (texts with an undefined ratio are left out).
    Macro,
}

impl FromStr for Pooling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "micro" => Ok(Pooling::Micro),
            "macro" => Ok(Pooling::Macro),
            other => Err(format!("unknown pooling `{other}` (expected micro or macro)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledResult {
    pub ledger: KeystrokeLedger,
    pub ratio: f64,
    pub design: UiDesign,
    pub pooling: Pooling,
    pub n_results: usize,
}

/// Pools per-text results into one corpus-level ratio. Order-independent.
pub fn aggregate(results: &[AeResult], pooling: Pooling) -> Result<PooledResult, EngineError> {
    let first = results.first().ok_or(EngineError::NoResults)?;
    if results.iter().any(|r| r.design != first.design) {
        return Err(EngineError::MixedDesigns);
    }
    let ledger: KeystrokeLedger = results.iter().map(|r| r.ledger).sum();
    let ratio = match pooling {
        Pooling::Micro => ratio_to_f64(ae_ratio(&ledger)?),
        Pooling::Macro => {
            let defined: Vec<Rational64> = results.iter().filter_map(|r| r.ae_ratio).collect();
            if defined.is_empty() {
                return Err(EngineError::UndefinedRatio);
            }
            defined.iter().map(|&r| ratio_to_f64(r)).sum::<f64>() / defined.len() as f64
        }
    };
    Ok(PooledResult { ledger, ratio, design: first.design, pooling, n_results: results.len() })
}
