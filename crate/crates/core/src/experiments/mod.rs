//! Design comparisons, starting-position sweeps and their reports.

mod report;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{self, AeResult, EngineError, EvalOptions, KeystrokeLedger, Pooling, TraversalPlan, UiDesign};
use crate::predictor::{Direction, Predictor};
use crate::tokenizer::{TokenSequence, Vocabulary};

pub use report::{emit_report, format_percent, parse_csv, ReportFormat, CSV_HEADER};

/// Shortest text a mid-text start is evaluated on.
pub const MIN_INTERIOR_TOKENS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("text has {len} tokens; at least {min} are required")]
    TooShort { len: usize, min: usize },
    #[error("fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("no claims to evaluate")]
    NoClaims,
    #[error("claim {claim}: {source}")]
    Claim {
        claim: usize,
        #[source]
        source: EngineError,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("nothing to report")]
    EmptyReport,
    #[error("report rows mix design comparisons and position sweeps")]
    MixedRows,
    #[error("report csv: {0}")]
    Csv(String),
}

/// Where in a text evaluation starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum StartPosition {
    Begin,
    End,
    Q1,
    Q2,
    Q3,
    Fraction(f64),
}

impl StartPosition {
    pub fn fraction(self) -> Option<f64> {
        match self {
            StartPosition::Begin | StartPosition::End => None,
            StartPosition::Q1 => Some(0.25),
            StartPosition::Q2 => Some(0.5),
            StartPosition::Q3 => Some(0.75),
            StartPosition::Fraction(r) => Some(r),
        }
    }

    /// Shortest text this position applies to.
    pub fn min_tokens(self) -> usize {
        if self.fraction().is_some() {
            MIN_INTERIOR_TOKENS
        } else {
            2
        }
    }
}

impl fmt::Display for StartPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StartPosition::Begin => f.write_str("begin"),
            StartPosition::End => f.write_str("end"),
            StartPosition::Q1 => f.write_str("q1"),
            StartPosition::Q2 => f.write_str("q2"),
            StartPosition::Q3 => f.write_str("q3"),
            StartPosition::Fraction(r) => write!(f, "frac:{r}"),
        }
    }
}

impl FromStr for StartPosition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "begin" => Ok(StartPosition::Begin),
            "end" => Ok(StartPosition::End),
            "q1" => Ok(StartPosition::Q1),
            "q2" => Ok(StartPosition::Q2),
            "q3" => Ok(StartPosition::Q3),
            other => {
                let r = other
                    .strip_prefix("frac:")
                    .and_then(|r| r.parse::<f64>().ok())
                    .ok_or_else(|| format!("unknown start `{other}` (expected begin, end, q1, q2, q3 or frac:<r>)"))?;
                if r > 0.0 && r < 1.0 {
                    Ok(StartPosition::Fraction(r))
                } else {
                    Err(format!("fraction {r} must lie strictly between 0 and 1"))
                }
            }
        }
    }
}

impl From<StartPosition> for String {
    fn from(p: StartPosition) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for StartPosition {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

/// Zero-based start index in a text of `len` tokens.
///
/// A fraction `r` selects the token at 1-based position `ceil(r * len)`,
/// kept off both ends: for 100 tokens `q1` is the 25th token (index 24).
pub fn position_index(pos: StartPosition, len: usize) -> Result<usize, ExperimentError> {
    if len < pos.min_tokens() {
        return Err(ExperimentError::TooShort { len, min: pos.min_tokens() });
    }
    match pos {
        StartPosition::Begin => Ok(0),
        StartPosition::End => Ok(len - 1),
        _ => {
            let r = pos.fraction().expect("interior position");
            if !(r > 0.0 && r < 1.0) {
                return Err(ExperimentError::BadFraction(r));
            }
            let one_based = ((r * len as f64).ceil() as usize).max(1);
            Ok((one_based - 1).clamp(1, len - 2))
        }
    }
}

/// Plan starting at `pos`, heading `first_leg` first.
pub fn plan_for(pos: StartPosition, first_leg: Direction, len: usize) -> Result<TraversalPlan, ExperimentError> {
    Ok(TraversalPlan::new(position_index(pos, len)?, first_leg))
}

/// `(new - previous) / previous`; `None` unless `previous > 0`.
pub fn relative_increase(previous: f64, new: f64) -> Option<f64> {
    (previous > 0.0).then(|| (new - previous) / previous)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub model_tag: String,
    /// Plain traversal direction, or the first leg of a mid-text start.
    pub direction: Direction,
    /// `legacy/digit` for design comparisons, otherwise the design used.
    pub design: String,
    pub start: String,
    pub previous_ratio: Option<f64>,
    /// `None` when nothing was counted (e.g. every claim skipped).
    pub new_ratio: Option<f64>,
    pub increase: Option<f64>,
    pub keys_manual: u64,
    pub keys_auto: u64,
    pub n_claims: usize,
    pub skipped: usize,
}

impl ExperimentRow {
    pub fn is_comparison(&self) -> bool {
        self.design.contains('/')
    }
}

/// Per-claim results for `plan_of(len)`, in claim order; claims the plan
/// rejects as too short are counted, not evaluated.
fn evaluate_claims<P, F>(
    predictor: &P,
    vocab: &Vocabulary,
    claims: &[TokenSequence],
    opts: &EvalOptions,
    plan_of: F,
) -> Result<(Vec<AeResult>, usize), ExperimentError>
where
    P: Predictor + ?Sized,
    F: Fn(usize) -> Result<TraversalPlan, ExperimentError> + Sync,
{
    let outcomes: Vec<Result<Option<AeResult>, ExperimentError>> = claims
        .par_iter()
        .enumerate()
        .map(|(claim, tokens)| match plan_of(tokens.len()) {
            Err(ExperimentError::TooShort { .. }) => Ok(None),
            Err(e) => Err(e),
            Ok(plan) => engine::evaluate(predictor, vocab, tokens, plan, opts)
                .map(Some)
                .map_err(|source| ExperimentError::Claim { claim, source }),
        })
        .collect();
    let mut results = Vec::with_capacity(claims.len());
    let mut skipped = 0;
    for outcome in outcomes {
        match outcome? {
            Some(r) => results.push(r),
            None => skipped += 1,
        }
    }
    Ok((results, skipped))
}

/// Pooled ledger and ratio; the ratio is `None` when nothing was counted.
fn pooled(results: &[AeResult], pooling: Pooling) -> Result<(KeystrokeLedger, Option<f64>), ExperimentError> {
    if results.is_empty() {
        return Ok((KeystrokeLedger::default(), None));
    }
    match engine::aggregate(results, pooling) {
        Ok(p) => Ok((p.ledger, Some(p.ratio))),
        Err(EngineError::UndefinedRatio) => Ok((results.iter().map(|r| r.ledger).sum(), None)),
        Err(e) => Err(e.into()),
    }
}

/// Evaluates every claim from one start position and pools the results.
#[allow(clippy::too_many_arguments)]
pub fn run_eval<P: Predictor + ?Sized>(
    predictor: &P,
    vocab: &Vocabulary,
    claims: &[TokenSequence],
    start: StartPosition,
    first_leg: Direction,
    opts: &EvalOptions,
    pooling: Pooling,
    model_tag: &str,
) -> Result<ExperimentRow, ExperimentError> {
    if claims.is_empty() {
        return Err(ExperimentError::NoClaims);
    }
    let (results, skipped) = evaluate_claims(predictor, vocab, claims, opts, |len| plan_for(start, first_leg, len))?;
    let (ledger, ratio) = pooled(&results, pooling)?;
    Ok(ExperimentRow {
        model_tag: model_tag.to_string(),
        direction: first_leg,
        design: opts.design.to_string(),
        start: start.to_string(),
        previous_ratio: None,
        new_ratio: ratio,
        increase: None,
        keys_manual: ledger.keys_manual,
        keys_auto: ledger.keys_auto,
        n_claims: results.len(),
        skipped,
    })
}

fn plain_start(direction: Direction) -> StartPosition {
    match direction {
        Direction::Forward => StartPosition::Begin,
        Direction::Backward => StartPosition::End,
    }
}

/// Legacy versus digit-key selection, one row per direction, evaluated from
/// the matching end of every claim. Ledger columns belong to the digit run.
pub fn run_design_comparison<P: Predictor + ?Sized>(
    predictor: &P,
    vocab: &Vocabulary,
    claims: &[TokenSequence],
    directions: &[Direction],
    opts: &EvalOptions,
    pooling: Pooling,
    model_tag: &str,
) -> Result<Vec<ExperimentRow>, ExperimentError> {
    directions
        .iter()
        .map(|&direction| {
            let start = plain_start(direction);
            let legacy = run_eval(
                predictor,
                vocab,
                claims,
                start,
                direction,
                &opts.with_design(UiDesign::LegacyArrowTab),
                pooling,
                model_tag,
            )?;
            let digit =
                run_eval(predictor, vocab, claims, start, direction, &opts.with_design(UiDesign::DigitKeys), pooling, model_tag)?;
            Ok(ExperimentRow {
                design: format!("{}/{}", UiDesign::LegacyArrowTab, UiDesign::DigitKeys),
                previous_ratio: legacy.new_ratio,
                increase: legacy.new_ratio.zip(digit.new_ratio).and_then(|(prev, new)| relative_increase(prev, new)),
                ..digit
            })
        })
        .collect()
}

/// One row per `(position, first leg)`, positions outermost.
#[allow(clippy::too_many_arguments)]
pub fn run_position_sweep<P: Predictor + ?Sized>(
    predictor: &P,
    vocab: &Vocabulary,
    claims: &[TokenSequence],
    positions: &[StartPosition],
    first_legs: &[Direction],
    opts: &EvalOptions,
    pooling: Pooling,
    model_tag: &str,
) -> Result<Vec<ExperimentRow>, ExperimentError> {
    let mut rows = Vec::with_capacity(positions.len() * first_legs.len());
    for &pos in positions {
        for &leg in first_legs {
            rows.push(run_eval(predictor, vocab, claims, pos, leg, opts, pooling, model_tag)?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests;
