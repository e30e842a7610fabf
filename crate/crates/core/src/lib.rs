//! Keystroke-saving evaluation for bidirectional autocomplete.
//!
//! The crate trains desk-scale predictors on forward and reversed token
//! corpora, scores them by the fraction of manual keystrokes an autocomplete
//! UI saves (the AE ratio), and provides the session logic behind an
//! interactive writing pad.

pub mod tokenizer;
pub mod corpus;
pub mod predictor;
pub mod engine;
pub mod experiments;
pub mod session;
