use super::*;
use crate::predictor::{train_ngram, BidirectionalPredictor};
use crate::tokenizer::{train_tokenizer, Scheme};

#[test]
fn start_positions() {
    assert_eq!(position_index(StartPosition::Q1, 100).unwrap(), 24);
    assert_eq!(position_index(StartPosition::Q2, 7).unwrap(), 3);
    assert_eq!(position_index(StartPosition::Q3, 100).unwrap(), 74);
    assert_eq!(position_index(StartPosition::Begin, 2).unwrap(), 0);
    assert_eq!(position_index(StartPosition::End, 9).unwrap(), 8);
    // kept off both ends
    assert_eq!(position_index(StartPosition::Q1, 4).unwrap(), 1);
    assert_eq!(position_index(StartPosition::Fraction(0.99), 5).unwrap(), 3);
    assert_eq!(position_index(StartPosition::Q2, 3), Err(ExperimentError::TooShort { len: 3, min: 4 }));
    assert_eq!(position_index(StartPosition::Begin, 1), Err(ExperimentError::TooShort { len: 1, min: 2 }));
    assert_eq!(position_index(StartPosition::Fraction(1.5), 10), Err(ExperimentError::BadFraction(1.5)));
}

#[test]
fn start_parsing() {
    for s in ["begin", "end", "q1", "q2", "q3", "frac:0.3"] {
        assert_eq!(s.parse::<StartPosition>().unwrap().to_string(), s);
    }
    assert_eq!("frac:0.5".parse::<StartPosition>().unwrap().fraction(), Some(0.5));
    assert!("frac:1".parse::<StartPosition>().is_err());
    assert!("frac:x".parse::<StartPosition>().is_err());
    assert!("middle".parse::<StartPosition>().is_err());
}

#[test]
fn increase_arithmetic() {
    let inc = relative_increase(0.565, 0.627).unwrap();
    assert!((inc * 100.0 - 10.97).abs() < 0.01);
    assert_eq!(format_percent(relative_increase(0.570, 0.631).unwrap()), "10.7");
    assert_eq!(relative_increase(0.6, 0.6), Some(0.0));
    assert_eq!(relative_increase(0.0, 0.6), None);
}

#[test]
fn percent_formatting() {
    assert_eq!(format_percent(0.6274), "62.7");
    assert_eq!(format_percent(0.0), "0.0");
    assert_eq!(format_percent(-0.00001), "0.0");
    assert_eq!(format_percent(1.0), "100.0");
}

const TEXT: &str = "a device for cutting paper comprising a blade and a handle. \
    the device of claim 1 wherein the blade is steel. \
    a method for cutting paper comprising holding a handle and moving a blade. \
    the method of claim 3 wherein the handle is wood.";

fn setup() -> (Vocabulary, BidirectionalPredictor, Vec<TokenSequence>) {
    let vocab = train_tokenizer([TEXT], 0, Scheme::Whitespace).unwrap();
    let seqs: Vec<TokenSequence> = TEXT.split(". ").map(|s| vocab.encode(s)).collect();
    let rev: Vec<TokenSequence> = seqs.iter().map(|s| s.reversed()).collect();
    let bp = BidirectionalPredictor::Dual {
        forward: train_ngram(&seqs, 3, 0.4, vocab.len()).unwrap(),
        backward: train_ngram(&rev, 3, 0.4, vocab.len()).unwrap(),
    };
    let mut claims = seqs;
    claims.push(vocab.encode("a"));
    claims.push(vocab.encode("a blade"));
    (vocab, bp, claims)
}

#[test]
fn design_comparison_rows() {
    let (vocab, bp, claims) = setup();
    let rows = run_design_comparison(
        &bp,
        &vocab,
        &claims,
        &[Direction::Forward, Direction::Backward],
        &EvalOptions::default(),
        Pooling::Micro,
        "tri",
    )
    .unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r.design, "legacy/digit");
        assert_eq!(r.skipped, 1);
        assert_eq!(r.n_claims, 5);
        let (prev, new) = (r.previous_ratio.unwrap(), r.new_ratio.unwrap());
        assert!(new >= prev);
        assert_eq!(r.increase, relative_increase(prev, new));
    }
    assert_eq!(rows[0].start, "begin");
    assert_eq!(rows[1].start, "end");

    let sweep = run_position_sweep(
        &bp,
        &vocab,
        &claims,
        &[StartPosition::Begin],
        &[Direction::Forward],
        &EvalOptions::default(),
        Pooling::Micro,
        "tri",
    )
    .unwrap();
    assert_eq!(sweep[0].new_ratio, rows[0].new_ratio);
    assert_eq!((sweep[0].keys_manual, sweep[0].keys_auto), (rows[0].keys_manual, rows[0].keys_auto));
}

#[test]
fn sweep_rows_and_skips() {
    let (vocab, bp, claims) = setup();
    let rows = run_position_sweep(
        &bp,
        &vocab,
        &claims,
        &[StartPosition::Q1, StartPosition::Q2, StartPosition::Q3],
        &[Direction::Forward, Direction::Backward],
        &EvalOptions::default(),
        Pooling::Micro,
        "tri",
    )
    .unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.skipped == 2 && r.n_claims == 4 && r.new_ratio.is_some()));
    let csv = emit_report(&rows, ReportFormat::Csv).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(csv, emit_report(&rows, ReportFormat::Csv).unwrap());
    let md = emit_report(&rows, ReportFormat::Markdown).unwrap();
    assert!(md.starts_with("| Model | Direction | Q1 | Q2 | Q3 |\n|---|---|---|---|---|\n"));
    assert_eq!(md.lines().count(), 4);
}

#[test]
fn all_claims_skipped_is_a_row() {
    let (vocab, bp, _) = setup();
    let claims = vec![vocab.encode("a blade")];
    let row = run_eval(
        &bp,
        &vocab,
        &claims,
        StartPosition::Q2,
        Direction::Backward,
        &EvalOptions::default(),
        Pooling::Micro,
        "tri",
    )
    .unwrap();
    assert_eq!((row.n_claims, row.skipped, row.new_ratio), (0, 1, None));
    let csv = emit_report(&[row], ReportFormat::Csv).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "tri,backward,digit,q2,,,,0,0,0,1");
}

#[test]
fn report_errors_and_round_trip() {
    assert_eq!(emit_report(&[], ReportFormat::Csv), Err(ExperimentError::EmptyReport));
    let row = ExperimentRow {
        model_tag: "m,1".into(),
        direction: Direction::Forward,
        design: "legacy/digit".into(),
        start: "begin".into(),
        previous_ratio: Some(0.565),
        new_ratio: Some(0.627),
        increase: relative_increase(0.565, 0.627),
        keys_manual: 100,
        keys_auto: 37,
        n_claims: 3,
        skipped: 0,
    };
    let csv = emit_report(std::slice::from_ref(&row), ReportFormat::Csv).unwrap();
    let back = parse_csv(&csv).unwrap();
    assert_eq!(emit_report(&back, ReportFormat::Csv).unwrap(), csv);
    let md = emit_report(&back, ReportFormat::Markdown).unwrap();
    assert!(md.contains("| m,1 | forward | 56.5% | 62.7% | 11.0% |"), "{md}");
    let sweep_row = ExperimentRow { design: "digit".into(), previous_ratio: None, increase: None, ..row };
    assert_eq!(emit_report(&[back[0].clone(), sweep_row], ReportFormat::Markdown), Err(ExperimentError::MixedRows));
    assert!(matches!(parse_csv("a,b\n1,2\n"), Err(ExperimentError::Csv(_))));
}
