//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any hard check fails.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use ae_core::corpus::{synthetic, Corpus, DirectionMode, SequenceOptions};
use ae_core::engine::{evaluate, evaluate_leg, EvalOptions, KeystrokeLedger, Pooling, TraversalPlan, UiDesign};
use ae_core::experiments::{relative_increase, run_position_sweep, StartPosition};
use ae_core::predictor::{
    train_ngram, BidirectionalPredictor, Direction, NgramModel, PredictError, Prediction, Predictor, DEFAULT_DISCOUNT,
};
use ae_core::tokenizer::{train_tokenizer, Scheme, TokenId, TokenSequence, Vocabulary, DEFAULT_BPE_VOCAB};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { name, pass, detail: detail.into() }
}

// ---------------------------------------------------------------------------
// Scripted predictor keyed by (direction, context length).
//
// Within one traversal plan every step has a distinct key, so a script can
// fix the exact ranked list each step sees.

type Key = (Direction, usize);

struct PlanScript {
    lists: HashMap<Key, Vec<TokenId>>,
}

impl Predictor for PlanScript {
    fn predict(&self, context: &[TokenId], direction: Direction, k: usize) -> Result<Prediction, PredictError> {
        let ids = self.lists.get(&(direction, context.len())).expect("unscripted step");
        Prediction::from_ranked(&ids[..k], direction)
    }
}

/// One counted step: key, true token.
fn plan_steps(len: usize, plan: TraversalPlan) -> Vec<(Key, usize)> {
    let n = plan.start;
    let mut steps = Vec::new();
    match plan.first_leg {
        Direction::Forward => {
            for pos in n + 1..len {
                steps.push(((Direction::Forward, pos - n), pos));
            }
            for pos in (0..n).rev() {
                steps.push(((Direction::Backward, len - 1 - pos), pos));
            }
        }
        Direction::Backward => {
            for pos in (0..n).rev() {
                steps.push(((Direction::Backward, n - pos), pos));
            }
            for pos in n + 1..len {
                steps.push(((Direction::Forward, pos), pos));
            }
        }
    }
    steps
}

struct Case {
    surfaces: Vec<String>,
    vocab: Vocabulary,
    text: Vec<TokenId>,
    plan: TraversalPlan,
    k: usize,
    script: PlanScript,
    /// Rank of the truth at each step, `None` on a miss.
    ranks: Vec<Option<usize>>,
}

const WORDS: &[&str] = &[
    " the", " a", " claim", " wherein", ", ", ".\n", " device", "ing", "es", " über", " naïve", "  ", "\t\t", " \n", " 1",
    "ed", " of", " and", " comprising", "; ", " data", " module", " -", "é", " said", " (", ") ", " x", "tion", " at",
];

fn random_case(rng: &mut ChaCha8Rng, hit_rate: f64, rank_one_only: bool, k: usize) -> Case {
    let mut surfaces: Vec<String> = (0u8..=255).map(|b| (b as char).to_string()).collect();
    surfaces.extend(WORDS.iter().map(|w| w.to_string()));
    let vocab = Vocabulary::from_surfaces(
        Scheme::Bpe,
        (0u16..=255).map(|b| vec![b as u8]).chain(WORDS.iter().map(|w| w.as_bytes().to_vec())).collect(),
    )
    .expect("vocabulary");
    let word_ids: Vec<TokenId> = (256..256 + WORDS.len() as TokenId).collect();
    let ascii_ids: Vec<TokenId> = (b' ' as TokenId..=b'~' as TokenId).collect();
    let len = rng.random_range(2..=50);
    let text: Vec<TokenId> = (0..len)
        .map(|_| if rng.random_bool(0.8) { *word_ids.choose(rng).unwrap() } else { *ascii_ids.choose(rng).unwrap() })
        .collect();
    let plan = TraversalPlan::new(
        rng.random_range(0..len),
        if rng.random_bool(0.5) { Direction::Forward } else { Direction::Backward },
    );
    let all_ids: Vec<TokenId> = (0..vocab.len() as TokenId).collect();
    let mut lists = HashMap::new();
    let mut ranks = Vec::new();
    for (key, pos) in plan_steps(len, plan) {
        let truth = text[pos];
        let mut others: Vec<TokenId> = all_ids.iter().copied().filter(|&id| id != truth).collect();
        others.shuffle(rng);
        let mut list: Vec<TokenId> = others[..k].to_vec();
        let rank = rng.random_bool(hit_rate).then(|| if rank_one_only { 1 } else { rng.random_range(1..=k) });
        if let Some(r) = rank {
            list[r - 1] = truth;
        }
        ranks.push(rank);
        lists.insert(key, list);
    }
    Case { surfaces, vocab, text, plan, k, script: PlanScript { lists }, ranks }
}

/// Straight-line reference: walks the plan's steps directly off the script.
fn simulate(case: &Case, design: UiDesign) -> KeystrokeLedger {
    let mut ledger = KeystrokeLedger::default();
    for (key, pos) in plan_steps(case.text.len(), case.plan) {
        let truth = case.text[pos];
        let manual = case.surfaces[truth as usize].trim().chars().count() as u64;
        let list = &case.script.lists[&key][..case.k];
        match list.iter().position(|&id| id == truth) {
            Some(i) => {
                ledger.hits += 1;
                ledger.keys_auto += match design {
                    UiDesign::LegacyArrowTab => i as u64 + 1,
                    UiDesign::DigitKeys => 1,
                };
            }
            None => ledger.keys_auto += manual,
        }
        ledger.keys_manual += manual;
        ledger.tokens_counted += 1;
    }
    ledger
}

fn opts(design: UiDesign, k: usize) -> EvalOptions {
    EvalOptions { design, k, ..EvalOptions::default() }
}

fn run(case: &Case, design: UiDesign) -> KeystrokeLedger {
    evaluate(&case.script, &case.vocab, &case.text, case.plan, &opts(design, case.k)).expect("evaluate").ledger
}

// ---------------------------------------------------------------------------

fn increase_reproduction() -> Outcome {
    // (previous %, new %, printed increase %)
    let rows: [(f64, f64, f64); 18] = [
        (56.5, 62.7, 10.9),
        (55.7, 62.1, 11.4),
        (57.0, 63.1, 10.7),
        (56.2, 62.5, 11.2),
        (57.0, 63.1, 10.7),
        (56.5, 62.7, 10.9),
        (54.2, 60.0, 10.7),
        (54.3, 58.9, 8.4),
        (54.7, 60.1, 9.8),
        (54.0, 59.5, 10.1),
        (55.0, 60.6, 10.1),
        (54.3, 59.6, 9.7),
        (55.1, 60.9, 10.5),
        (54.0, 60.0, 11.1),
        (55.5, 61.3, 10.4),
        (54.5, 60.5, 11.0),
        (55.7, 61.3, 10.0),
        (54.6, 60.6, 10.9),
    ];
    let mut worst = 0.0f64;
    let mut bad = 0;
    for (prev, new, printed) in rows {
        let got = relative_increase(prev / 100.0, new / 100.0).map(|x| x * 100.0);
        match got {
            Some(g) => {
                let dev = (g - printed).abs();
                worst = worst.max(dev);
                if dev > 0.2 {
                    bad += 1;
                }
            }
            None => bad += 1,
        }
    }
    outcome(
        "increase reproduction",
        bad == 0,
        format!("{} pairs, {bad} outside 0.2 pp, max deviation {worst:.3} pp", rows.len()),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let started = Instant::now();
    let mut mismatches = 0;
    let mut cases = 0;
    for i in 0..200 {
        let k = [1, 5, 10][i % 3];
        let hit_rate = rng.random_range(0.0..=1.0);
        let case = random_case(&mut rng, hit_rate, false, k);
        for design in [UiDesign::LegacyArrowTab, UiDesign::DigitKeys] {
            cases += 1;
            if run(&case, design) != simulate(&case, design) {
                mismatches += 1;
            }
            // the single forward leg is the plain algorithm
            if case.plan == TraversalPlan::begin() {
                let leg = evaluate_leg(&case.script, &case.vocab, &case.text, Direction::Forward, &opts(design, k))
                    .expect("leg");
                if leg != simulate(&case, design) {
                    mismatches += 1;
                }
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        "oracle equivalence",
        mismatches == 0 && secs < 5.0,
        format!("{cases} ledgers, {mismatches} mismatches, {secs:.2}s"),
    )
}

fn design_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut violations = 0;
    let mut equal = 0;
    for i in 0..1000 {
        let k = [1, 5, 10][i % 3];
        let rank_one_only = i % 5 == 0;
        let hit_rate = rng.random_range(0.0..=1.0);
        let case = random_case(&mut rng, hit_rate, rank_one_only, k);
        let legacy = run(&case, UiDesign::LegacyArrowTab);
        let digit = run(&case, UiDesign::DigitKeys);
        let expect_equal = case.ranks.iter().flatten().all(|&r| r == 1);
        let ok = if legacy.keys_manual == 0 {
            legacy.keys_auto == 0 && digit.keys_auto == 0
        } else if expect_equal {
            digit.keys_auto == legacy.keys_auto
        } else {
            digit.keys_auto < legacy.keys_auto
        };
        if !ok {
            violations += 1;
        }
        if digit.keys_auto == legacy.keys_auto {
            equal += 1;
        }
    }
    outcome("design dominance", violations == 0, format!("1000 cases, {violations} violations, {equal} ties"))
}

fn boundary_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut bad = 0;
    for i in 0..300 {
        let k = [1, 5, 10][i % 3];
        let case = random_case(&mut rng, 0.0, false, k);
        for design in [UiDesign::LegacyArrowTab, UiDesign::DigitKeys] {
            let r = evaluate(&case.script, &case.vocab, &case.text, case.plan, &opts(design, k)).unwrap();
            let zero = match r.ae_ratio {
                Some(x) => x == 0.into(),
                None => r.ledger.keys_manual == 0,
            };
            if !zero || r.ledger.hits != 0 {
                bad += 1;
            }
        }
        // all-hit digit run over tokens with visible characters
        let mut case = random_case(&mut rng, 1.0, false, k);
        let visible: Vec<TokenId> = case.text.iter().copied().filter(|&id| case.surfaces[id as usize].trim() != "").collect();
        if visible.len() < 2 {
            continue;
        }
        case = rescript_all_hits(&mut rng, &case, visible, k);
        let l = run(&case, UiDesign::DigitKeys);
        if l.keys_auto != l.tokens_counted || l.hits != l.tokens_counted {
            bad += 1;
        }
    }
    outcome("boundary exactness", bad == 0, format!("{bad} failures over never-hit and all-hit cases"))
}

fn rescript_all_hits(rng: &mut ChaCha8Rng, base: &Case, text: Vec<TokenId>, k: usize) -> Case {
    let len = text.len();
    let plan = TraversalPlan::new(rng.random_range(0..len), base.plan.first_leg);
    let mut lists = HashMap::new();
    let mut ranks = Vec::new();
    for (key, pos) in plan_steps(len, plan) {
        let truth = text[pos];
        let rank = rng.random_range(1..=k);
        let mut list: Vec<TokenId> = (0..base.vocab.len() as TokenId).filter(|&id| id != truth).take(k).collect();
        list[rank - 1] = truth;
        lists.insert(key, list);
        ranks.push(Some(rank));
    }
    Case {
        surfaces: base.surfaces.clone(),
        vocab: base.vocab.clone(),
        text,
        plan,
        k,
        script: PlanScript { lists },
        ranks,
    }
}

// ---------------------------------------------------------------------------
// Criteria on a trained model.

struct Trained {
    vocab: Vocabulary,
    predictor: BidirectionalPredictor<NgramModel>,
    train_texts: Vec<String>,
    claims: Vec<TokenSequence>,
    setup_secs: f64,
}

fn train_setup() -> Trained {
    let started = Instant::now();
    let corpus = Corpus::ingest(synthetic::generate(2024, 2_000_000)).expect("corpus");
    let (train, held_out) = corpus.split(0.1, 7).expect("split");
    let train_texts = train.expanded_texts().expect("texts");
    let vocab = train_tokenizer(&train_texts, DEFAULT_BPE_VOCAB, Scheme::Bpe).expect("tokenizer");
    let none = SequenceOptions::default();
    let forward = train.build_sequences(&vocab, DirectionMode::ForwardOnly, none).expect("forward");
    let backward = train.build_sequences(&vocab, DirectionMode::BackwardOnly, none).expect("backward");
    let predictor = BidirectionalPredictor::Dual {
        forward: train_ngram(&forward, 4, DEFAULT_DISCOUNT, vocab.len()).expect("forward model"),
        backward: train_ngram(&backward, 4, DEFAULT_DISCOUNT, vocab.len()).expect("backward model"),
    };
    let mut claims = held_out.build_sequences(&vocab, DirectionMode::ForwardOnly, none).expect("held out");
    claims.truncate(200);
    Trained { vocab, predictor, train_texts, claims, setup_secs: started.elapsed().as_secs_f64() }
}

fn bidirectional_mirror(t: &Trained) -> Outcome {
    let mirrored = t.predictor.clone().mirrored();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut texts: Vec<Vec<TokenId>> = t.claims.iter().map(|c| c.ids().to_vec()).collect();
    for _ in 0..100 {
        let len = rng.random_range(2..=60);
        texts.push((0..len).map(|_| rng.random_range(0..t.vocab.len() as TokenId)).collect());
    }
    let mut mismatches = 0;
    let mut checked = 0;
    for text in texts.iter().filter(|x| x.len() >= 2) {
        let len = text.len();
        let rev: Vec<TokenId> = text.iter().rev().copied().collect();
        for design in [UiDesign::LegacyArrowTab, UiDesign::DigitKeys] {
            let o = opts(design, 10);
            let a = evaluate(&t.predictor, &t.vocab, text, TraversalPlan::end(len), &o).unwrap();
            let b = evaluate(&mirrored, &t.vocab, &rev, TraversalPlan::begin(), &o).unwrap();
            checked += 1;
            if a.ledger != b.ledger || a.ae_ratio != b.ae_ratio {
                mismatches += 1;
            }
            // interior plans mirror onto the opposite start
            let n = rng.random_range(0..len);
            let a = evaluate(&t.predictor, &t.vocab, text, TraversalPlan::new(n, Direction::Backward), &o).unwrap();
            let b = evaluate(&mirrored, &t.vocab, &rev, TraversalPlan::new(len - 1 - n, Direction::Forward), &o).unwrap();
            checked += 1;
            if a.ledger != b.ledger {
                mismatches += 1;
            }
        }
    }
    outcome("bidirectional mirror", mismatches == 0, format!("{checked} ledger pairs, {mismatches} mismatches"))
}

fn mid_start_coverage(t: &Trained) -> Outcome {
    let mut bad = 0;
    let mut plans = 0;
    let o = opts(UiDesign::DigitKeys, 10);
    for (i, claim) in t.claims.iter().enumerate() {
        let ids = claim.ids();
        let len = ids.len();
        if len < 2 {
            continue;
        }
        let total: u64 = ids.iter().map(|&id| t.vocab.stripped_length(id).unwrap() as u64).sum();
        let plain = evaluate_leg(&t.predictor, &t.vocab, ids, Direction::Forward, &o).unwrap();
        // every start on a subset, the two ends on the rest
        let starts: Vec<usize> = if i < 40 { (0..len).collect() } else { vec![0, len / 2, len - 1] };
        for n in starts {
            for leg in [Direction::Forward, Direction::Backward] {
                plans += 1;
                let r = evaluate(&t.predictor, &t.vocab, ids, TraversalPlan::new(n, leg), &o).unwrap().ledger;
                let seed = t.vocab.stripped_length(ids[n]).unwrap() as u64;
                if r.tokens_counted != len as u64 - 1 || r.keys_manual != total - seed {
                    bad += 1;
                }
                if n == 0 && leg == Direction::Forward && r != plain {
                    bad += 1;
                }
            }
        }
    }
    outcome("mid-start coverage", bad == 0, format!("{plans} plans over {} claims, {bad} failures", t.claims.len()))
}

fn position_stability(t: &Trained) -> (Outcome, Outcome) {
    let started = Instant::now();
    let rows = run_position_sweep(
        &t.predictor,
        &t.vocab,
        &t.claims,
        &[StartPosition::Q1, StartPosition::Q2, StartPosition::Q3],
        &[Direction::Forward, Direction::Backward],
        &EvalOptions::default(),
        Pooling::Micro,
        "ngram4",
    )
    .expect("sweep");
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.new_ratio).map(|r| r * 100.0).collect();
    let secs = started.elapsed().as_secs_f64();
    if ratios.len() != 6 {
        let o = outcome("position stability", false, format!("only {} defined ratios", ratios.len()));
        return (o, outcome("position stability (soft, 5 pp)", false, "not computed"));
    }
    let max = ratios.iter().copied().fold(f64::MIN, f64::max);
    let min = ratios.iter().copied().fold(f64::MAX, f64::min);
    let spread = max - min;
    let listing = rows
        .iter()
        .map(|r| format!("{}/{}={:.1}", r.start, r.direction, r.new_ratio.unwrap() * 100.0))
        .collect::<Vec<_>>()
        .join(" ");
    let skipped: usize = rows.iter().map(|r| r.skipped).max().unwrap_or(0);
    (
        outcome(
            "position stability",
            spread < 10.0,
            format!(
                "spread {spread:.2} pp over {} claims ({skipped} skipped), {listing}; setup {:.1}s, sweep {secs:.1}s",
                t.claims.len(),
                t.setup_secs
            ),
        ),
        outcome("position stability (soft, 5 pp)", spread < 5.0, format!("spread {spread:.2} pp")),
    )
}

fn tokenizer_round_trip(t: &Trained) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let ws = train_tokenizer(&t.train_texts, 0, Scheme::Whitespace).expect("whitespace vocab");
    let extras = ['é', 'ü', '→', '日', '🙂', '\t', '\n', ' ', '"', '\u{00a0}'];
    let mut failures = 0;
    for i in 0..10_000 {
        let text = &t.train_texts[rng.random_range(0..t.train_texts.len())];
        let chars: Vec<char> = text.chars().collect();
        let a = rng.random_range(0..chars.len());
        let b = rng.random_range(a..=chars.len().min(a + 200));
        let mut snippet: Vec<char> = chars[a..b].to_vec();
        // a share of snippets carry characters the vocabulary never saw
        if i % 4 == 0 {
            for _ in 0..rng.random_range(1..4) {
                let at = rng.random_range(0..=snippet.len());
                snippet.insert(at, *extras.choose(&mut rng).unwrap());
            }
        }
        let snippet: String = snippet.into_iter().collect();
        for vocab in [&t.vocab, &ws] {
            let ids = vocab.encode(&snippet);
            if vocab.decode(ids.ids()).ok().as_deref() != Some(snippet.as_str()) {
                failures += 1;
            }
        }
    }
    outcome("tokenizer round trip", failures == 0, format!("10000 snippets x 2 schemes, {failures} failures"))
}

fn main() -> ExitCode {
    let mut outcomes = vec![increase_reproduction(), oracle_equivalence(), design_dominance(), boundary_exactness()];
    let trained = train_setup();
    outcomes.push(bidirectional_mirror(&trained));
    outcomes.push(mid_start_coverage(&trained));
    let (hard, soft) = position_stability(&trained);
    outcomes.push(hard);
    outcomes.push(tokenizer_round_trip(&trained));

    let mut failed = 0;
    for o in &outcomes {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += usize::from(!o.pass);
    }
    // advisory only: reported, never gates
    println!("{} {}: {}", if soft.pass { "PASS" } else { "WARN" }, soft.name, soft.detail);
    println!("acceptance: {} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
