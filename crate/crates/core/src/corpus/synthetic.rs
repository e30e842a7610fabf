//! Seeded generator of patent-style claim sets.
//!
//! Produces independent claims with element lists and chains of dependent
//! claims that narrow them, in the register of software and machine-learning
//! patents. Output is fully determined by the seed.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ClaimRecord;

const SUBJECTS: &[&str] = &[
    "system", "method", "apparatus", "device", "computing system", "neural network system",
    "computer-implemented method", "non-transitory computer-readable medium", "controller",
    "processing circuit",
];

const PURPOSES: &[&str] = &[
    "training a machine learning model",
    "generating text predictions",
    "classifying input data",
    "compressing sensor data",
    "detecting anomalies in network traffic",
    "scheduling computing resources",
    "encoding an input sequence",
    "ranking candidate tokens",
    "estimating a user intent",
    "allocating memory to a plurality of processes",
    "authenticating a user of a mobile device",
    "controlling a vehicle based on sensor data",
];

const ADJECTIVES: &[&str] = &[
    "first", "second", "third", "plurality of", "trained", "neural", "hidden", "output",
    "input", "predetermined", "respective", "updated", "intermediate", "remote", "local",
    "encoded", "normalized", "weighted", "candidate", "selected",
];

const COMPONENTS: &[&str] = &[
    "processor", "memory", "encoder", "decoder", "attention layer", "embedding layer",
    "feature vector", "training data set", "loss function", "classifier", "storage device",
    "network interface", "sensor", "data structure", "token sequence", "language model",
    "probability distribution", "parameter", "gradient", "user interface", "database",
    "request", "response", "signal", "hash table", "graph", "node", "cache", "buffer",
    "transformer block",
];

const VERBS: &[&str] = &[
    "receive", "generate", "determine", "transmit", "store", "compute", "update", "select",
    "compare", "identify", "encode", "decode", "predict", "normalize", "aggregate", "filter",
    "adjust", "output",
];

const QUALIFIERS: &[&str] = &[
    "based at least in part on",
    "in response to",
    "according to",
    "using",
    "associated with",
    "derived from",
    "corresponding to",
];

const LINKS: &[&str] = &[
    "is configured to",
    "is further configured to",
    "is operable to",
];

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).copied().expect("non-empty pool")
}

fn noun_phrase(rng: &mut ChaCha8Rng) -> String {
    if rng.random_bool(0.6) {
        format!("{} {}", pick(rng, ADJECTIVES), pick(rng, COMPONENTS))
    } else {
        pick(rng, COMPONENTS).to_owned()
    }
}

fn action(rng: &mut ChaCha8Rng) -> String {
    let mut s = format!("{} the {}", pick(rng, VERBS), noun_phrase(rng));
    if rng.random_bool(0.5) {
        s.push_str(&format!(" {} the {}", pick(rng, QUALIFIERS), noun_phrase(rng)));
    }
    s
}

fn element(rng: &mut ChaCha8Rng) -> String {
    format!("a {} configured to {}", noun_phrase(rng), action(rng))
}

fn independent(rng: &mut ChaCha8Rng, subject: &str) -> String {
    let n = rng.random_range(2..=4);
    let elements: Vec<String> = (0..n).map(|_| element(rng)).collect();
    let (last, rest) = elements.split_last().expect("n >= 2");
    let article = if subject.starts_with(['a', 'e', 'i', 'o', 'u']) { "An" } else { "A" };
    format!(
        "{article} {subject} for {}, comprising: {}; and {}.",
        pick(rng, PURPOSES),
        rest.join("; "),
        last
    )
}

fn dependent(rng: &mut ChaCha8Rng, subject: &str, parent: u32) -> String {
    let body = match rng.random_range(0..3) {
        0 => format!("the {} {} {}", noun_phrase(rng), pick(rng, LINKS), action(rng)),
        1 => format!("the {} comprises a {}", noun_phrase(rng), noun_phrase(rng)),
        _ => format!("the {} is {} the {}", noun_phrase(rng), pick(rng, QUALIFIERS), noun_phrase(rng)),
    };
    format!("The {subject} of claim {parent}, wherein {body}.")
}

/// Generates claims until their total text length reaches `target_bytes`.
pub fn generate(seed: u64, target_bytes: usize) -> Vec<ClaimRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut bytes = 0;
    let mut patent = 0u32;
    while bytes < target_bytes {
        patent += 1;
        let patent_id = format!("SYN{patent:06}");
        let subject = pick(&mut rng, SUBJECTS);
        let year = 2000 + rng.random_range(0..22);
        let cpc = if rng.random_bool(0.5) { "G06N" } else { "G06F" };
        let n_claims = rng.random_range(1..=5u32);
        for claim_no in 1..=n_claims {
            let (parent, text) = if claim_no == 1 {
                (None, independent(&mut rng, subject))
            } else {
                let parent = rng.random_range(1..claim_no);
                (Some(parent), dependent(&mut rng, subject, parent))
            };
            bytes += text.len();
            records.push(ClaimRecord {
                patent_id: patent_id.clone(),
                claim_no,
                parent_claim_no: parent,
                text,
                cpc: Some(cpc.to_owned()),
                year: Some(year),
            });
        }
    }
    records
}
