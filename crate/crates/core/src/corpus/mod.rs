//! Patent-claim ingestion, dependent-claim expansion and direction-aware
//! sequence building.

pub mod synthetic;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::{TokenId, TokenSequence, Vocabulary};

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("duplicate claim ({patent_id}, {claim_no})")]
    Duplicate { patent_id: String, claim_no: u32 },
    #[error("claim ({patent_id}, {claim_no}) refers to missing parent claim {parent}")]
    DanglingParent { patent_id: String, claim_no: u32, parent: u32 },
    #[error("claim ({patent_id}, {claim_no}) has parent {parent}, which does not precede it")]
    ParentNotEarlier { patent_id: String, claim_no: u32, parent: u32 },
    #[error("claim number must be positive in patent {0}")]
    ZeroClaimNo(String),
    #[error("no claim ({patent_id}, {claim_no})")]
    NotFound { patent_id: String, claim_no: u32 },
    #[error("cycle in parent chain of ({patent_id}, {claim_no})")]
    Cycle { patent_id: String, claim_no: u32 },
    #[error("eval fraction {0} must lie strictly between 0 and 1")]
    FractionOutOfRange(f64),
    #[error("need at least {needed} patents to split, have {have}")]
    TooSmallToSplit { needed: usize, have: usize },
    #[error("claim ({patent_id}, {claim_no}) has no year")]
    MissingYear { patent_id: String, claim_no: u32 },
    #[error("corpus is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One claim as it appears in a claim file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub patent_id: String,
    pub claim_no: u32,
    #[serde(default)]
    pub parent_claim_no: Option<u32>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpc: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
}

/// Which copies of each claim go into a training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionMode {
    ForwardOnly,
    BackwardOnly,
    Mixed,
}

/// Options for [`Corpus::build_sequences`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SequenceOptions {
    /// Prepended to every reversed sequence when set. Off by default.
    pub backward_marker: Option<TokenId>,
}

/// A validated, immutable set of claims.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<ClaimRecord>,
    index: HashMap<(String, u32), usize>,
}

type Key = (String, u32);

fn key_of(r: &ClaimRecord) -> Key {
    (r.patent_id.clone(), r.claim_no)
}

impl Corpus {
    /// Validates records: unique keys, parents present and earlier.
    pub fn ingest<I: IntoIterator<Item = ClaimRecord>>(records: I) -> Result<Self, CorpusError> {
        let records: Vec<ClaimRecord> = records.into_iter().collect();
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.claim_no == 0 {
                return Err(CorpusError::ZeroClaimNo(r.patent_id.clone()));
            }
            if index.insert(key_of(r), i).is_some() {
                return Err(CorpusError::Duplicate { patent_id: r.patent_id.clone(), claim_no: r.claim_no });
            }
        }
        for r in &records {
            if let Some(parent) = r.parent_claim_no {
                if !index.contains_key(&(r.patent_id.clone(), parent)) {
                    return Err(CorpusError::DanglingParent {
                        patent_id: r.patent_id.clone(),
                        claim_no: r.claim_no,
                        parent,
                    });
                }
                if parent >= r.claim_no {
                    return Err(CorpusError::ParentNotEarlier {
                        patent_id: r.patent_id.clone(),
                        claim_no: r.claim_no,
                        parent,
                    });
                }
            }
        }
        Ok(Self { records, index })
    }

    /// Reads a JSON Lines claim file. Blank lines are skipped.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| CorpusError::Parse { line: i + 1, message: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let r: ClaimRecord = serde_json::from_str(&line)
                .map_err(|e| CorpusError::Parse { line: i + 1, message: e.to_string() })?;
            records.push(r);
        }
        Self::ingest(records)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn records(&self) -> &[ClaimRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, patent_id: &str, claim_no: u32) -> Option<&ClaimRecord> {
        self.index
            .get(&(patent_id.to_owned(), claim_no))
            .map(|&i| &self.records[i])
    }

    /// Text of the claim with its ancestor chain prepended, root first,
    /// joined by single spaces.
    pub fn expand_claim(&self, patent_id: &str, claim_no: u32) -> Result<String, CorpusError> {
        let not_found = || CorpusError::NotFound { patent_id: patent_id.to_owned(), claim_no };
        let mut chain = vec![self.get(patent_id, claim_no).ok_or_else(not_found)?];
        let mut seen = HashSet::from([claim_no]);
        while let Some(parent) = chain.last().and_then(|r| r.parent_claim_no) {
            if !seen.insert(parent) {
                return Err(CorpusError::Cycle { patent_id: patent_id.to_owned(), claim_no });
            }
            chain.push(self.get(patent_id, parent).ok_or_else(not_found)?);
        }
        let texts: Vec<&str> = chain.iter().rev().map(|r| r.text.as_str()).collect();
        Ok(texts.join(" "))
    }

    /// Expanded text of every record, in record order.
    pub fn expanded_texts(&self) -> Result<Vec<String>, CorpusError> {
        self.records
            .par_iter()
            .map(|r| self.expand_claim(&r.patent_id, r.claim_no))
            .collect()
    }

    /// Encodes every expanded claim. Mixed mode yields all forward sequences
    /// followed by their reversals in the same order.
    pub fn build_sequences(
        &self,
        vocab: &Vocabulary,
        mode: DirectionMode,
        options: SequenceOptions,
    ) -> Result<Vec<TokenSequence>, CorpusError> {
        if self.is_empty() {
            return Err(CorpusError::Empty);
        }
        let forward: Vec<TokenSequence> = self
            .expanded_texts()?
            .par_iter()
            .map(|t| vocab.encode(t))
            .collect();
        let backward = || {
            forward
                .iter()
                .map(|s| {
                    options
                        .backward_marker
                        .into_iter()
                        .chain(s.iter().rev().copied())
                        .collect::<TokenSequence>()
                })
                .collect::<Vec<_>>()
        };
        Ok(match mode {
            DirectionMode::ForwardOnly => forward,
            DirectionMode::BackwardOnly => backward(),
            DirectionMode::Mixed => {
                let mut all = backward();
                all.splice(0..0, forward);
                all
            }
        })
    }

    fn patent_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .map(|r| r.patent_id.as_str())
            .filter(|p| seen.insert(*p))
            .collect()
    }

    fn partition(&self, eval_patents: &HashSet<&str>) -> (Corpus, Corpus) {
        let (eval, train): (Vec<_>, Vec<_>) = self
            .records
            .iter()
            .cloned()
            .partition(|r| eval_patents.contains(r.patent_id.as_str()));
        (
            Corpus::ingest(train).expect("subset of a valid corpus"),
            Corpus::ingest(eval).expect("subset of a valid corpus"),
        )
    }

    /// Seeded random split into (train, eval).
    ///
    /// Whole patents move together so dependent claims keep their ancestors.
    /// The eval side receives `round(fraction * patents)` patents, clamped so
    /// neither side is empty.
    pub fn split(&self, eval_fraction: f64, seed: u64) -> Result<(Corpus, Corpus), CorpusError> {
        if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
            return Err(CorpusError::FractionOutOfRange(eval_fraction));
        }
        let mut patents = self.patent_ids();
        if patents.len() < 2 {
            return Err(CorpusError::TooSmallToSplit { needed: 2, have: patents.len() });
        }
        let n_eval = ((eval_fraction * patents.len() as f64).round() as usize).clamp(1, patents.len() - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        patents.shuffle(&mut rng);
        let eval: HashSet<&str> = patents[..n_eval].iter().copied().collect();
        Ok(self.partition(&eval))
    }

    /// Patents whose claims carry a year at or after `cutoff` go to eval.
    pub fn split_by_year(&self, cutoff: i32) -> Result<(Corpus, Corpus), CorpusError> {
        let mut eval = HashSet::new();
        for r in &self.records {
            let year = r.year.ok_or_else(|| CorpusError::MissingYear {
                patent_id: r.patent_id.clone(),
                claim_no: r.claim_no,
            })?;
            if year >= cutoff {
                eval.insert(r.patent_id.as_str());
            }
        }
        Ok(self.partition(&eval))
    }

    /// Keeps whole patents having at least one claim whose CPC tag starts
    /// with `prefix`.
    pub fn filter_cpc(&self, prefix: &str) -> Corpus {
        let keep: BTreeSet<&str> = self
            .records
            .iter()
            .filter(|r| r.cpc.as_deref().is_some_and(|c| c.starts_with(prefix)))
            .map(|r| r.patent_id.as_str())
            .collect();
        let records = self
            .records
            .iter()
            .filter(|r| keep.contains(r.patent_id.as_str()))
            .cloned();
        Corpus::ingest(records).expect("whole patents keep parents")
    }
}
