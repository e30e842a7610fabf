//! Count-based n-gram model with stupid-backoff scoring.
//!
//! For a context `c` truncated to its last `order - 1` tokens, the score of
//! token `w` is `discount^b * count(s, w) / count(s)` where `s` is the
//! longest suffix of `c` after which `w` was observed and `b` is the number
//! of tokens dropped from `c` to reach `s`. Tokens never observed at all
//! score zero and fill the tail of the ranking in ascending id order.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Candidate, Direction, PredictError, Prediction, Predictor};
use crate::tokenizer::{TokenId, TokenSequence};

pub const DEFAULT_DISCOUNT: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
struct Successors {
    total: u64,
    /// (id, count), count descending then id ascending.
    ranked: Vec<(TokenId, u64)>,
    /// (id, count), id ascending.
    by_id: Vec<(TokenId, u64)>,
}

impl Successors {
    fn from_counts(counts: HashMap<TokenId, u64>) -> Self {
        let mut by_id: Vec<(TokenId, u64)> = counts.into_iter().collect();
        by_id.sort_unstable();
        Self::from_sorted(by_id)
    }

    fn from_sorted(by_id: Vec<(TokenId, u64)>) -> Self {
        let total = by_id.iter().map(|&(_, c)| c).sum();
        let mut ranked = by_id.clone();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        Self { total, ranked, by_id }
    }

    fn count(&self, id: TokenId) -> u64 {
        self.by_id
            .binary_search_by_key(&id, |&(i, _)| i)
            .map_or(0, |i| self.by_id[i].1)
    }
}

/// Immutable n-gram counts for one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelRepr", try_from = "ModelRepr")]
pub struct NgramModel {
    order: usize,
    discount: f64,
    vocab_size: usize,
    /// `tables[j]` maps contexts of length `j` to their successors.
    tables: Vec<HashMap<Vec<TokenId>, Successors>>,
}

/// Counts every window of every sequence.
pub fn train_ngram(
    sequences: &[TokenSequence],
    order: usize,
    discount: f64,
    vocab_size: usize,
) -> Result<NgramModel, PredictError> {
    if order == 0 {
        return Err(PredictError::ZeroOrder);
    }
    if !(discount > 0.0 && discount < 1.0) {
        return Err(PredictError::BadDiscount(discount));
    }
    if sequences.iter().all(|s| s.is_empty()) {
        return Err(PredictError::EmptyTraining);
    }
    let mut raw: Vec<HashMap<Vec<TokenId>, HashMap<TokenId, u64>>> = vec![HashMap::new(); order];
    for seq in sequences {
        if let Some(&id) = seq.iter().find(|&&id| id as usize >= vocab_size) {
            return Err(PredictError::IdOutOfRange { id, vocab_size });
        }
        for (pos, &next) in seq.iter().enumerate() {
            for (len, table) in raw.iter_mut().enumerate().take(pos + 1) {
                let ctx = seq[pos - len..pos].to_vec();
                *table.entry(ctx).or_default().entry(next).or_default() += 1;
            }
        }
    }
    let tables = raw
        .into_iter()
        .map(|t| t.into_iter().map(|(ctx, c)| (ctx, Successors::from_counts(c))).collect())
        .collect();
    Ok(NgramModel { order, discount, vocab_size, tables })
}

impl NgramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Number of times `next` followed `context` (`context.len() < order`).
    pub fn count(&self, context: &[TokenId], next: TokenId) -> u64 {
        self.tables
            .get(context.len())
            .and_then(|t| t.get(context))
            .map_or(0, |s| s.count(next))
    }

    /// Number of distinct successors observed after `context`.
    pub fn successor_count(&self, context: &[TokenId]) -> usize {
        self.tables
            .get(context.len())
            .and_then(|t| t.get(context))
            .map_or(0, |s| s.by_id.len())
    }

    /// Stupid-backoff score of a single token.
    pub fn score(&self, context: &[TokenId], token: TokenId) -> f64 {
        let longest = context.len().min(self.order - 1);
        let mut weight = 1.0;
        for len in (0..=longest).rev() {
            let ctx = &context[context.len() - len..];
            if let Some(s) = self.tables[len].get(ctx) {
                let c = s.count(token);
                if c > 0 {
                    return weight * c as f64 / s.total as f64;
                }
            }
            weight *= self.discount;
        }
        0.0
    }

    /// Top-`k` tokens for `context` (in model order).
    pub fn predict_topk(&self, context: &[TokenId], k: usize, direction: Direction) -> Result<Prediction, PredictError> {
        if k == 0 {
            return Err(PredictError::ZeroK);
        }
        if k > self.vocab_size {
            return Err(PredictError::KTooLarge { k, vocab_size: self.vocab_size });
        }
        let longest = context.len().min(self.order - 1);
        let levels: Vec<Option<&Successors>> = (0..=longest)
            .rev()
            .map(|len| self.tables[len].get(&context[context.len() - len..]))
            .collect();

        // Within one level scores fall with rank, so each level can contribute
        // at most its first k tokens that no longer level already scores.
        let mut pool: Vec<Candidate> = Vec::with_capacity(k * levels.len());
        let mut weight = 1.0;
        for (depth, level) in levels.iter().enumerate() {
            if let Some(s) = level {
                let shadowed = |id: TokenId| levels[..depth].iter().flatten().any(|l| l.count(id) > 0);
                pool.extend(
                    s.ranked
                        .iter()
                        .filter(|&&(id, _)| !shadowed(id))
                        .take(k)
                        .map(|&(id, c)| Candidate { id, score: weight * c as f64 / s.total as f64 }),
                );
            }
            weight *= self.discount;
        }
        pool.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
        pool.truncate(k);

        if pool.len() < k {
            let have: std::collections::HashSet<TokenId> = pool.iter().map(|c| c.id).collect();
            let fill = (0..self.vocab_size as TokenId)
                .filter(|id| !have.contains(id))
                .take(k - pool.len())
                .map(|id| Candidate { id, score: 0.0 })
                .collect::<Vec<_>>();
            pool.extend(fill);
        }
        Prediction::new(pool, direction, k)
    }
}

impl Predictor for NgramModel {
    fn predict(&self, context: &[TokenId], direction: Direction, k: usize) -> Result<Prediction, PredictError> {
        self.predict_topk(context, k, direction)
    }
}

/// One context and its successor counts.
type TableRow = (Vec<TokenId>, Vec<(TokenId, u64)>);

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    order: usize,
    discount: f64,
    vocab_size: usize,
    /// Per context length: (context, [(id, count)]) sorted by context.
    tables: Vec<Vec<TableRow>>,
}

impl From<NgramModel> for ModelRepr {
    fn from(m: NgramModel) -> Self {
        let tables = m
            .tables
            .into_iter()
            .map(|t| {
                let mut rows: Vec<_> = t.into_iter().map(|(ctx, s)| (ctx, s.by_id)).collect();
                rows.sort_unstable_by(|a, b| a.0.cmp(&b.0));
                rows
            })
            .collect();
        Self { order: m.order, discount: m.discount, vocab_size: m.vocab_size, tables }
    }
}

impl TryFrom<ModelRepr> for NgramModel {
    type Error = String;

    fn try_from(r: ModelRepr) -> Result<Self, String> {
        if r.order == 0 || r.tables.len() != r.order {
            return Err(format!("order {} does not match {} count tables", r.order, r.tables.len()));
        }
        if !(r.discount > 0.0 && r.discount < 1.0) {
            return Err(format!("discount {} out of range", r.discount));
        }
        let mut tables = Vec::with_capacity(r.order);
        for (len, rows) in r.tables.into_iter().enumerate() {
            let mut table = HashMap::with_capacity(rows.len());
            for (ctx, mut by_id) in rows {
                if ctx.len() != len {
                    return Err(format!("context of length {} in table {len}", ctx.len()));
                }
                if let Some(&(id, _)) = by_id.iter().find(|&&(id, c)| id as usize >= r.vocab_size || c == 0) {
                    return Err(format!("invalid successor {id}"));
                }
                by_id.sort_unstable();
                table.insert(ctx, Successors::from_sorted(by_id));
            }
            tables.push(table);
        }
        Ok(Self { order: r.order, discount: r.discount, vocab_size: r.vocab_size, tables })
    }
}
