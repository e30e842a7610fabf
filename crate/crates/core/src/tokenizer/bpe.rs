//! Byte-level BPE vocabulary training.
//!
//! Training only decides *which* surfaces enter the vocabulary; encoding is
//! greedy longest-match over those surfaces (see [`super::Vocabulary::encode`]).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

type Pair = (u32, u32);

struct Word {
    symbols: Vec<u32>,
    count: i64,
}

impl Word {
    fn pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        self.symbols.windows(2).map(|w| (w[0], w[1]))
    }

    fn merge(&mut self, pair: Pair, new_id: u32) {
        let mut out = Vec::with_capacity(self.symbols.len());
        let mut i = 0;
        while i < self.symbols.len() {
            if i + 1 < self.symbols.len() && (self.symbols[i], self.symbols[i + 1]) == pair {
                out.push(new_id);
                i += 2;
            } else {
                out.push(self.symbols[i]);
                i += 1;
            }
        }
        self.symbols = out;
    }
}

/// Learns surfaces until `vocab_size` is reached or no pair occurs twice.
///
/// `piece_counts` must be sorted (any fixed order) for determinism; the
/// returned surfaces start with the 256 single-byte tokens.
pub(crate) fn train(piece_counts: &[(Vec<u8>, u64)], vocab_size: usize) -> Vec<Vec<u8>> {
    let mut surfaces: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    let mut by_surface: HashMap<Vec<u8>, u32> = surfaces
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i as u32))
        .collect();

    let mut words: Vec<Word> = piece_counts
        .iter()
        .map(|(bytes, count)| Word {
            symbols: bytes.iter().map(|&b| b as u32).collect(),
            count: *count as i64,
        })
        .collect();

    let mut pair_counts: HashMap<Pair, i64> = HashMap::new();
    let mut where_seen: HashMap<Pair, HashSet<usize>> = HashMap::new();
    for (wi, word) in words.iter().enumerate() {
        for p in word.pairs() {
            *pair_counts.entry(p).or_default() += word.count;
            where_seen.entry(p).or_default().insert(wi);
        }
    }

    let mut heap: BinaryHeap<(i64, Reverse<Pair>)> =
        pair_counts.iter().map(|(&p, &c)| (c, Reverse(p))).collect();

    while surfaces.len() < vocab_size {
        let Some((count, Reverse(pair))) = heap.pop() else {
            break;
        };
        // stale heap entry
        if pair_counts.get(&pair).copied().unwrap_or(0) != count {
            continue;
        }
        if count < 2 {
            break;
        }

        let mut merged = surfaces[pair.0 as usize].clone();
        merged.extend_from_slice(&surfaces[pair.1 as usize]);
        let new_id = match by_surface.get(&merged) {
            Some(&id) => id,
            None => {
                let id = surfaces.len() as u32;
                by_surface.insert(merged.clone(), id);
                surfaces.push(merged);
                id
            }
        };

        let mut affected: Vec<usize> = where_seen
            .remove(&pair)
            .map(|s| s.into_iter().collect())
            .unwrap_or_default();
        affected.sort_unstable();

        let mut touched: HashSet<Pair> = HashSet::new();
        for wi in affected {
            let word = &mut words[wi];
            for p in word.symbols.windows(2).map(|w| (w[0], w[1])) {
                *pair_counts.entry(p).or_default() -= word.count;
                touched.insert(p);
            }
            word.merge(pair, new_id);
            for p in word.symbols.windows(2).map(|w| (w[0], w[1])) {
                *pair_counts.entry(p).or_default() += word.count;
                where_seen.entry(p).or_default().insert(wi);
                touched.insert(p);
            }
        }
        pair_counts.remove(&pair);

        let mut touched: Vec<Pair> = touched.into_iter().collect();
        touched.sort_unstable();
        for p in touched {
            match pair_counts.get(&p).copied() {
                Some(c) if c > 0 => heap.push((c, Reverse(p))),
                Some(_) => {
                    pair_counts.remove(&p);
                }
                None => {}
            }
        }
    }

    surfaces
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(items: &[(&str, u64)]) -> Vec<(Vec<u8>, u64)> {
        items.iter().map(|(s, c)| (s.as_bytes().to_vec(), *c)).collect()
    }

    #[test]
    fn most_frequent_pair_merges_first() {
        let surfaces = train(&counts(&[(" the", 10), (" then", 3), ("a", 1)]), 257);
        assert_eq!(surfaces.len(), 257);
        // (' ', 't'), ('t','h'), ('h','e') all occur 13 times; smallest ids win.
        assert_eq!(surfaces[256], b" t".to_vec());
    }

    #[test]
    fn stops_when_no_repeated_pair() {
        let surfaces = train(&counts(&[("ab", 1)]), 1000);
        assert_eq!(surfaces.len(), 256);
    }

    #[test]
    fn learns_whole_frequent_word() {
        let surfaces = train(&counts(&[(" wherein", 50), (" where", 5)]), 300);
        assert!(surfaces.iter().any(|s| s == b" wherein"));
        assert!(surfaces.iter().any(|s| s == b" where"));
    }

    #[test]
    fn surfaces_stay_unique() {
        let surfaces = train(&counts(&[("abc", 5), ("bca", 5), ("cab", 5)]), 400);
        let set: HashSet<_> = surfaces.iter().collect();
        assert_eq!(set.len(), surfaces.len());
    }
}
