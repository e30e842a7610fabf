//! Trainable text <-> token mapping.
//!
//! Both schemes share the same layout: ids `0..=255` are single-byte tokens
//! (so every text is encodable and unknown characters fall back to bytes),
//! followed by learned surfaces. A surface that begins a new word carries one
//! leading space, so decoding is plain concatenation.
//!
//! Encoding splits text into pieces (see [`pretokenize`]) and then takes the
//! greedy longest vocabulary match inside each piece.

mod bpe;
pub mod pretokenize;
mod vocab_file;

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use vocab_file::{read_vocabulary, write_vocabulary};

pub type TokenId = u32;

/// Number of single-byte fallback tokens at the start of every vocabulary.
pub const BYTE_TOKENS: usize = 256;

/// Smallest vocabulary size accepted for the BPE scheme.
pub const MIN_BPE_VOCAB: usize = 260;

pub const DEFAULT_BPE_VOCAB: usize = 8192;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TokenizerError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("vocab size {0} is below the BPE floor of {MIN_BPE_VOCAB}")]
    VocabTooSmall(usize),
    #[error("token id {id} out of range for vocabulary of size {size}")]
    IdOutOfRange { id: TokenId, size: usize },
    #[error("vocabulary file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Bpe,
    Whitespace,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Bpe => "bpe",
            Scheme::Whitespace => "whitespace",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bpe" => Ok(Scheme::Bpe),
            "whitespace" => Ok(Scheme::Whitespace),
            other => Err(format!("unknown scheme `{other}` (expected bpe or whitespace)")),
        }
    }
}

/// An ordered list of token ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence(Vec<TokenId>);

impl TokenSequence {
    pub fn new(ids: Vec<TokenId>) -> Self {
        Self(ids)
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<TokenId> {
        self.0
    }

    /// Element-wise reversal of the ids (never of characters).
    pub fn reversed(&self) -> TokenSequence {
        Self(self.0.iter().rev().copied().collect())
    }
}

impl Deref for TokenSequence {
    type Target = [TokenId];

    fn deref(&self) -> &[TokenId] {
        &self.0
    }
}

impl From<Vec<TokenId>> for TokenSequence {
    fn from(ids: Vec<TokenId>) -> Self {
        Self(ids)
    }
}

impl FromIterator<TokenId> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = TokenId>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Immutable token inventory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    scheme: Scheme,
    surfaces: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, TokenId>,
    max_len: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from surfaces in id order.
    ///
    /// Every single byte must be present so that encoding is total.
    pub fn from_surfaces(scheme: Scheme, surfaces: Vec<Vec<u8>>) -> Result<Self, TokenizerError> {
        let mut lookup = HashMap::with_capacity(surfaces.len());
        for (id, s) in surfaces.iter().enumerate() {
            if s.is_empty() {
                return Err(TokenizerError::Format(format!("token {id} has an empty surface")));
            }
            if lookup.insert(s.clone(), id as TokenId).is_some() {
                return Err(TokenizerError::Format(format!(
                    "token {id} duplicates surface {:?}",
                    String::from_utf8_lossy(s)
                )));
            }
        }
        if let Some(b) = (0..=255u8).find(|b| !lookup.contains_key(&[*b][..])) {
            return Err(TokenizerError::Format(format!("missing single-byte token 0x{b:02x}")));
        }
        let max_len = surfaces.iter().map(Vec::len).max().unwrap_or(1);
        Ok(Self { scheme, surfaces, lookup, max_len })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn id_of(&self, surface: &str) -> Option<TokenId> {
        self.lookup.get(surface.as_bytes()).copied()
    }

    /// True for the single-byte tokens that cover characters absent from
    /// the learned inventory.
    pub fn is_byte_fallback(&self, id: TokenId) -> bool {
        self.surfaces
            .get(id as usize)
            .is_some_and(|s| s.len() == 1 && !s[0].is_ascii())
    }

    pub fn surface_bytes(&self, id: TokenId) -> Result<&[u8], TokenizerError> {
        self.surfaces
            .get(id as usize)
            .map(Vec::as_slice)
            .ok_or(TokenizerError::IdOutOfRange { id, size: self.len() })
    }

    pub(crate) fn surfaces(&self) -> &[Vec<u8>] {
        &self.surfaces
    }

    pub fn encode(&self, text: &str) -> TokenSequence {
        let mut ids = Vec::with_capacity(text.len() / 3 + 1);
        for piece in pretokenize::pieces(text) {
            self.encode_piece(piece.as_bytes(), &mut ids);
        }
        TokenSequence(ids)
    }

    fn encode_piece(&self, piece: &[u8], out: &mut Vec<TokenId>) {
        if let Some(&id) = self.lookup.get(piece) {
            out.push(id);
            return;
        }
        let mut pos = 0;
        while pos < piece.len() {
            let longest = self.max_len.min(piece.len() - pos);
            let (id, len) = (1..=longest)
                .rev()
                .find_map(|len| self.lookup.get(&piece[pos..pos + len]).map(|&id| (id, len)))
                .expect("single-byte tokens cover every byte");
            out.push(id);
            pos += len;
        }
    }

    /// Concatenates surfaces in order.
    ///
    /// Arbitrary id sequences (e.g. reversed ones) can split multi-byte
    /// characters; such fragments decode to U+FFFD.
    pub fn decode(&self, ids: &[TokenId]) -> Result<String, TokenizerError> {
        let mut bytes = Vec::new();
        for &id in ids {
            bytes.extend_from_slice(self.surface_bytes(id)?);
        }
        Ok(match String::from_utf8(bytes) {
            Ok(s) => s,
            Err(e) => String::from_utf8_lossy(e.as_bytes()).into_owned(),
        })
    }

    /// Surface of `id` and the number of characters left after stripping
    /// surrounding whitespace.
    pub fn token_surface(&self, id: TokenId) -> Result<(Cow<'_, str>, usize), TokenizerError> {
        let bytes = self.surface_bytes(id)?;
        Ok((String::from_utf8_lossy(bytes), stripped_length(bytes)))
    }

    pub fn stripped_length(&self, id: TokenId) -> Result<usize, TokenizerError> {
        self.surface_bytes(id).map(stripped_length)
    }
}

/// Characters remaining after trimming whitespace at both ends.
///
/// Surfaces that are not valid UTF-8 (fragments of a multi-byte character)
/// count one character per lead byte, so a character split across tokens is
/// charged once.
pub fn stripped_length(bytes: &[u8]) -> usize {
    match std::str::from_utf8(bytes) {
        Ok(s) => s.trim().chars().count(),
        Err(_) => bytes
            .trim_ascii()
            .iter()
            .filter(|&&b| (b & 0xC0) != 0x80)
            .count(),
    }
}

/// Trains a vocabulary over `corpus`.
///
/// `vocab_size` is ignored by the whitespace scheme, which keeps every
/// distinct piece.
pub fn train_tokenizer<I, S>(corpus: I, vocab_size: usize, scheme: Scheme) -> Result<Vocabulary, TokenizerError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if scheme == Scheme::Bpe && vocab_size < MIN_BPE_VOCAB {
        return Err(TokenizerError::VocabTooSmall(vocab_size));
    }
    let mut counts: HashMap<Vec<u8>, u64> = HashMap::new();
    let mut seen_text = false;
    for text in corpus {
        let text = text.as_ref();
        seen_text |= !text.is_empty();
        for piece in pretokenize::pieces(text) {
            *counts.entry(piece.as_bytes().to_vec()).or_default() += 1;
        }
    }
    if !seen_text {
        return Err(TokenizerError::EmptyCorpus);
    }
    // frequency desc, then bytes asc
    let mut counts: Vec<(Vec<u8>, u64)> = counts.into_iter().collect();
    counts.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let surfaces = match scheme {
        Scheme::Bpe => bpe::train(&counts, vocab_size),
        Scheme::Whitespace => {
            let mut surfaces: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
            surfaces.extend(counts.into_iter().map(|(s, _)| s).filter(|s| s.len() > 1));
            surfaces
        }
    };
    Vocabulary::from_surfaces(scheme, surfaces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces_of(v: &Vocabulary, text: &str) -> Vec<String> {
        v.encode(text)
            .iter()
            .map(|&id| v.token_surface(id).unwrap().0.into_owned())
            .collect()
    }

    #[test]
    fn whitespace_scheme_marks_non_initial_words() {
        let v = train_tokenizer(["a b a b"], 0, Scheme::Whitespace).unwrap();
        for s in ["a", " b", " a"] {
            assert!(v.id_of(s).is_some(), "missing {s:?}");
        }
        assert_eq!(v.len(), BYTE_TOKENS + 2);
    }

    #[test]
    fn whitespace_encode_splits_on_boundaries() {
        let v = train_tokenizer(["A cat sat. The cat ran."], 0, Scheme::Whitespace).unwrap();
        assert_eq!(surfaces_of(&v, "A cat sat."), vec!["A", " cat", " sat", "."]);
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = ["the device of claim 1, wherein the device is a sensor."; 3];
        let a = train_tokenizer(corpus, 300, Scheme::Bpe).unwrap();
        let b = train_tokenizer(corpus, 300, Scheme::Bpe).unwrap();
        assert_eq!(a, b);
        let mut fa = Vec::new();
        let mut fb = Vec::new();
        write_vocabulary(&a, &mut fa).unwrap();
        write_vocabulary(&b, &mut fb).unwrap();
        assert_eq!(fa, fb);
    }

    #[test]
    fn empty_corpus_rejected() {
        let empty: [&str; 0] = [];
        assert_eq!(train_tokenizer(empty, 300, Scheme::Bpe), Err(TokenizerError::EmptyCorpus));
        assert_eq!(train_tokenizer([""], 300, Scheme::Whitespace), Err(TokenizerError::EmptyCorpus));
    }

    #[test]
    fn bpe_floor() {
        assert_eq!(train_tokenizer(["abc"], 259, Scheme::Bpe), Err(TokenizerError::VocabTooSmall(259)));
        assert!(train_tokenizer(["abc"], 259, Scheme::Whitespace).is_ok());
    }

    #[test]
    fn encode_decode_basics() {
        let v = train_tokenizer(["wherein the device"], 300, Scheme::Bpe).unwrap();
        assert!(v.encode("").is_empty());
        assert_eq!(v.decode(&[]).unwrap(), "");
        let text = "wherein the device";
        assert_eq!(v.decode(&v.encode(text)).unwrap(), text);
    }

    #[test]
    fn unknown_characters_fall_back_to_bytes() {
        let v = train_tokenizer(["plain ascii text"], 0, Scheme::Whitespace).unwrap();
        let text = "naïve ∑ text";
        let ids = v.encode(text);
        assert_eq!(v.decode(&ids).unwrap(), text);
        assert!(ids.iter().any(|&id| v.is_byte_fallback(id)));
    }

    #[test]
    fn decode_keeps_leading_space() {
        let v = train_tokenizer(["a cat"], 0, Scheme::Whitespace).unwrap();
        let id = v.id_of(" cat").unwrap();
        assert_eq!(v.decode(&[id]).unwrap(), " cat");
    }

    #[test]
    fn decode_reversed_is_reversed_surfaces() {
        let v = train_tokenizer(["the cat sat"], 0, Scheme::Whitespace).unwrap();
        let ids = v.encode("the cat sat");
        let rev = ids.reversed();
        assert_eq!(v.decode(&rev).unwrap(), " sat cat".to_string() + "the");
    }

    #[test]
    fn decode_rejects_bad_id() {
        let v = train_tokenizer(["x"], 0, Scheme::Whitespace).unwrap();
        let bad = v.len() as TokenId;
        assert_eq!(
            v.decode(&[bad]),
            Err(TokenizerError::IdOutOfRange { id: bad, size: v.len() })
        );
        assert!(v.token_surface(bad).is_err());
    }

    #[test]
    fn stripped_lengths() {
        assert_eq!(stripped_length(b" cat"), 3);
        assert_eq!(stripped_length(b"."), 1);
        assert_eq!(stripped_length(b"  "), 0);
        assert_eq!(stripped_length(" é ".as_bytes()), 1);
        // lead byte of 'é' alone counts once; the continuation byte alone counts zero
        assert_eq!(stripped_length(&[0xC3]), 1);
        assert_eq!(stripped_length(&[0xA9]), 0);
    }

    #[test]
    fn token_surface_reports_stripped_length() {
        let v = train_tokenizer(["a cat"], 0, Scheme::Whitespace).unwrap();
        let (s, n) = v.token_surface(v.id_of(" cat").unwrap()).unwrap();
        assert_eq!((s.as_ref(), n), (" cat", 3));
        let (s, n) = v.token_surface(b'.' as TokenId).unwrap();
        assert_eq!((s.as_ref(), n), (".", 1));
    }

    #[test]
    fn duplicate_or_empty_surface_rejected() {
        let mut surfaces: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        surfaces.push(b"a".to_vec());
        assert!(Vocabulary::from_surfaces(Scheme::Bpe, surfaces.clone()).is_err());
        surfaces.pop();
        surfaces.push(Vec::new());
        assert!(Vocabulary::from_surfaces(Scheme::Bpe, surfaces).is_err());
    }
}
