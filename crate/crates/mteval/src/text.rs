//! Tokenization.
//!
//! Deterministic, language-agnostic preprocessing: text is lowercased and
//! split into alphanumeric runs, and each word is hashed into a fixed number
//! of vocabulary buckets. Begin/end sentinels frame every sequence.

use crate::error::{Error, Result};

/// Token id of the begin-of-sequence sentinel.
pub const BOS: usize = 0;
/// Token id of the end-of-sequence sentinel.
pub const EOS: usize = 1;
/// Number of reserved token ids; hashed words start here.
pub const RESERVED: usize = 2;

/// A tokenized segment: hashed token ids framed by sentinels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    pub ids: Vec<usize>,
    pub surface: String,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Lowercased alphanumeric runs; punctuation and whitespace act as separators.
pub fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            for lc in c.to_lowercase() {
                cur.push(lc);
            }
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

// FNV-1a over the word's bytes.
fn fnv1a(word: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in word.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

/// Bucket for `word` in a vocabulary of `vocab_size` ids (sentinels reserved).
pub fn bucket(word: &str, vocab_size: usize) -> usize {
    debug_assert!(vocab_size > RESERVED);
    RESERVED + (fnv1a(word) % (vocab_size - RESERVED) as u64) as usize
}

/// Tokenizes `text` into hashed ids with BOS/EOS sentinels.
///
/// Fails on text that is empty after trimming. The output always satisfies
/// `ids.len() == words(text).len() + 2`.
pub fn tokenize(text: &str, vocab_size: usize) -> Result<TokenSeq> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput("cannot tokenize empty text".into()));
    }
    if vocab_size <= RESERVED {
        return Err(Error::Config(format!(
            "vocab_size must exceed {RESERVED}, got {vocab_size}"
        )));
    }
    let mut ids = Vec::new();
    ids.push(BOS);
    for w in words(text) {
        ids.push(bucket(&w, vocab_size));
    }
    ids.push(EOS);
    Ok(TokenSeq {
        ids,
        surface: text.to_string(),
    })
}
