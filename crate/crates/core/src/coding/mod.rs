//! Shannon-Fano prefix codes and noisy-channel decoding.
//!
//! Bitstrings are ASCII `'0'`/`'1'` text everywhere in the public API.

mod channel;

pub use channel::{block_code_map, estimate_decoding_error, simulate_channel, BlockCode, ChannelMatrix};

use serde::Serialize;
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use thiserror::Error;

use crate::utility::{entropy_bits, DiscreteDistribution, UtilityError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodingError {
    #[error(transparent)]
    Distribution(#[from] UtilityError),
    #[error("{symbols} symbols but {probs} probabilities")]
    LengthMismatch { symbols: usize, probs: usize },
    #[error("duplicate symbol {0:?}")]
    DuplicateSymbol(String),
    #[error("symbol {0:?} has zero probability")]
    ZeroProbability(String),
    #[error("length list is empty")]
    EmptyLengths,
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("no codeword matches the bits starting at offset {offset}")]
    Unmatched { offset: usize },
    #[error("incomplete codeword starting at offset {offset}")]
    Incomplete { offset: usize },
    #[error("invalid bit {found:?} at offset {offset}")]
    InvalidBit { offset: usize, found: char },
    #[error("codewords are not prefix-free")]
    NotPrefixFree,
    #[error("channel row {row}: {reason}")]
    InvalidChannel { row: usize, reason: &'static str },
    #[error("input letter {letter} outside channel with {inputs} inputs")]
    LetterOutOfRange { letter: usize, inputs: usize },
    #[error("block code needs a binary-input binary-output channel, got {inputs}x{outputs}")]
    IncompatibleChannel { inputs: usize, outputs: usize },
    #[error("block length {0} outside 1..=20")]
    BlockLengthOutOfRange(usize),
    #[error("block code needs non-empty codewords of equal length")]
    RaggedBlockCode,
}

/// Symbols with their probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceAlphabet {
    symbols: Vec<String>,
    probs: DiscreteDistribution,
}

impl SourceAlphabet {
    pub fn new(symbols: Vec<String>, probs: DiscreteDistribution) -> Result<Self, CodingError> {
        if symbols.len() != probs.len() {
            return Err(CodingError::LengthMismatch { symbols: symbols.len(), probs: probs.len() });
        }
        let mut seen = HashSet::new();
        for s in &symbols {
            if !seen.insert(s.as_str()) {
                return Err(CodingError::DuplicateSymbol(s.clone()));
            }
        }
        Ok(Self { symbols, probs })
    }

    /// Symbols named `s1`, `s2`, ...
    pub fn numbered(probs: Vec<f64>) -> Result<Self, CodingError> {
        let symbols = (1..=probs.len()).map(|i| format!("s{i}")).collect();
        Self::new(symbols, DiscreteDistribution::new(probs)?)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn probs(&self) -> &[f64] {
        self.probs.probs()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(self.probs())
    }

    fn require_positive(&self) -> Result<(), CodingError> {
        match self.symbols.iter().zip(self.probs()).find(|(_, &p)| p <= 0.0) {
            Some((s, _)) => Err(CodingError::ZeroProbability(s.clone())),
            None => Ok(()),
        }
    }
}

/// Smallest `l >= 1` with `2^-l <= p`, i.e. `max(1, ceil(log2(1/p)))`.
fn shannon_fano_length(p: f64) -> u32 {
    let mut l = (-p.log2()).ceil().max(1.0) as u32;
    // log2 can land one ulp on the wrong side of an integer.
    while l > 1 && 2f64.powi(-(l as i32 - 1)) <= p {
        l -= 1;
    }
    while 2f64.powi(-(l as i32)) > p {
        l += 1;
    }
    l
}

/// Codeword lengths `ceil(log2(1/p_i))`, at least one bit each.
pub fn shannon_fano_lengths(a: &SourceAlphabet) -> Result<Vec<u32>, CodingError> {
    a.require_positive()?;
    Ok(a.probs().iter().map(|&p| shannon_fano_length(p)).collect())
}

/// `sum 2^-l_i`.
pub fn kraft_sum(lengths: &[u32]) -> Result<f64, CodingError> {
    if lengths.is_empty() {
        return Err(CodingError::EmptyLengths);
    }
    Ok(lengths.iter().map(|&l| 2f64.powi(-(l as i32))).sum())
}

fn is_prefix_free(words: &[String]) -> bool {
    let mut sorted: Vec<&str> = words.iter().map(String::as_str).collect();
    sorted.sort_unstable();
    // In lexicographic order a prefix sorts immediately before some word it
    // prefixes, so adjacent pairs suffice.
    sorted.windows(2).all(|w| !w[1].starts_with(w[0]))
}

/// Symbol-to-codeword table aligned with its alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefixCode {
    symbols: Vec<String>,
    probs: Vec<f64>,
    codewords: Vec<String>,
}

impl PrefixCode {
    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn codewords(&self) -> &[String] {
        &self.codewords
    }

    pub fn lengths(&self) -> Vec<u32> {
        self.codewords.iter().map(|c| c.len() as u32).collect()
    }

    pub fn codeword(&self, symbol: &str) -> Option<&str> {
        self.symbols.iter().position(|s| s == symbol).map(|i| self.codewords[i].as_str())
    }

    pub fn is_prefix_free(&self) -> bool {
        is_prefix_free(&self.codewords)
    }

    /// `symbol<TAB>probability<TAB>codeword` lines.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for ((s, p), c) in self.symbols.iter().zip(&self.probs).zip(&self.codewords) {
            let _ = writeln!(out, "{s}\t{p}\t{c}");
        }
        out
    }
}

/// Shannon's construction: sort by descending probability (stable), then
/// codeword `i` is the first `l_i` bits of the binary expansion of the
/// cumulative probability of the symbols before it.
///
/// The code is returned in the alphabet's original symbol order.
pub fn build_code(a: &SourceAlphabet) -> Result<PrefixCode, CodingError> {
    let lengths = shannon_fano_lengths(a)?;
    let probs = a.probs();
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&x, &y| probs[y].total_cmp(&probs[x]));

    let mut codewords = vec![String::new(); a.len()];
    let mut cumulative = 0.0f64;
    for &i in &order {
        let mut fraction = cumulative;
        let mut word = String::with_capacity(lengths[i] as usize);
        for _ in 0..lengths[i] {
            fraction *= 2.0;
            if fraction >= 1.0 {
                word.push('1');
                fraction -= 1.0;
            } else {
                word.push('0');
            }
        }
        codewords[i] = word;
        cumulative += probs[i];
    }
    if !is_prefix_free(&codewords) {
        return Err(CodingError::NotPrefixFree);
    }
    Ok(PrefixCode { symbols: a.symbols().to_vec(), probs: probs.to_vec(), codewords })
}

/// Concatenated codewords of `message`.
pub fn encode<S: AsRef<str>>(code: &PrefixCode, message: &[S]) -> Result<String, CodingError> {
    let mut bits = String::new();
    for symbol in message {
        let symbol = symbol.as_ref();
        bits.push_str(code.codeword(symbol).ok_or_else(|| CodingError::UnknownSymbol(symbol.to_owned()))?);
    }
    Ok(bits)
}

/// Splits `bits` into codewords; errors carry the offset of the first bit of
/// the offending word.
pub fn decode(code: &PrefixCode, bits: &str) -> Result<Vec<String>, CodingError> {
    let table: HashMap<&str, usize> = code.codewords.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let max_len = code.codewords.iter().map(String::len).max().unwrap_or(0);
    let mut out = Vec::new();
    let mut start = 0;
    for (offset, ch) in bits.char_indices() {
        if ch != '0' && ch != '1' {
            return Err(CodingError::InvalidBit { offset, found: ch });
        }
        let word = &bits[start..=offset];
        if let Some(&i) = table.get(word) {
            out.push(code.symbols[i].clone());
            start = offset + 1;
        } else if word.len() >= max_len {
            return Err(CodingError::Unmatched { offset: start });
        }
    }
    if start < bits.len() {
        return Err(CodingError::Incomplete { offset: start });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthBounds {
    /// Average codeword length `sum p_i l_i`.
    pub average_length: f64,
    pub entropy: f64,
    /// `H <= L < H + 1`.
    pub holds: bool,
    /// Some symbol has `p > 1/2` and was padded to one bit.
    pub padded: bool,
}

/// Average Shannon-Fano length against the source entropy.
pub fn average_length_bounds(a: &SourceAlphabet) -> Result<LengthBounds, CodingError> {
    let lengths = shannon_fano_lengths(a)?;
    let average_length: f64 = a.probs().iter().zip(&lengths).map(|(p, &l)| p * f64::from(l)).sum();
    let entropy = a.entropy();
    // Dyadic sources reach L = H up to summation rounding.
    let slack = 1e-12;
    let holds = entropy <= average_length + slack && average_length < entropy + 1.0;
    let padded = a.probs().iter().any(|&p| p > 0.5);
    Ok(LengthBounds { average_length, entropy, holds, padded })
}
