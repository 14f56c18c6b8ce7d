use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

use super::{CodingError, PrefixCode};
use crate::portfolio::ReallocationVector;
use crate::rng::{stream, Domain};
use crate::stats::MeanEstimate;

const ROW_TOLERANCE: f64 = 1e-9;

/// Discrete memoryless channel: `transition[i][j]` is the probability of
/// receiving letter `j` when letter `i` is sent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelMatrix {
    transition: Vec<Vec<f64>>,
}

impl ChannelMatrix {
    pub fn new(transition: Vec<Vec<f64>>) -> Result<Self, CodingError> {
        let outputs = transition.first().map_or(0, Vec::len);
        if outputs == 0 {
            return Err(CodingError::InvalidChannel { row: 0, reason: "matrix is empty" });
        }
        for (row, values) in transition.iter().enumerate() {
            if values.len() != outputs {
                return Err(CodingError::InvalidChannel { row, reason: "ragged row" });
            }
            if values.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(CodingError::InvalidChannel { row, reason: "negative or non-finite entry" });
            }
            if (values.iter().sum::<f64>() - 1.0).abs() > ROW_TOLERANCE {
                return Err(CodingError::InvalidChannel { row, reason: "row does not sum to 1" });
            }
        }
        Ok(Self { transition })
    }

    pub fn binary_symmetric(flip: f64) -> Result<Self, CodingError> {
        Self::new(vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]])
    }

    pub fn noiseless(letters: usize) -> Result<Self, CodingError> {
        Self::new((0..letters).map(|i| (0..letters).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect())
    }

    pub fn inputs(&self) -> usize {
        self.transition.len()
    }

    pub fn outputs(&self) -> usize {
        self.transition[0].len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    fn samplers(&self) -> Vec<WeightedIndex<f64>> {
        // Validated rows sum to one, so every row has positive total weight.
        self.transition.iter().map(|row| WeightedIndex::new(row).expect("validated row")).collect()
    }
}

/// Sends each letter through the channel independently.
pub fn simulate_channel(ch: &ChannelMatrix, input: &[usize], seed: u64) -> Result<Vec<usize>, CodingError> {
    if let Some(&letter) = input.iter().find(|&&l| l >= ch.inputs()) {
        return Err(CodingError::LetterOutOfRange { letter, inputs: ch.inputs() });
    }
    let samplers = ch.samplers();
    let mut rng = stream(seed, Domain::Channel, 0);
    Ok(input.iter().map(|&l| samplers[l].sample(&mut rng)).collect())
}

/// Fixed-length binary code; message integer `m` is sent as `codewords[m]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockCode {
    codewords: Vec<String>,
    #[serde(skip)]
    packed: Vec<u64>,
    #[serde(skip)]
    lookup: HashMap<u64, usize>,
    length: usize,
}

fn pack(word: &str) -> Result<u64, CodingError> {
    word.char_indices().try_fold(0u64, |acc, (offset, c)| match c {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        found => Err(CodingError::InvalidBit { offset, found }),
    })
}

impl BlockCode {
    /// Codewords must be distinct, of one common length between 1 and 64.
    pub fn new(codewords: Vec<String>) -> Result<Self, CodingError> {
        let length = codewords.first().map_or(0, String::len);
        if length == 0 || length > 64 || codewords.iter().any(|c| c.len() != length) {
            return Err(CodingError::RaggedBlockCode);
        }
        let packed = codewords.iter().map(|c| pack(c)).collect::<Result<Vec<_>, _>>()?;
        let mut lookup = HashMap::with_capacity(packed.len());
        for (m, &p) in packed.iter().enumerate() {
            if lookup.insert(p, m).is_some() {
                return Err(CodingError::NotPrefixFree);
            }
        }
        Ok(Self { codewords, packed, lookup, length })
    }

    /// `n`-fold repetition of a single bit: two messages.
    pub fn repetition(n: usize) -> Result<Self, CodingError> {
        Self::new(vec!["0".repeat(n), "1".repeat(n)])
    }

    /// Pads every codeword of a prefix code with trailing zeros to the
    /// longest length. Prefix-freeness keeps the padded words distinct.
    pub fn from_prefix_code(code: &PrefixCode) -> Result<Self, CodingError> {
        let width = code.codewords().iter().map(String::len).max().unwrap_or(0);
        Self::new(code.codewords().iter().map(|c| format!("{c:0<width$}")).collect())
    }

    pub fn codewords(&self) -> &[String] {
        &self.codewords
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn block_length(&self) -> usize {
        self.length
    }

    /// Nearest codeword in Hamming distance, ties to the lowest integer.
    pub fn decode_word(&self, received: u64) -> usize {
        if let Some(&m) = self.lookup.get(&received) {
            return m;
        }
        let mut best = 0;
        let mut best_distance = u32::MAX;
        for (m, &word) in self.packed.iter().enumerate() {
            let d = (word ^ received).count_ones();
            if d < best_distance {
                best = m;
                best_distance = d;
            }
        }
        best
    }

    /// Word for a reallocation vector (requires the identity block map).
    pub fn encode_vector(&self, v: &ReallocationVector) -> Option<&str> {
        if v.len() != self.length {
            return None;
        }
        self.lookup.get(&v.to_index()).map(|&m| self.codewords[m].as_str())
    }

    pub fn decode_vector(&self, word: &str) -> Result<ReallocationVector, CodingError> {
        if word.len() != self.length {
            return Err(CodingError::Incomplete { offset: 0 });
        }
        let packed = pack(word)?;
        let m = *self.lookup.get(&packed).ok_or(CodingError::Unmatched { offset: 0 })?;
        Ok(ReallocationVector::from_index(self.packed[m], self.length))
    }
}

/// Identity map from the `2^N` reallocation vectors to `N`-bit words,
/// asset 1 in the most significant bit.
pub fn block_code_map(n_assets: usize) -> Result<BlockCode, CodingError> {
    if !(1..=20).contains(&n_assets) {
        return Err(CodingError::BlockLengthOutOfRange(n_assets));
    }
    BlockCode::new((0..1u64 << n_assets).map(|m| ReallocationVector::from_index(m, n_assets).to_bit_string()).collect())
}

/// Probability that a uniformly chosen message decodes to another message.
///
/// Trial `k` uses its own random stream, so the estimate is independent of
/// thread count.
pub fn estimate_decoding_error(
    code: &BlockCode,
    ch: &ChannelMatrix,
    trials: usize,
    seed: u64,
) -> Result<MeanEstimate, CodingError> {
    if ch.inputs() != 2 || ch.outputs() != 2 {
        return Err(CodingError::IncompatibleChannel { inputs: ch.inputs(), outputs: ch.outputs() });
    }
    let samplers = ch.samplers();
    let messages = code.len();
    let errors: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(seed, Domain::Channel, trial + 1);
            let sent = rng.gen_range(0..messages);
            let word = code.packed[sent];
            let mut received = 0u64;
            for bit in (0..code.length).rev() {
                let letter = ((word >> bit) & 1) as usize;
                received = (received << 1) | samplers[letter].sample(&mut rng) as u64;
            }
            if code.decode_word(received) == sent { 0.0 } else { 1.0 }
        })
        .collect();
    Ok(MeanEstimate::from_samples(&errors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_validation() {
        assert!(ChannelMatrix::new(vec![]).is_err());
        assert!(ChannelMatrix::new(vec![vec![0.5, 0.4]]).is_err());
        assert!(ChannelMatrix::new(vec![vec![1.5, -0.5]]).is_err());
        assert!(ChannelMatrix::new(vec![vec![1.0, 0.0], vec![1.0]]).is_err());
    }

    #[test]
    fn noiseless_channel_copies_input() {
        let ch = ChannelMatrix::noiseless(3).unwrap();
        let input = vec![0, 2, 1, 1, 0, 2];
        assert_eq!(simulate_channel(&ch, &input, 9).unwrap(), input);
        assert!(matches!(simulate_channel(&ch, &[3], 9), Err(CodingError::LetterOutOfRange { .. })));
    }

    #[test]
    fn certain_row_always_maps_to_its_letter() {
        let ch = ChannelMatrix::new(vec![vec![0.0, 1.0], vec![0.3, 0.7]]).unwrap();
        let out = simulate_channel(&ch, &[0; 200], 4).unwrap();
        assert!(out.iter().all(|&l| l == 1));
    }

    #[test]
    fn block_map_examples() {
        let map = block_code_map(2).unwrap();
        let v = ReallocationVector::new(vec![true, false]);
        assert_eq!(map.encode_vector(&v), Some("10"));
        assert_eq!(map.decode_vector("10").unwrap(), v);
        let three = block_code_map(3).unwrap();
        assert_eq!(three.len(), 8);
        assert!(three.codewords().iter().all(|w| w.len() == 3));
        assert!(block_code_map(0).is_err());
        assert!(block_code_map(21).is_err());
    }

    #[test]
    fn nearest_codeword_ties_to_lowest() {
        let code = BlockCode::new(vec!["00".into(), "11".into()]).unwrap();
        assert_eq!(code.decode_word(0b01), 0);
        assert_eq!(code.decode_word(0b10), 0);
        assert_eq!(code.decode_word(0b11), 1);
    }

    #[test]
    fn noiseless_decoding_never_errs() {
        let ch = ChannelMatrix::noiseless(2).unwrap();
        let est = estimate_decoding_error(&block_code_map(4).unwrap(), &ch, 10_000, 1).unwrap();
        assert_eq!(est.mean, 0.0);
    }

    #[test]
    fn padded_prefix_code_is_a_block_code() {
        let code = crate::coding::build_code(&crate::coding::SourceAlphabet::numbered(vec![0.5, 0.25, 0.125, 0.125]).unwrap())
            .unwrap();
        let block = BlockCode::from_prefix_code(&code).unwrap();
        assert_eq!(block.codewords(), ["000", "100", "110", "111"]);
    }

    #[test]
    fn incompatible_channel_is_rejected() {
        let ch = ChannelMatrix::noiseless(3).unwrap();
        assert!(matches!(
            estimate_decoding_error(&BlockCode::repetition(3).unwrap(), &ch, 10, 1),
            Err(CodingError::IncompatibleChannel { .. })
        ));
    }
}
