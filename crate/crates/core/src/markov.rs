//! First-order Markov analysis of the best-performer process.
//!
//! The state at each step is the basket leg (risky asset or cash) with the
//! highest gross return over that step. Its entropy rate is the extrinsic
//! utility of the basket; the entropy of the stationary marginals (the
//! zero-memory adjoint source) bounds it from above.

use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::portfolio::PriceGrid;
use crate::rng::{stream, Domain};
use crate::utility::{entropy_bits, DiscreteDistribution};

const ROW_TOLERANCE: f64 = 1e-9;
const RESIDUAL_TOLERANCE: f64 = 1e-10;
const EQUALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarkovError {
    #[error("transition matrix has no states")]
    Empty,
    #[error("transition row {row}: {reason}")]
    InvalidRow { row: usize, reason: &'static str },
    #[error("state sequence is empty")]
    EmptySequence,
    #[error("state {state} at position {position} outside 0..{n_states}")]
    StateOutOfRange { state: usize, position: usize, n_states: usize },
    #[error("need at least two states in the sequence, got {0}")]
    SequenceTooShort(usize),
    #[error("stationary distribution is not unique: {closed_classes} closed communicating classes")]
    NotUnique { closed_classes: usize },
    #[error("stationary solve failed (residual {residual:e})")]
    SolveFailed { residual: f64 },
    #[error("probability {0} must lie in (0, 1]")]
    InvalidProbability(f64),
    #[error("price grid: {0}")]
    InvalidGrid(&'static str),
    #[error("Gibbs bound violated: rate {rate} exceeds adjoint entropy {adjoint}")]
    GibbsViolated { rate: f64, adjoint: f64 },
}

/// Row-stochastic transition matrix, `transition[i][j] = P(i -> j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChainJson", into = "ChainJson")]
pub struct MarkovChain {
    transition: Vec<Vec<f64>>,
}

/// JSON layout of a chain: `{"n_states": n, "transition": [[...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainJson {
    pub n_states: usize,
    pub transition: Vec<Vec<f64>>,
}

impl TryFrom<ChainJson> for MarkovChain {
    type Error = MarkovError;

    fn try_from(value: ChainJson) -> Result<Self, Self::Error> {
        if value.transition.len() != value.n_states {
            return Err(MarkovError::InvalidRow { row: value.transition.len(), reason: "row count differs from n_states" });
        }
        MarkovChain::new(value.transition)
    }
}

impl From<MarkovChain> for ChainJson {
    fn from(m: MarkovChain) -> Self {
        ChainJson { n_states: m.n_states(), transition: m.transition }
    }
}

impl MarkovChain {
    pub fn new(transition: Vec<Vec<f64>>) -> Result<Self, MarkovError> {
        let n = transition.len();
        if n == 0 {
            return Err(MarkovError::Empty);
        }
        for (row, values) in transition.iter().enumerate() {
            if values.len() != n {
                return Err(MarkovError::InvalidRow { row, reason: "matrix is not square" });
            }
            if values.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(MarkovError::InvalidRow { row, reason: "negative or non-finite entry" });
            }
            if (values.iter().sum::<f64>() - 1.0).abs() > ROW_TOLERANCE {
                return Err(MarkovError::InvalidRow { row, reason: "row does not sum to 1" });
            }
        }
        Ok(Self { transition })
    }

    pub fn n_states(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.transition[from][to]
    }
}

/// Visited states, each in `0..n_states`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateSequence {
    states: Vec<usize>,
    n_states: usize,
}

impl StateSequence {
    pub fn new(states: Vec<usize>, n_states: usize) -> Result<Self, MarkovError> {
        if states.is_empty() {
            return Err(MarkovError::EmptySequence);
        }
        if let Some((position, &state)) = states.iter().enumerate().find(|(_, &s)| s >= n_states) {
            return Err(MarkovError::StateOutOfRange { state, position, n_states });
        }
        Ok(Self { states, n_states })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Best leg per step: risky asset `j` or cash as state `n_risky`.
///
/// Cash grows by `e^{rate * dt}` over each step. Ties go to the lowest index.
pub fn label_best_performer(grid: &PriceGrid, risk_free_rate: f64) -> Result<StateSequence, MarkovError> {
    if grid.times.len() != grid.prices.len() {
        return Err(MarkovError::InvalidGrid("times and price rows differ in length"));
    }
    if grid.prices.len() < 2 {
        return Err(MarkovError::InvalidGrid("need at least two time points"));
    }
    let n_risky = grid.prices[0].len();
    if n_risky == 0 || grid.prices.iter().any(|row| row.len() != n_risky) {
        return Err(MarkovError::InvalidGrid("ragged price rows"));
    }
    if grid.prices.iter().flatten().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(MarkovError::InvalidGrid("prices must be positive"));
    }
    let states = grid
        .prices
        .windows(2)
        .zip(grid.times.windows(2))
        .map(|(rows, times)| {
            let cash = (risk_free_rate * (times[1] - times[0])).exp();
            let mut best = n_risky;
            let mut best_return = f64::NEG_INFINITY;
            for (j, (now, next)) in rows[0].iter().zip(&rows[1]).enumerate() {
                let gross = next / now;
                if gross > best_return {
                    best = j;
                    best_return = gross;
                }
            }
            if cash > best_return {
                best = n_risky;
            }
            best
        })
        .collect();
    StateSequence::new(states, n_risky + 1)
}

/// Maximum-likelihood chain plus the rows that had no observations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatedChain {
    pub chain: MarkovChain,
    pub counts: Vec<Vec<u64>>,
    /// Rows set to uniform because the state was never left.
    pub unvisited_rows: Vec<usize>,
}

pub fn estimate_transitions(s: &StateSequence, n_states: usize) -> Result<EstimatedChain, MarkovError> {
    estimate_transitions_pooled(std::slice::from_ref(s), n_states)
}

/// Counts transitions within each sequence (never across sequence
/// boundaries) and normalizes rows.
pub fn estimate_transitions_pooled(sequences: &[StateSequence], n_states: usize) -> Result<EstimatedChain, MarkovError> {
    if n_states == 0 {
        return Err(MarkovError::Empty);
    }
    let transitions: usize = sequences.iter().map(|s| s.len().saturating_sub(1)).sum();
    if transitions == 0 {
        return Err(MarkovError::SequenceTooShort(sequences.iter().map(StateSequence::len).max().unwrap_or(0)));
    }
    let mut counts = vec![vec![0u64; n_states]; n_states];
    for s in sequences {
        if let Some((position, &state)) = s.states.iter().enumerate().find(|(_, &x)| x >= n_states) {
            return Err(MarkovError::StateOutOfRange { state, position, n_states });
        }
        for pair in s.states.windows(2) {
            counts[pair[0]][pair[1]] += 1;
        }
    }
    let mut unvisited_rows = Vec::new();
    let transition = counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                unvisited_rows.push(i);
                vec![1.0 / n_states as f64; n_states]
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect();
    Ok(EstimatedChain { chain: MarkovChain::new(transition)?, counts, unvisited_rows })
}

/// Number of closed communicating classes of the positive-entry graph.
fn closed_class_count(m: &MarkovChain) -> usize {
    let n = m.n_states();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if m.transition[i][j] > 0.0 {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    // A state is in a closed class iff every state it reaches reaches back.
    let recurrent: Vec<bool> = (0..n).map(|i| (0..n).all(|j| !reach[i][j] || reach[j][i])).collect();
    let mut counted = vec![false; n];
    let mut classes = 0;
    for i in 0..n {
        if recurrent[i] && !counted[i] {
            classes += 1;
            for j in 0..n {
                if reach[i][j] {
                    counted[j] = true;
                }
            }
        }
    }
    classes
}

/// Solves `pi P = pi`, `sum pi = 1` with the normalization replacing the
/// last balance equation.
pub fn stationary_distribution(m: &MarkovChain) -> Result<DiscreteDistribution, MarkovError> {
    let classes = closed_class_count(m);
    if classes != 1 {
        return Err(MarkovError::NotUnique { closed_classes: classes });
    }
    let n = m.n_states();
    let mut a = DMatrix::from_fn(n, n, |i, j| m.transition[j][i] - if i == j { 1.0 } else { 0.0 });
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let solution = a.lu().solve(&b).ok_or(MarkovError::SolveFailed { residual: f64::INFINITY })?;

    let clipped: Vec<f64> = solution.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let pi: Vec<f64> = clipped.iter().map(|x| x / total).collect();
    let residual = stationary_residual(m, &pi);
    if residual >= RESIDUAL_TOLERANCE {
        return Err(MarkovError::SolveFailed { residual });
    }
    DiscreteDistribution::new(pi).map_err(|_| MarkovError::SolveFailed { residual })
}

/// `max_j |(pi P)_j - pi_j|`.
pub fn stationary_residual(m: &MarkovChain, pi: &[f64]) -> f64 {
    (0..m.n_states())
        .map(|j| {
            let flowed: f64 = (0..m.n_states()).map(|i| pi[i] * m.transition[i][j]).sum();
            (flowed - pi[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// `log2(1/p)` bits.
pub fn conditional_information(p: f64) -> Result<f64, MarkovError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(MarkovError::InvalidProbability(p));
    }
    Ok(-p.log2())
}

/// `sum_i pi_i H(row_i)` in bits.
pub fn entropy_rate(m: &MarkovChain) -> Result<f64, MarkovError> {
    let pi = stationary_distribution(m)?;
    Ok(rate_given(m, pi.probs()))
}

fn rate_given(m: &MarkovChain, pi: &[f64]) -> f64 {
    pi.iter().zip(&m.transition).map(|(p, row)| p * entropy_bits(row)).sum()
}

/// Entropy of the stationary marginals.
pub fn adjoint_entropy(m: &MarkovChain) -> Result<f64, MarkovError> {
    Ok(entropy_bits(stationary_distribution(m)?.probs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GibbsCheck {
    pub rate: f64,
    pub adjoint: f64,
    /// `adjoint - rate`.
    pub slack: f64,
    /// Every row equals the stationary law (successive states independent).
    pub equality: bool,
}

pub fn gibbs_bound_check(m: &MarkovChain) -> Result<GibbsCheck, MarkovError> {
    let pi = stationary_distribution(m)?;
    let pi = pi.probs();
    let rate = rate_given(m, pi);
    let adjoint = entropy_bits(pi);
    let slack = adjoint - rate;
    if slack < -1e-12 {
        return Err(MarkovError::GibbsViolated { rate, adjoint });
    }
    let equality = m.transition.iter().all(|row| row.iter().zip(pi).all(|(a, b)| (a - b).abs() <= EQUALITY_TOLERANCE));
    Ok(GibbsCheck { rate, adjoint, slack, equality })
}

/// True when every stationary probability is within `tol` of `1/n`.
pub fn steady_state_check(m: &MarkovChain, tol: f64) -> Result<bool, MarkovError> {
    let pi = stationary_distribution(m)?;
    let uniform = 1.0 / m.n_states() as f64;
    Ok(pi.probs().iter().all(|p| (p - uniform).abs() < tol))
}

/// `steps` transitions from `start`; the result holds `steps + 1` states.
pub fn simulate_chain(m: &MarkovChain, start: usize, steps: usize, seed: u64) -> Result<StateSequence, MarkovError> {
    let n = m.n_states();
    if start >= n {
        return Err(MarkovError::StateOutOfRange { state: start, position: 0, n_states: n });
    }
    let samplers: Vec<WeightedIndex<f64>> =
        m.transition.iter().map(|row| WeightedIndex::new(row).expect("validated row")).collect();
    let mut rng = stream(seed, Domain::MarkovChain, 0);
    let mut states = Vec::with_capacity(steps + 1);
    let mut state = start;
    states.push(state);
    for _ in 0..steps {
        state = samplers[state].sample(&mut rng);
        states.push(state);
    }
    StateSequence::new(states, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(rows: &[&[f64]]) -> MarkovChain {
        MarkovChain::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn flip(q: f64) -> MarkovChain {
        chain(&[&[1.0 - q, q], &[q, 1.0 - q]])
    }

    fn biased() -> MarkovChain {
        chain(&[&[0.9, 0.1], &[0.5, 0.5]])
    }

    fn cycle(n: usize) -> MarkovChain {
        MarkovChain::new((0..n).map(|i| (0..n).map(|j| if j == (i + 1) % n { 1.0 } else { 0.0 }).collect()).collect())
            .unwrap()
    }

    fn seq(s: &[usize], n: usize) -> StateSequence {
        StateSequence::new(s.to_vec(), n).unwrap()
    }

    #[test]
    fn chain_validation() {
        assert_eq!(MarkovChain::new(vec![]), Err(MarkovError::Empty));
        assert!(MarkovChain::new(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(MarkovChain::new(vec![vec![1.0]; 2]).is_err());
        assert!(StateSequence::new(vec![0, 2], 2).is_err());
        assert_eq!(StateSequence::new(vec![], 2), Err(MarkovError::EmptySequence));
    }

    #[test]
    fn estimate_examples() {
        let e = estimate_transitions(&seq(&[0, 0, 0, 0], 2), 2).unwrap();
        assert_eq!(e.chain.prob(0, 0), 1.0);
        assert_eq!(e.unvisited_rows, vec![1]);
        assert_eq!(e.chain.transition()[1], vec![0.5, 0.5]);

        let e = estimate_transitions(&seq(&[0, 1, 0, 1, 0], 2), 2).unwrap();
        assert_eq!((e.chain.prob(0, 1), e.chain.prob(1, 0)), (1.0, 1.0));

        // 0->0 x3, 0->1 x1, 1->0 x2, 1->1 x2
        let e = estimate_transitions(&seq(&[1, 1, 1, 0, 0, 0, 0, 1, 0], 2), 2).unwrap();
        assert_eq!(e.counts, vec![vec![3, 1], vec![2, 2]]);
        assert_eq!(e.chain.transition(), &[vec![0.75, 0.25], vec![0.5, 0.5]]);

        assert_eq!(estimate_transitions(&seq(&[0], 2), 2), Err(MarkovError::SequenceTooShort(1)));
    }

    #[test]
    fn stationary_examples() {
        for q in [0.01, 0.3, 0.5, 0.99] {
            let pi = stationary_distribution(&flip(q)).unwrap();
            assert!((pi.probs()[0] - 0.5).abs() < 1e-12);
        }
        let pi = stationary_distribution(&biased()).unwrap();
        assert!((pi.probs()[0] - 5.0 / 6.0).abs() < 1e-12);
        assert!((pi.probs()[1] - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(
            stationary_distribution(&chain(&[&[1.0, 0.0], &[0.0, 1.0]])),
            Err(MarkovError::NotUnique { closed_classes: 2 })
        );
    }

    #[test]
    fn transient_states_get_zero_mass() {
        let m = chain(&[&[0.5, 0.5, 0.0], &[0.0, 0.2, 0.8], &[0.0, 0.6, 0.4]]);
        let pi = stationary_distribution(&m).unwrap();
        assert_eq!(pi.probs()[0], 0.0);
        assert!(stationary_residual(&m, pi.probs()) < 1e-12);
    }

    #[test]
    fn information_examples() {
        assert_eq!(conditional_information(1.0).unwrap(), 0.0);
        assert_eq!(conditional_information(0.5).unwrap(), 1.0);
        assert!((conditional_information(0.1).unwrap() - 10f64.log2()).abs() < 1e-15);
        assert!(conditional_information(0.0).is_err());
        assert!(conditional_information(1.5).is_err());
    }

    #[test]
    fn entropy_rate_examples() {
        assert_eq!(entropy_rate(&cycle(3)).unwrap(), 0.0);
        assert!((entropy_rate(&flip(0.1)).unwrap() - 0.468_995_593_589_281_2).abs() < 1e-12);
        let expected = 5.0 / 6.0 * 0.468_995_593_589_281_2 + 1.0 / 6.0;
        assert!((entropy_rate(&biased()).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.5575).abs() < 5e-5);
    }

    #[test]
    fn adjoint_examples() {
        assert!((adjoint_entropy(&flip(0.1)).unwrap() - 1.0).abs() < 1e-12);
        let h = adjoint_entropy(&biased()).unwrap();
        let p: f64 = 1.0 / 6.0;
        assert!((h - (-p * p.log2() - (1.0 - p) * (1.0 - p).log2())).abs() < 1e-12);
        assert!((h - 0.6500).abs() < 5e-5);
        let uniform_rows = MarkovChain::new(vec![vec![0.2; 5]; 5]).unwrap();
        assert!((adjoint_entropy(&uniform_rows).unwrap() - 5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn gibbs_examples() {
        let independent = chain(&[&[0.3, 0.7], &[0.3, 0.7]]);
        let g = gibbs_bound_check(&independent).unwrap();
        assert!(g.equality);
        assert!(g.slack.abs() < 1e-12);

        let g = gibbs_bound_check(&flip(0.1)).unwrap();
        assert!((g.slack - (1.0 - 0.468_995_593_589_281_2)).abs() < 1e-12);
        assert!(!g.equality);

        let g = gibbs_bound_check(&cycle(4)).unwrap();
        assert_eq!(g.rate, 0.0);
        assert!((g.adjoint - 2.0).abs() < 1e-12);
        assert!((g.slack - 2.0).abs() < 1e-12);
    }

    #[test]
    fn steady_state_examples() {
        let doubly = chain(&[&[0.2, 0.5, 0.3], &[0.5, 0.3, 0.2], &[0.3, 0.2, 0.5]]);
        assert!(steady_state_check(&doubly, 1e-9).unwrap());
        assert!(!steady_state_check(&biased(), 1e-3).unwrap());
        assert!(steady_state_check(&flip(0.2), 1e-9).unwrap());
    }

    #[test]
    fn label_degenerate_assets() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let rising = PriceGrid { times: times.clone(), prices: times.iter().map(|t| vec![100.0 * (0.1 * t).exp()]).collect() };
        assert!(label_best_performer(&rising, 0.05).unwrap().states().iter().all(|&s| s == 0));
        let lagging = PriceGrid { times: times.clone(), prices: times.iter().map(|t| vec![100.0 * (0.01 * t).exp()]).collect() };
        assert!(label_best_performer(&lagging, 0.05).unwrap().states().iter().all(|&s| s == 1));
        let bad = PriceGrid { times: vec![0.0], prices: vec![vec![1.0], vec![1.0]] };
        assert!(label_best_performer(&bad, 0.05).is_err());
    }

    #[test]
    fn chain_json_round_trip() {
        let json = serde_json::to_string(&biased()).unwrap();
        assert_eq!(json, r#"{"n_states":2,"transition":[[0.9,0.1],[0.5,0.5]]}"#);
        let back: MarkovChain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, biased());
        assert!(serde_json::from_str::<MarkovChain>(r#"{"n_states":3,"transition":[[1.0]]}"#).is_err());
    }

    #[test]
    fn simulate_is_seeded() {
        let a = simulate_chain(&biased(), 0, 1000, 5).unwrap();
        assert_eq!(a, simulate_chain(&biased(), 0, 1000, 5).unwrap());
        assert_eq!(a.len(), 1001);
    }
}
