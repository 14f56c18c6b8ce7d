//! Entropy-based choice utility.
//!
//! A choice set built from `K` available objects has `2^K` take/leave
//! combinations. Its intrinsic utility is the expected reward; its extrinsic
//! utility is `K` times the Shannon entropy (in bits) of the outcome
//! distribution, so it is zero for a single forced choice and largest when
//! every combination is equally likely.

use serde::Serialize;
use std::f64::consts::LN_2;
use thiserror::Error;

use crate::simplex::{projected_gradient_ascent, AscentOptions};

/// Absolute tolerance on the sum of a probability vector.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Largest object count the maximizer enumerates by default.
pub const DEFAULT_MAX_OBJECTS: u32 = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UtilityError {
    #[error("probability vector or choice set is empty")]
    EmptyDistribution,
    #[error("probability entry {index} is {value}, expected a finite value >= 0")]
    InvalidEntry { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1 within {SUM_TOLERANCE}")]
    BadSum { sum: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("probability of positive utility at choice {index} is {value}, expected [0, 1]")]
    InvalidPositiveUtility { index: usize, value: f64 },
    #[error("likelihood {index} is {value}, expected [0, 1]")]
    InvalidLikelihood { index: usize, value: f64 },
    #[error("posterior undefined: every likelihood x prior product is zero")]
    NoEvidence,
    #[error("probability {0} outside the allowed range")]
    ProbabilityOutOfRange(f64),
    #[error("object count {k} exceeds the enumeration cap {cap}")]
    TooManyObjects { k: u32, cap: u32 },
    #[error("numerical maximizer disagrees with 2^-K by {deviation:e}")]
    VerificationFailed { deviation: f64 },
}

/// Probability vector over finitely many outcomes.
///
/// Construction rejects negative or non-finite entries and sums further than
/// [`SUM_TOLERANCE`] from one; accepted vectors are renormalized to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, UtilityError> {
        if probs.is_empty() {
            return Err(UtilityError::EmptyDistribution);
        }
        if let Some((index, &value)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(UtilityError::InvalidEntry { index, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(UtilityError::BadSum { sum });
        }
        let probs = if sum == 1.0 { probs } else { probs.into_iter().map(|p| p / sum).collect() };
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs at least one outcome");
        Self { probs: vec![1.0 / n as f64; n] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// `-sum p log2 p` in bits, with `0 log 0 = 0`.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    let h: f64 = probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
    // Rounding can leave -0.0 or a tiny negative for degenerate inputs.
    h.max(0.0)
}

pub fn shannon_entropy(d: &DiscreteDistribution) -> f64 {
    entropy_bits(d.probs())
}

/// `K * H(d)`: extrinsic utility of a choice distribution over `K` objects.
pub fn extrinsic_utility(d: &DiscreteDistribution, object_count: u32) -> f64 {
    f64::from(object_count) * shannon_entropy(d)
}

/// Result of maximizing extrinsic utility for a fixed object count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtrinsicOptimum {
    pub object_count: u32,
    /// The uniform distribution over `2^K` choices.
    pub distribution: DiscreteDistribution,
    /// `K^2`.
    pub value: f64,
    /// Largest coordinate gap between the numerical optimum and `2^-K`,
    /// when the numerical check ran.
    pub numeric_deviation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximizerConfig {
    /// Object counts above this are rejected.
    pub max_objects: u32,
    /// Numerical verification runs only up to this object count.
    pub verify_up_to: u32,
    /// Allowed per-coordinate gap between numeric and analytic optimum.
    pub tolerance: f64,
    pub ascent: AscentOptions,
}

impl Default for MaximizerConfig {
    fn default() -> Self {
        Self { max_objects: DEFAULT_MAX_OBJECTS, verify_up_to: 12, tolerance: 1e-6, ascent: AscentOptions::default() }
    }
}

/// Gradient of `K * H(p)` in bits; zero coordinates get a large finite
/// slope pointing back into the simplex.
pub fn extrinsic_gradient(p: &[f64], object_count: u32) -> Vec<f64> {
    let k = f64::from(object_count);
    p.iter().map(|&x| -k * (x.max(1e-300).log2() + 1.0 / LN_2)).collect()
}

/// Numerically maximizes `K * H(p)` over `2^K` outcomes from `start`.
pub fn maximize_extrinsic_numerically(object_count: u32, start: &[f64], options: AscentOptions) -> crate::simplex::AscentResult {
    projected_gradient_ascent(
        |p| f64::from(object_count) * entropy_bits(p),
        |p| extrinsic_gradient(p, object_count),
        start,
        options,
    )
}

pub fn maximize_extrinsic_utility(object_count: u32) -> Result<ExtrinsicOptimum, UtilityError> {
    maximize_extrinsic_utility_with(object_count, &MaximizerConfig::default())
}

/// Every choice probability equal to `2^-K`; checked against projected
/// gradient ascent from a skewed interior start when `K <= verify_up_to`.
pub fn maximize_extrinsic_utility_with(object_count: u32, config: &MaximizerConfig) -> Result<ExtrinsicOptimum, UtilityError> {
    if object_count > config.max_objects {
        return Err(UtilityError::TooManyObjects { k: object_count, cap: config.max_objects });
    }
    let n = 1usize << object_count;
    let distribution = DiscreteDistribution::uniform(n);
    let k = f64::from(object_count);
    let value = k * k;

    let numeric_deviation = if object_count <= config.verify_up_to {
        let total = (n * (n + 1) / 2) as f64;
        let start: Vec<f64> = (1..=n).map(|j| j as f64 / total).collect();
        let result = maximize_extrinsic_numerically(object_count, &start, config.ascent);
        let target = 1.0 / n as f64;
        let deviation = result.point.iter().map(|p| (p - target).abs()).fold(0.0, f64::max);
        if deviation > config.tolerance {
            return Err(UtilityError::VerificationFailed { deviation });
        }
        Some(deviation)
    } else {
        None
    };

    Ok(ExtrinsicOptimum { object_count, distribution, value, numeric_deviation })
}

/// Binary entropy of `p`; zero at the endpoints by continuity.
pub fn binary_extrinsic_utility(p: f64) -> Result<f64, UtilityError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(UtilityError::ProbabilityOutOfRange(p));
    }
    Ok(entropy_bits(&[p, 1.0 - p]))
}

/// Second derivative of the binary entropy, `-1 / (ln 2 * p (1 - p))`.
pub fn binary_marginal_curvature(p: f64) -> Result<f64, UtilityError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(UtilityError::ProbabilityOutOfRange(p));
    }
    Ok(-1.0 / (LN_2 * p * (1.0 - p)))
}

/// Rewards and probabilities of the choices open to a decision maker.
///
/// `object_count` is `K`. Under the power-set reading there are `2^K`
/// choices; a plain list of `N` alternatives is also accepted, see
/// [`ChoiceSet::is_power_set`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChoiceSet {
    object_count: u32,
    rewards: Vec<f64>,
    probs: DiscreteDistribution,
    prob_positive_utility: Vec<f64>,
}

impl ChoiceSet {
    /// Choice set with `P(U_r > 0) = 1` for every choice.
    pub fn new(object_count: u32, rewards: Vec<f64>, probs: DiscreteDistribution) -> Result<Self, UtilityError> {
        let n = rewards.len();
        Self::with_positive_utility(object_count, rewards, probs, vec![1.0; n])
    }

    pub fn with_positive_utility(
        object_count: u32,
        rewards: Vec<f64>,
        probs: DiscreteDistribution,
        prob_positive_utility: Vec<f64>,
    ) -> Result<Self, UtilityError> {
        if rewards.len() != probs.len() {
            return Err(UtilityError::LengthMismatch { left: rewards.len(), right: probs.len() });
        }
        if prob_positive_utility.len() != probs.len() {
            return Err(UtilityError::LengthMismatch { left: prob_positive_utility.len(), right: probs.len() });
        }
        if let Some((index, &value)) = prob_positive_utility.iter().enumerate().find(|(_, q)| !(0.0..=1.0).contains(*q)) {
            return Err(UtilityError::InvalidPositiveUtility { index, value });
        }
        Ok(Self { object_count, rewards, probs, prob_positive_utility })
    }

    pub fn object_count(&self) -> u32 {
        self.object_count
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn probs(&self) -> &DiscreteDistribution {
        &self.probs
    }

    pub fn prob_positive_utility(&self) -> &[f64] {
        &self.prob_positive_utility
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// True when the set enumerates all `2^K` take/leave combinations.
    pub fn is_power_set(&self) -> bool {
        self.object_count < usize::BITS && self.len() == 1usize << self.object_count
    }
}

/// Expected reward `sum r_j p_j`.
pub fn intrinsic_utility(c: &ChoiceSet) -> f64 {
    c.rewards.iter().zip(c.probs.probs()).map(|(r, p)| r * p).sum()
}

/// Vroom ranking: the choice maximizing `reward * P(U_r > 0) * P(reward)`.
/// Ties go to the lowest index.
pub fn motivational_strength(c: &ChoiceSet) -> (usize, f64) {
    // A validated ChoiceSet is non-empty with every probability in [0, 1].
    rank_by_motivation(&c.rewards, c.probs.probs(), &c.prob_positive_utility).expect("validated choice set")
}

/// [`motivational_strength`] over raw per-choice vectors.
///
/// The reward probabilities are per-choice likelihoods of the reward being
/// realized and need not sum to one.
pub fn rank_by_motivation(rewards: &[f64], reward_probs: &[f64], prob_positive: &[f64]) -> Result<(usize, f64), UtilityError> {
    let scores = motivational_scores(rewards, reward_probs, prob_positive)?;
    Ok(scores
        .into_iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, s)| if s > best.1 { (i, s) } else { best }))
}

/// Per-choice products `reward * P(U_r > 0) * P(reward)`, in choice order.
pub fn motivational_scores(rewards: &[f64], reward_probs: &[f64], prob_positive: &[f64]) -> Result<Vec<f64>, UtilityError> {
    if rewards.is_empty() {
        return Err(UtilityError::EmptyDistribution);
    }
    if reward_probs.len() != rewards.len() {
        return Err(UtilityError::LengthMismatch { left: reward_probs.len(), right: rewards.len() });
    }
    if prob_positive.len() != rewards.len() {
        return Err(UtilityError::LengthMismatch { left: prob_positive.len(), right: rewards.len() });
    }
    if let Some((index, &value)) = reward_probs.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(UtilityError::InvalidEntry { index, value });
    }
    if let Some((index, &value)) = prob_positive.iter().enumerate().find(|(_, q)| !(0.0..=1.0).contains(*q)) {
        return Err(UtilityError::InvalidPositiveUtility { index, value });
    }
    Ok(rewards.iter().zip(prob_positive).zip(reward_probs).map(|((r, q), p)| r * q * p).collect())
}

/// Posterior `P(choice | U_r > 0)` by Bayes' rule.
pub fn bayes_posterior(priors: &DiscreteDistribution, likelihoods: &[f64]) -> Result<DiscreteDistribution, UtilityError> {
    if likelihoods.len() != priors.len() {
        return Err(UtilityError::LengthMismatch { left: likelihoods.len(), right: priors.len() });
    }
    if let Some((index, &value)) = likelihoods.iter().enumerate().find(|(_, l)| !(0.0..=1.0).contains(*l)) {
        return Err(UtilityError::InvalidLikelihood { index, value });
    }
    let joint: Vec<f64> = likelihoods.iter().zip(priors.probs()).map(|(l, p)| l * p).collect();
    let evidence: f64 = joint.iter().sum();
    if evidence <= 0.0 {
        return Err(UtilityError::NoEvidence);
    }
    Ok(DiscreteDistribution { probs: joint.into_iter().map(|j| j / evidence).collect() })
}

/// The `[U_r, U_x]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompositeUtility {
    pub intrinsic: f64,
    pub extrinsic: f64,
}

/// Intrinsic utility from the raw probabilities, extrinsic utility from the
/// posterior conditioned on positive intrinsic utility.
pub fn composite_utility(c: &ChoiceSet, posterior: &DiscreteDistribution) -> Result<CompositeUtility, UtilityError> {
    if posterior.len() != c.len() {
        return Err(UtilityError::LengthMismatch { left: posterior.len(), right: c.len() });
    }
    Ok(CompositeUtility { intrinsic: intrinsic_utility(c), extrinsic: extrinsic_utility(posterior, c.object_count) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(p: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(p.to_vec()).unwrap()
    }

    #[test]
    fn distribution_validation() {
        assert_eq!(DiscreteDistribution::new(vec![]), Err(UtilityError::EmptyDistribution));
        assert_eq!(
            DiscreteDistribution::new(vec![0.5, -0.1, 0.6]),
            Err(UtilityError::InvalidEntry { index: 1, value: -0.1 })
        );
        assert!(matches!(DiscreteDistribution::new(vec![0.5, 0.4]), Err(UtilityError::BadSum { .. })));
        assert!(DiscreteDistribution::new(vec![f64::NAN, 1.0]).is_err());
        let d = dist(&[0.5, 0.5 + 5e-10]);
        assert_eq!(d.probs().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy(&dist(&[0.5, 0.5])), 1.0);
        assert_eq!(shannon_entropy(&dist(&[1.0])), 0.0);
        assert_eq!(shannon_entropy(&dist(&[0.5, 0.25, 0.125, 0.125])), 1.75);
        assert_eq!(shannon_entropy(&dist(&[1.0, 0.0])), 0.0);
    }

    #[test]
    fn extrinsic_examples() {
        assert_eq!(extrinsic_utility(&dist(&[0.5, 0.5]), 1), 1.0);
        assert_eq!(extrinsic_utility(&dist(&[1.0]), 0), 0.0);
        assert_eq!(extrinsic_utility(&DiscreteDistribution::uniform(4), 2), 4.0);
    }

    #[test]
    fn maximizer_examples() {
        let one = maximize_extrinsic_utility(1).unwrap();
        assert_eq!(one.distribution.probs(), &[0.5, 0.5]);
        assert_eq!(one.value, 1.0);
        let zero = maximize_extrinsic_utility(0).unwrap();
        assert_eq!(zero.distribution.probs(), &[1.0]);
        assert_eq!(zero.value, 0.0);
        let three = maximize_extrinsic_utility(3).unwrap();
        assert!(three.distribution.probs().iter().all(|&p| p == 0.125));
        assert_eq!(three.value, 9.0);
        assert!(three.numeric_deviation.unwrap() < 1e-6);
    }

    #[test]
    fn maximizer_rejects_large_k() {
        assert_eq!(maximize_extrinsic_utility(21), Err(UtilityError::TooManyObjects { k: 21, cap: 20 }));
        let config = MaximizerConfig { max_objects: 4, ..Default::default() };
        assert!(maximize_extrinsic_utility_with(5, &config).is_err());
    }

    #[test]
    fn binary_utility_examples() {
        assert_eq!(binary_extrinsic_utility(0.5).unwrap(), 1.0);
        let h = binary_extrinsic_utility(0.1).unwrap();
        assert!((h - 0.468_995_593_589_281_2).abs() < 1e-12);
        assert!((binary_extrinsic_utility(0.9).unwrap() - h).abs() < 1e-15);
        assert_eq!(binary_extrinsic_utility(0.0).unwrap(), 0.0);
        assert_eq!(binary_extrinsic_utility(1.0).unwrap(), 0.0);
        assert!(binary_extrinsic_utility(1.5).is_err());
    }

    #[test]
    fn curvature_examples() {
        assert!((binary_marginal_curvature(0.5).unwrap() + 4.0 / LN_2).abs() < 1e-12);
        assert!((binary_marginal_curvature(0.25).unwrap() + 7.694_373_551_407_805).abs() < 1e-12);
        assert!(binary_marginal_curvature(0.0).is_err());
        assert!(binary_marginal_curvature(1.0).is_err());
    }

    #[test]
    fn intrinsic_examples() {
        let c = ChoiceSet::new(1, vec![10.0, 0.0], dist(&[0.5, 0.5])).unwrap();
        assert_eq!(intrinsic_utility(&c), 5.0);
        let c = ChoiceSet::new(1, vec![0.0, 0.0], dist(&[0.5, 0.5])).unwrap();
        assert_eq!(intrinsic_utility(&c), 0.0);
        let c = ChoiceSet::new(1, vec![100.0, 50.0], dist(&[0.1, 0.9])).unwrap();
        assert!((intrinsic_utility(&c) - 55.0).abs() < 1e-12);
        assert!(c.is_power_set());
        assert!(ChoiceSet::new(1, vec![1.0], dist(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn motivational_strength_examples() {
        let (index, value) = rank_by_motivation(&[100.0, 50.0], &[0.1, 0.2], &[1.0, 1.0]).unwrap();
        assert_eq!(index, 0);
        assert!((value - 10.0).abs() < 1e-12);
        let c = ChoiceSet::new(2, vec![100.0, 50.0, 0.0], dist(&[0.1, 0.2, 0.7])).unwrap();
        assert_eq!(motivational_strength(&c).0, 0);
        assert_eq!(rank_by_motivation(&[], &[], &[]), Err(UtilityError::EmptyDistribution));

        let c = ChoiceSet::new(0, vec![5.0], dist(&[1.0])).unwrap();
        assert_eq!(motivational_strength(&c), (0, 5.0));

        let c = ChoiceSet::with_positive_utility(1, vec![100.0, 0.0], dist(&[0.2, 0.8]), vec![0.5, 1.0]).unwrap();
        assert!((motivational_strength(&c).1 - 10.0).abs() < 1e-12);

        assert!(ChoiceSet::with_positive_utility(1, vec![1.0, 1.0], dist(&[0.5, 0.5]), vec![1.2, 1.0]).is_err());
    }

    #[test]
    fn bayes_examples() {
        let post = bayes_posterior(&dist(&[0.3, 0.7]), &[0.5, 0.5]).unwrap();
        assert!((post.probs()[0] - 0.3).abs() < 1e-15);
        let post = bayes_posterior(&dist(&[0.5, 0.5]), &[1.0, 0.0]).unwrap();
        assert_eq!(post.probs(), &[1.0, 0.0]);
        let post = bayes_posterior(&dist(&[0.2, 0.8]), &[0.9, 0.5]).unwrap();
        assert!((post.probs()[0] - 0.18 / 0.58).abs() < 1e-12);
        assert!((post.probs()[1] - 0.40 / 0.58).abs() < 1e-12);
        assert_eq!(bayes_posterior(&dist(&[1.0, 0.0]), &[0.0, 1.0]), Err(UtilityError::NoEvidence));
        assert!(bayes_posterior(&dist(&[1.0]), &[0.5, 0.5]).is_err());
    }

    #[test]
    fn composite_examples() {
        let c = ChoiceSet::new(1, vec![10.0, 0.0], dist(&[0.5, 0.5])).unwrap();
        assert_eq!(
            composite_utility(&c, &dist(&[0.5, 0.5])).unwrap(),
            CompositeUtility { intrinsic: 5.0, extrinsic: 1.0 }
        );
        assert_eq!(composite_utility(&c, &dist(&[1.0, 0.0])).unwrap().extrinsic, 0.0);
        let c = ChoiceSet::new(2, vec![100.0, 50.0, 0.0, 0.0], dist(&[0.1, 0.2, 0.3, 0.4])).unwrap();
        let u = composite_utility(&c, &DiscreteDistribution::uniform(4)).unwrap();
        assert!((u.intrinsic - 20.0).abs() < 1e-12);
        assert_eq!(u.extrinsic, 4.0);
    }
}
