//! Capital-guaranteed best-of basket.
//!
//! A basket holds `n - 1` risky assets following correlated geometric
//! Brownian motion plus cash at the risk-free rate. The holder receives the
//! best performer at the horizon, so the discounted value never falls below
//! the initial wealth.

mod black_scholes;
mod correlation;
mod simulation;

pub use black_scholes::{bs_call_price_delta, CallQuote};
pub use correlation::CorrelationFactor;
pub use simulation::{
    expected_best_of_return, prob_all_risky_underperform, rebalance_weights, simulate_price_path, simulate_price_paths,
    simulate_terminal_prices, BestOfEstimate, PriceGrid, RebalanceWeights, TerminalPrices,
};

use serde::Serialize;
use thiserror::Error;

use crate::utility::{shannon_entropy, DiscreteDistribution};

/// Largest risky-asset count for choice enumeration.
pub const MAX_RISKY: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PortfolioError {
    #[error("basket needs at least one risky asset")]
    NoRiskyAssets,
    #[error("asset {name}: {reason}")]
    InvalidAsset { name: String, reason: &'static str },
    #[error("horizon must be positive, got {0}")]
    InvalidHorizon(f64),
    #[error("initial wealth must be positive, got {0}")]
    InvalidWealth(f64),
    #[error("risk-free rate must be finite, got {0}")]
    InvalidRate(f64),
    #[error("correlation matrix must be {expected}x{expected}")]
    CorrelationShape { expected: usize },
    #[error("correlation entry ({row}, {col}) is not a finite value in [-1, 1]")]
    CorrelationEntry { row: usize, col: usize },
    #[error("correlation diagonal entry {index} is {value}, expected 1")]
    CorrelationDiagonal { index: usize, value: f64 },
    #[error("correlation matrix is not symmetric at ({row}, {col})")]
    CorrelationNotSymmetric { row: usize, col: usize },
    #[error("correlation matrix is not positive semidefinite (pivot {pivot})")]
    CorrelationNotPsd { pivot: usize },
    #[error("risky asset count {0} outside 1..={MAX_RISKY}")]
    RiskyCountOutOfRange(usize),
    #[error("simulation needs at least one path and one step")]
    InvalidConfig,
    #[error("distribution has {got} outcomes, expected {expected}")]
    CardinalityMismatch { expected: usize, got: usize },
    #[error("Black-Scholes input {0} must be positive and finite")]
    BlackScholesDomain(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetSpec {
    pub name: String,
    /// Annual drift `mu`.
    pub drift: f64,
    /// Annual volatility `sigma`.
    pub volatility: f64,
    pub initial_price: f64,
}

impl AssetSpec {
    pub fn new(name: impl Into<String>, drift: f64, volatility: f64, initial_price: f64) -> Self {
        Self { name: name.into(), drift, volatility, initial_price }
    }

    fn validate(&self) -> Result<(), PortfolioError> {
        let fail = |reason| Err(PortfolioError::InvalidAsset { name: self.name.clone(), reason });
        if !self.drift.is_finite() {
            return fail("drift must be finite");
        }
        if !(self.volatility.is_finite() && self.volatility >= 0.0) {
            return fail("volatility must be finite and >= 0");
        }
        if !(self.initial_price.is_finite() && self.initial_price > 0.0) {
            return fail("initial price must be finite and > 0");
        }
        Ok(())
    }
}

/// Risky assets, cash rate, horizon and wealth of a structured basket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasketSpec {
    risky_assets: Vec<AssetSpec>,
    risk_free_rate: f64,
    horizon: f64,
    initial_wealth: f64,
    correlation: Vec<Vec<f64>>,
    #[serde(skip)]
    factor: CorrelationFactor,
}

impl BasketSpec {
    /// Validates the assets and factorizes `correlation`.
    pub fn new(
        risky_assets: Vec<AssetSpec>,
        risk_free_rate: f64,
        horizon: f64,
        initial_wealth: f64,
        correlation: Vec<Vec<f64>>,
    ) -> Result<Self, PortfolioError> {
        if risky_assets.is_empty() {
            return Err(PortfolioError::NoRiskyAssets);
        }
        for asset in &risky_assets {
            asset.validate()?;
        }
        if !risk_free_rate.is_finite() {
            return Err(PortfolioError::InvalidRate(risk_free_rate));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(PortfolioError::InvalidHorizon(horizon));
        }
        if !(initial_wealth.is_finite() && initial_wealth > 0.0) {
            return Err(PortfolioError::InvalidWealth(initial_wealth));
        }
        if correlation.len() != risky_assets.len() {
            return Err(PortfolioError::CorrelationShape { expected: risky_assets.len() });
        }
        let factor = CorrelationFactor::new(&correlation)?;
        Ok(Self { risky_assets, risk_free_rate, horizon, initial_wealth, correlation, factor })
    }

    /// Basket with uncorrelated risky assets.
    pub fn independent(
        risky_assets: Vec<AssetSpec>,
        risk_free_rate: f64,
        horizon: f64,
        initial_wealth: f64,
    ) -> Result<Self, PortfolioError> {
        let n = risky_assets.len();
        let identity = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self::new(risky_assets, risk_free_rate, horizon, initial_wealth, identity)
    }

    pub fn risky_assets(&self) -> &[AssetSpec] {
        &self.risky_assets
    }

    pub fn n_risky(&self) -> usize {
        self.risky_assets.len()
    }

    pub fn risk_free_rate(&self) -> f64 {
        self.risk_free_rate
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn initial_wealth(&self) -> f64 {
        self.initial_wealth
    }

    pub fn correlation(&self) -> &[Vec<f64>] {
        &self.correlation
    }

    pub fn factor(&self) -> &CorrelationFactor {
        &self.factor
    }

    /// `e^{-i t}`.
    pub fn discount(&self) -> f64 {
        (-self.risk_free_rate * self.horizon).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimulationConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(n_paths: usize, n_steps: usize, seed: u64) -> Result<Self, PortfolioError> {
        let cfg = Self { n_paths, n_steps, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), PortfolioError> {
        if self.n_paths == 0 || self.n_steps == 0 {
            return Err(PortfolioError::InvalidConfig);
        }
        Ok(())
    }
}

/// Per-asset funds-in (`true`) / funds-out (`false`) decision, asset 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ReallocationVector(Vec<bool>);

impl ReallocationVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// The `len`-bit vector whose binary reading (asset 1 most significant)
    /// is `index`.
    pub fn from_index(index: u64, len: usize) -> Self {
        Self((0..len).map(|k| (index >> (len - 1 - k)) & 1 == 1).collect())
    }

    pub fn to_index(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `'0'`/`'1'` text, asset 1 first.
    pub fn to_bit_string(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// All `2^n` reallocation vectors in ascending binary order.
pub fn enumerate_choices(n_risky: usize) -> Result<Vec<ReallocationVector>, PortfolioError> {
    if !(1..=MAX_RISKY).contains(&n_risky) {
        return Err(PortfolioError::RiskyCountOutOfRange(n_risky));
    }
    Ok((0..1u64 << n_risky).map(|i| ReallocationVector::from_index(i, n_risky)).collect())
}

/// `n_risky * H(d)` over the `2^n_risky` reallocation outcomes.
pub fn basket_extrinsic_utility(n_risky: usize, d: &DiscreteDistribution) -> Result<f64, PortfolioError> {
    if !(1..=MAX_RISKY).contains(&n_risky) {
        return Err(PortfolioError::RiskyCountOutOfRange(n_risky));
    }
    let expected = 1usize << n_risky;
    if d.len() != expected {
        return Err(PortfolioError::CardinalityMismatch { expected, got: d.len() });
    }
    Ok(n_risky as f64 * shannon_entropy(d))
}
