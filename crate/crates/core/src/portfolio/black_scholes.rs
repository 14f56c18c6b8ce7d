use serde::Serialize;

use super::PortfolioError;
use crate::stats::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CallQuote {
    pub price: f64,
    /// `dPrice/dSpot = Phi(d1)`.
    pub delta: f64,
}

/// European call under Black-Scholes with continuous risk-free `rate`.
pub fn bs_call_price_delta(spot: f64, strike: f64, sigma: f64, rate: f64, t: f64) -> Result<CallQuote, PortfolioError> {
    for (name, value) in [("spot", spot), ("strike", strike), ("sigma", sigma), ("t", t)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(PortfolioError::BlackScholesDomain(name));
        }
    }
    if !rate.is_finite() {
        return Err(PortfolioError::BlackScholesDomain("rate"));
    }
    let vol_sqrt_t = sigma * t.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * sigma * sigma) * t) / vol_sqrt_t;
    let d2 = d1 - vol_sqrt_t;
    let delta = normal_cdf(d1);
    let price = spot * delta - strike * (-rate * t).exp() * normal_cdf(d2);
    Ok(CallQuote { price, delta })
}
