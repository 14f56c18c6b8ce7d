use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{BasketSpec, PortfolioError, SimulationConfig};
use crate::rng::{stream, Domain};
use crate::stats::MeanEstimate;

/// Terminal prices, one row per path and one column per risky asset.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalPrices {
    n_assets: usize,
    data: Vec<f64>,
}

impl TerminalPrices {
    pub fn n_paths(&self) -> usize {
        self.data.len() / self.n_assets
    }

    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    pub fn path(&self, index: usize) -> &[f64] {
        &self.data[index * self.n_assets..(index + 1) * self.n_assets]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_assets)
    }

    pub fn column(&self, asset: usize) -> Vec<f64> {
        self.paths().map(|p| p[asset]).collect()
    }
}

/// Prices of the risky assets on a time grid, one row per time point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceGrid {
    /// Time points in years, strictly increasing.
    pub times: Vec<f64>,
    pub prices: Vec<Vec<f64>>,
}

fn draw_correlated<R: Rng>(rng: &mut R, basket: &BasketSpec, independent: &mut [f64], out: &mut [f64]) {
    for z in independent.iter_mut() {
        *z = rng.sample(StandardNormal);
    }
    basket.factor().correlate(independent, out);
}

/// Exact log-normal terminal prices `S0 exp((mu - sigma^2/2) t + sigma sqrt(t) Z)`.
///
/// Path `p` draws from its own stream, so the output is identical for any
/// thread count.
pub fn simulate_terminal_prices(basket: &BasketSpec, cfg: &SimulationConfig) -> Result<TerminalPrices, PortfolioError> {
    cfg.validate()?;
    let n = basket.n_risky();
    let t = basket.horizon();
    let params: Vec<(f64, f64, f64)> = basket
        .risky_assets()
        .iter()
        .map(|a| {
            let drift = (a.drift - 0.5 * a.volatility * a.volatility) * t;
            (a.initial_price, drift, a.volatility * t.sqrt())
        })
        .collect();

    let mut data = vec![0.0; cfg.n_paths * n];
    data.par_chunks_mut(n).enumerate().for_each(|(path, row)| {
        let mut rng = stream(cfg.seed, Domain::TerminalPrices, path as u64);
        let mut independent = vec![0.0; n];
        let mut z = vec![0.0; n];
        draw_correlated(&mut rng, basket, &mut independent, &mut z);
        for ((price, &(s0, drift, scale)), zk) in row.iter_mut().zip(&params).zip(&z) {
            *price = s0 * (drift + scale * zk).exp();
        }
    });
    Ok(TerminalPrices { n_assets: n, data })
}

/// One path sampled exactly at `cfg.n_steps` equal intervals.
pub fn simulate_price_path(basket: &BasketSpec, cfg: &SimulationConfig, path: u64) -> Result<PriceGrid, PortfolioError> {
    cfg.validate()?;
    let n = basket.n_risky();
    let dt = basket.horizon() / cfg.n_steps as f64;
    let params: Vec<(f64, f64)> = basket
        .risky_assets()
        .iter()
        .map(|a| ((a.drift - 0.5 * a.volatility * a.volatility) * dt, a.volatility * dt.sqrt()))
        .collect();

    let mut rng = stream(cfg.seed, Domain::PricePaths, path);
    let mut independent = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut current: Vec<f64> = basket.risky_assets().iter().map(|a| a.initial_price).collect();
    let mut prices = Vec::with_capacity(cfg.n_steps + 1);
    prices.push(current.clone());
    for _ in 0..cfg.n_steps {
        draw_correlated(&mut rng, basket, &mut independent, &mut z);
        for ((price, &(drift, scale)), zk) in current.iter_mut().zip(&params).zip(&z) {
            *price *= (drift + scale * zk).exp();
        }
        prices.push(current.clone());
    }
    let times = (0..=cfg.n_steps).map(|k| k as f64 * dt).collect();
    Ok(PriceGrid { times, prices })
}

/// `cfg.n_paths` independent grids, in path order.
pub fn simulate_price_paths(basket: &BasketSpec, cfg: &SimulationConfig) -> Result<Vec<PriceGrid>, PortfolioError> {
    cfg.validate()?;
    (0..cfg.n_paths as u64).into_par_iter().map(|p| simulate_price_path(basket, cfg, p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestOfEstimate {
    /// `max(w, max_j e^{-it} E[w S_T^j / S_0^j])`.
    pub value: f64,
    /// Discounted expected terminal wealth of holding each risky asset.
    pub per_asset: Vec<MeanEstimate>,
    /// Winning risky asset, or `None` when cash wins.
    pub best_asset: Option<usize>,
    pub capital_guaranteed: bool,
}

/// Present value of the best-of basket, taking the outer max against `w`.
pub fn expected_best_of_return(basket: &BasketSpec, cfg: &SimulationConfig) -> Result<BestOfEstimate, PortfolioError> {
    let terminal = simulate_terminal_prices(basket, cfg)?;
    let w = basket.initial_wealth();
    let discount = basket.discount();
    let per_asset: Vec<MeanEstimate> = basket
        .risky_assets()
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let scale = discount * w / a.initial_price;
            let samples: Vec<f64> = terminal.paths().map(|p| scale * p[j]).collect();
            MeanEstimate::from_samples(&samples)
        })
        .collect();

    let mut value = w;
    let mut best_asset = None;
    for (j, est) in per_asset.iter().enumerate() {
        if est.mean > value {
            value = est.mean;
            best_asset = Some(j);
        }
    }
    Ok(BestOfEstimate { value, per_asset, best_asset, capital_guaranteed: value >= w })
}

/// Monte Carlo `P(S_T^j < S_0^j e^{it} for every risky j)`.
pub fn prob_all_risky_underperform(basket: &BasketSpec, cfg: &SimulationConfig) -> Result<MeanEstimate, PortfolioError> {
    let terminal = simulate_terminal_prices(basket, cfg)?;
    let growth = (basket.risk_free_rate() * basket.horizon()).exp();
    let thresholds: Vec<f64> = basket.risky_assets().iter().map(|a| a.initial_price * growth).collect();
    let indicators: Vec<f64> = terminal
        .paths()
        .map(|p| if p.iter().zip(&thresholds).all(|(s, k)| s < k) { 1.0 } else { 0.0 })
        .collect();
    Ok(MeanEstimate::from_samples(&indicators))
}

/// Fractions of wealth per asset, risky assets first and cash last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RebalanceWeights {
    pub weights: Vec<f64>,
    pub std_errors: Vec<f64>,
}

/// Index of the winning leg of one path: risky `j` or `n` for cash.
/// Ties go to the lowest index.
pub(crate) fn best_leg(relative: &[f64], cash_growth: f64) -> usize {
    let mut best = relative.len();
    let mut best_value = f64::NEG_INFINITY;
    for (j, &r) in relative.iter().enumerate() {
        if r > best_value {
            best = j;
            best_value = r;
        }
    }
    if cash_growth > best_value {
        best = relative.len();
    }
    best
}

/// Pathwise deltas of the discounted best-of payoff, scaled to weights.
///
/// The payoff holds `w / S_0^j` units of asset `j`, so on each path
/// `dV/dS_0^j * S_0^j / w = e^{-it} (S_T^j / S_0^j) 1{j wins}`. Cash takes
/// the remainder, making the weights sum to one.
pub fn rebalance_weights(basket: &BasketSpec, cfg: &SimulationConfig) -> Result<RebalanceWeights, PortfolioError> {
    let terminal = simulate_terminal_prices(basket, cfg)?;
    let n = basket.n_risky();
    let discount = basket.discount();
    let cash_growth = 1.0 / discount;
    let initial: Vec<f64> = basket.risky_assets().iter().map(|a| a.initial_price).collect();

    let mut per_asset = vec![vec![0.0; terminal.n_paths()]; n + 1];
    let mut relative = vec![0.0; n];
    for (path, prices) in terminal.paths().enumerate() {
        for ((r, s), s0) in relative.iter_mut().zip(prices).zip(&initial) {
            *r = s / s0;
        }
        let winner = best_leg(&relative, cash_growth);
        let mut risky_total = 0.0;
        if winner < n {
            let weight = discount * relative[winner];
            per_asset[winner][path] = weight;
            risky_total = weight;
        }
        per_asset[n][path] = 1.0 - risky_total;
    }

    let estimates: Vec<MeanEstimate> = per_asset.iter().map(|v| MeanEstimate::from_samples(v)).collect();
    let mut weights: Vec<f64> = estimates[..n].iter().map(|e| e.mean).collect();
    let risky_sum: f64 = weights.iter().sum();
    weights.push(1.0 - risky_sum);
    let std_errors = estimates.iter().map(|e| e.std_error).collect();
    Ok(RebalanceWeights { weights, std_errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portfolio::AssetSpec;

    fn single(mu: f64, sigma: f64, rate: f64) -> BasketSpec {
        BasketSpec::independent(vec![AssetSpec::new("a", mu, sigma, 100.0)], rate, 1.0, 100.0).unwrap()
    }

    #[test]
    fn zero_volatility_is_deterministic() {
        let b = single(0.05, 0.0, 0.05);
        let cfg = SimulationConfig::new(100, 1, 3).unwrap();
        let t = simulate_terminal_prices(&b, &cfg).unwrap();
        let expected = 100.0 * 0.05f64.exp();
        assert!(t.paths().all(|p| p[0] == expected));
    }

    #[test]
    fn same_seed_same_output() {
        let b = BasketSpec::new(
            vec![AssetSpec::new("a", 0.1, 0.2, 100.0), AssetSpec::new("b", 0.07, 0.3, 50.0)],
            0.03,
            2.0,
            100.0,
            vec![vec![1.0, 0.4], vec![0.4, 1.0]],
        )
        .unwrap();
        let cfg = SimulationConfig::new(5000, 4, 99).unwrap();
        let a = simulate_terminal_prices(&b, &cfg).unwrap();
        let c = simulate_terminal_prices(&b, &cfg).unwrap();
        assert_eq!(a, c);
        let other = simulate_terminal_prices(&b, &SimulationConfig::new(5000, 4, 100).unwrap()).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn terminal_prices_do_not_depend_on_steps() {
        let b = single(0.1, 0.2, 0.05);
        let a = simulate_terminal_prices(&b, &SimulationConfig::new(100, 1, 5).unwrap()).unwrap();
        let c = simulate_terminal_prices(&b, &SimulationConfig::new(100, 50, 5).unwrap()).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn path_grid_shape() {
        let b = single(0.1, 0.2, 0.05);
        let grid = simulate_price_path(&b, &SimulationConfig::new(1, 12, 5).unwrap(), 0).unwrap();
        assert_eq!(grid.times.len(), 13);
        assert_eq!(grid.prices.len(), 13);
        assert_eq!(grid.prices[0], vec![100.0]);
        assert!((grid.times[12] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn best_of_degenerate_cases() {
        let cfg = SimulationConfig::new(1000, 1, 1).unwrap();
        let at_rate = expected_best_of_return(&single(0.05, 0.0, 0.05), &cfg).unwrap();
        assert!((at_rate.value - 100.0).abs() < 1e-12);
        let below = expected_best_of_return(&single(0.01, 0.0, 0.05), &cfg).unwrap();
        assert_eq!(below.value, 100.0);
        assert_eq!(below.best_asset, None);
        assert!(below.capital_guaranteed);
    }

    #[test]
    fn underperformance_degenerate() {
        let cfg = SimulationConfig::new(1000, 1, 1).unwrap();
        assert_eq!(prob_all_risky_underperform(&single(0.1, 0.0, 0.05), &cfg).unwrap().mean, 0.0);
        assert_eq!(prob_all_risky_underperform(&single(0.01, 0.0, 0.05), &cfg).unwrap().mean, 1.0);
    }

    #[test]
    fn zero_volatility_weights_sit_in_cash() {
        let b = BasketSpec::independent(
            vec![AssetSpec::new("a", 0.01, 0.0, 100.0), AssetSpec::new("b", 0.02, 0.0, 40.0)],
            0.05,
            1.0,
            100.0,
        )
        .unwrap();
        let w = rebalance_weights(&b, &SimulationConfig::new(100, 1, 1).unwrap()).unwrap();
        assert_eq!(w.weights, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn ties_go_to_lowest_leg() {
        assert_eq!(best_leg(&[1.0, 1.0], 1.0), 0);
        assert_eq!(best_leg(&[0.9, 1.1], 1.0), 1);
        assert_eq!(best_leg(&[0.9, 0.8], 1.0), 2);
    }
}
