//! Monte Carlo checks of the basket simulator against closed forms and
//! finite-difference oracles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use infoutil::markov::label_best_performer;
use infoutil::portfolio::{
    prob_all_risky_underperform, rebalance_weights, simulate_price_paths, simulate_terminal_prices, AssetSpec, BasketSpec,
    SimulationConfig,
};
use infoutil::stats::MeanEstimate;

fn phi(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

fn two_assets(rho: f64) -> BasketSpec {
    BasketSpec::new(
        vec![AssetSpec::new("eq", 0.09, 0.25, 80.0), AssetSpec::new("hf", 0.06, 0.15, 120.0)],
        0.03,
        1.5,
        100.0,
        vec![vec![1.0, rho], vec![rho, 1.0]],
    )
    .unwrap()
}

#[test]
fn terminal_mean_matches_gbm() {
    let basket = two_assets(0.5);
    let terminal = simulate_terminal_prices(&basket, &SimulationConfig::new(400_000, 1, 21).unwrap()).unwrap();
    for (j, asset) in basket.risky_assets().iter().enumerate() {
        let est = MeanEstimate::from_samples(&terminal.column(j));
        let exact = asset.initial_price * (asset.drift * basket.horizon()).exp();
        assert!(est.within(exact, 3.0), "asset {j}: {} vs {exact} (se {})", est.mean, est.std_error);
    }
}

#[test]
fn sample_correlation_of_log_returns() {
    let basket = two_assets(-0.6);
    let terminal = simulate_terminal_prices(&basket, &SimulationConfig::new(200_000, 1, 5).unwrap()).unwrap();
    let logs: Vec<(f64, f64)> = terminal.paths().map(|p| ((p[0] / 80.0).ln(), (p[1] / 120.0).ln())).collect();
    let n = logs.len() as f64;
    let (ma, mb) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in &logs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    let r = sab / (saa * sbb).sqrt();
    assert!((r + 0.6).abs() < 0.01, "{r}");
}

#[test]
fn underperformance_never_rises_when_an_independent_asset_is_added() {
    let cfg = SimulationConfig::new(50_000, 1, 3).unwrap();
    let pool = [(0.08, 0.2), (0.03, 0.1), (0.12, 0.4), (0.05, 0.25), (0.02, 0.05)];
    let mut previous = 1.0;
    for n in 1..=pool.len() {
        let assets = pool[..n].iter().enumerate().map(|(j, &(mu, s))| AssetSpec::new(format!("a{j}"), mu, s, 100.0)).collect();
        let basket = BasketSpec::independent(assets, 0.04, 1.0, 100.0).unwrap();
        let p = prob_all_risky_underperform(&basket, &cfg).unwrap().mean;
        assert!(p <= previous, "n={n}: {p} > {previous}");
        previous = p;
    }
}

#[test]
fn weights_are_self_financing() {
    let w = rebalance_weights(&two_assets(0.2), &SimulationConfig::new(20_000, 1, 1).unwrap()).unwrap();
    assert_eq!(w.weights.len(), 3);
    assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(w.weights[..2].iter().all(|x| *x >= 0.0));
}

#[test]
fn single_asset_weight_is_the_at_the_forward_delta() {
    // With drift equal to the rate the payoff is a call struck at the
    // forward, whose delta is N(sigma sqrt(t) / 2).
    let (sigma, t, rate) = (0.3, 2.0, 0.04);
    let basket = BasketSpec::independent(vec![AssetSpec::new("a", rate, sigma, 50.0)], rate, t, 100.0).unwrap();
    let w = rebalance_weights(&basket, &SimulationConfig::new(400_000, 1, 17).unwrap()).unwrap();
    let exact = phi(sigma * t.sqrt() / 2.0);
    assert!((w.weights[0] - exact).abs() <= 3.0 * w.std_errors[0], "{} vs {exact}", w.weights[0]);
}

/// Discounted best-of payoff per unit wealth with the risky legs scaled by
/// `bump`, evaluated on shared normals.
fn payoff(basket: &BasketSpec, normals: &[[f64; 2]], asset: usize, bump: f64) -> Vec<f64> {
    let t = basket.horizon();
    let rho = basket.correlation()[0][1];
    let growth = (basket.risk_free_rate() * t).exp();
    normals
        .iter()
        .map(|z| {
            let zs = [z[0], rho * z[0] + (1.0 - rho * rho).sqrt() * z[1]];
            let mut best = growth;
            for (j, a) in basket.risky_assets().iter().enumerate() {
                let scale = if j == asset { bump } else { 1.0 };
                let rel = ((a.drift - a.volatility.powi(2) / 2.0) * t + a.volatility * t.sqrt() * zs[j]).exp() * scale;
                best = best.max(rel);
            }
            best / growth
        })
        .collect()
}

#[test]
fn weights_match_finite_difference_deltas() {
    let basket = two_assets(0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let normals: Vec<[f64; 2]> =
        (0..400_000).map(|_| [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)]).collect();
    let h = 1e-4;
    let w = rebalance_weights(&basket, &SimulationConfig::new(400_000, 1, 77).unwrap()).unwrap();
    for j in 0..2 {
        let up = payoff(&basket, &normals, j, 1.0 + h);
        let down = payoff(&basket, &normals, j, 1.0 - h);
        let fd: Vec<f64> = up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * h)).collect();
        let oracle = MeanEstimate::from_samples(&fd);
        let se = (oracle.std_error.powi(2) + w.std_errors[j].powi(2)).sqrt();
        assert!((w.weights[j] - oracle.mean).abs() <= 3.0 * se, "asset {j}: {} vs {} (se {se})", w.weights[j], oracle.mean);
    }
}

#[test]
fn best_performer_frequencies_for_two_iid_assets() {
    let (mu, sigma, rate, steps, t) = (0.07, 0.2, 0.05, 12, 1.0);
    let assets = vec![AssetSpec::new("a", mu, sigma, 100.0), AssetSpec::new("b", mu, sigma, 100.0)];
    let basket = BasketSpec::independent(assets, rate, t, 100.0).unwrap();
    let grids = simulate_price_paths(&basket, &SimulationConfig::new(5_000, steps, 8).unwrap()).unwrap();
    let mut counts = [0usize; 3];
    for g in &grids {
        for &s in label_best_performer(g, rate).unwrap().states() {
            counts[s] += 1;
        }
    }
    let total = counts.iter().sum::<usize>() as f64;
    let dt = t / steps as f64;
    let below_cash = phi((rate * dt - (mu - sigma * sigma / 2.0) * dt) / (sigma * dt.sqrt()));
    let cash = below_cash * below_cash;
    let expected = [(1.0 - cash) / 2.0, (1.0 - cash) / 2.0, cash];
    for (c, p) in counts.iter().zip(expected) {
        let se = (p * (1.0 - p) / total).sqrt();
        assert!((*c as f64 / total - p).abs() <= 3.0 * se, "{counts:?} vs {expected:?}");
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let basket = two_assets(0.4);
    let cfg = SimulationConfig::new(30_000, 1, 9).unwrap();
    let reference = simulate_terminal_prices(&basket, &cfg).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = single.install(|| simulate_terminal_prices(&basket, &cfg).unwrap());
    assert_eq!(reference, serial);
}
