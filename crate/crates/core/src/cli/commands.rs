use serde_json::{json, Value};
use std::path::Path;

use super::config::RunConfig;
use super::ingest::{ingest_channel, ingest_prices, ingest_states, parse_alphabet_table, read_text};
use super::report::{cell, Table};
use super::CliError;
use crate::coding::{
    average_length_bounds, block_code_map, build_code, decode, encode, estimate_decoding_error, kraft_sum, BlockCode,
    ChannelMatrix, SourceAlphabet,
};
use crate::markov::{
    estimate_transitions, estimate_transitions_pooled, gibbs_bound_check, label_best_performer, stationary_distribution,
    steady_state_check, EstimatedChain, MarkovChain, StateSequence,
};
use crate::portfolio::{
    basket_extrinsic_utility, enumerate_choices, expected_best_of_return, prob_all_risky_underperform, rebalance_weights,
    simulate_price_paths, AssetSpec, BasketSpec, SimulationConfig,
};
use crate::utility::{
    bayes_posterior, binary_extrinsic_utility, binary_marginal_curvature, composite_utility, extrinsic_utility,
    intrinsic_utility, maximize_extrinsic_utility, motivational_scores, rank_by_motivation, shannon_entropy, ChoiceSet,
    DiscreteDistribution,
};

/// Results block plus CSV tables; the first table is the primary one.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub results: Value,
    pub tables: Vec<Table>,
}

pub fn cmd_utility(config: &mut RunConfig) -> Result<CommandOutput, CliError> {
    let (rewards, probs, positive, likelihoods) = match config.str_opt("csv") {
        Some(path) => read_choice_csv(Path::new(&path))?,
        None => {
            let probs: Vec<f64> = config.list_req("probs")?;
            let rewards = config.list_opt("rewards")?.unwrap_or_else(|| vec![0.0; probs.len()]);
            let positive = config.list_opt("positive_utility")?.unwrap_or_else(|| vec![1.0; probs.len()]);
            let likelihoods = config.list_opt("likelihoods")?;
            (rewards, probs, positive, likelihoods)
        }
    };
    let n = probs.len();
    let distribution = DiscreteDistribution::new(probs)?;
    let objects = match config.parsed_opt::<u32>("objects")? {
        Some(k) => k,
        None if n.is_power_of_two() => {
            let k = n.trailing_zeros();
            config.set("objects", &k.to_string());
            config.parsed_req("objects")?
        }
        None => return Err(CliError::Input(format!("{n} choices is not a power of two; set objects explicitly"))),
    };
    let curve_points: usize = config.parsed_or("curve_points", 99)?;

    let choices = ChoiceSet::with_positive_utility(objects, rewards.clone(), distribution.clone(), positive.clone())?;
    let posterior = match &likelihoods {
        Some(l) => bayes_posterior(&distribution, l)?,
        None => distribution.clone(),
    };
    let composite = composite_utility(&choices, &posterior)?;
    let optimum = maximize_extrinsic_utility(objects)?;
    let scores = motivational_scores(&rewards, distribution.probs(), &positive)?;
    let (best_index, best_strength) = rank_by_motivation(&rewards, distribution.probs(), &positive)?;
    let mut ranking: Vec<usize> = (0..scores.len()).collect();
    ranking.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut curve = Table::new("curve", &["p", "extrinsic_utility", "curvature"]);
    let mut curve_json = Vec::with_capacity(curve_points);
    for k in 1..=curve_points {
        let p = k as f64 / (curve_points + 1) as f64;
        let u = binary_extrinsic_utility(p)?;
        let c = binary_marginal_curvature(p)?;
        curve.push([cell(p), cell(u), cell(c)]);
        curve_json.push(json!({"p": p, "extrinsic_utility": u, "curvature": c}));
    }

    let results = json!({
        "choices": n,
        "objects": objects,
        "power_set": choices.is_power_set(),
        "entropy_bits": shannon_entropy(&distribution),
        "intrinsic_utility": intrinsic_utility(&choices),
        "extrinsic_utility": extrinsic_utility(&distribution, objects),
        "posterior": posterior.probs(),
        "composite_utility": composite,
        "maximizer": {
            "objects": objects,
            "outcomes": optimum.distribution.len(),
            "probability": optimum.distribution.probs()[0],
            "value": optimum.value,
            "numeric_deviation": optimum.numeric_deviation,
        },
        "motivational_strength": {
            "best_index": best_index,
            "best_value": best_strength,
            "scores": scores,
            "ranking": ranking,
        },
        "curve": curve_json,
    });
    Ok(CommandOutput { results, tables: vec![curve] })
}

/// Rewards, probabilities, P(U > 0) and optional likelihoods.
type ChoiceColumns = (Vec<f64>, Vec<f64>, Vec<f64>, Option<Vec<f64>>);

/// Columns `reward,prob[,positive_utility][,likelihood]` with a header row.
fn read_choice_csv(path: &Path) -> Result<ChoiceColumns, CliError> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| CliError::Input(e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let (Some(reward_col), Some(prob_col)) = (column("reward"), column("prob")) else {
        return Err(CliError::Input("choice csv needs reward and prob columns".into()));
    };
    let positive_col = column("positive_utility");
    let likelihood_col = column("likelihood");
    let (mut rewards, mut probs, mut positive, mut likelihoods) = (vec![], vec![], vec![], vec![]);
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("row {}: {e}", i + 1)))?;
        let field = |col: usize, name: &str| -> Result<f64, CliError> {
            let raw = record.get(col).unwrap_or("");
            raw.parse().map_err(|_| CliError::Input(format!("row {}, column {name}: {raw:?} is not a number", i + 1)))
        };
        rewards.push(field(reward_col, "reward")?);
        probs.push(field(prob_col, "prob")?);
        positive.push(positive_col.map_or(Ok(1.0), |c| field(c, "positive_utility"))?);
        if let Some(c) = likelihood_col {
            likelihoods.push(field(c, "likelihood")?);
        }
    }
    let likelihoods = likelihood_col.map(|_| likelihoods);
    Ok((rewards, probs, positive, likelihoods))
}

fn read_basket(config: &mut RunConfig) -> Result<BasketSpec, CliError> {
    let drifts: Vec<f64> = config.list_req("mu")?;
    let n = drifts.len();
    let vols: Vec<f64> = config.list_req("sigma")?;
    let initial: Vec<f64> = config.list_opt("s0")?.unwrap_or_else(|| vec![100.0; n]);
    let names: Vec<String> = config.list_opt("assets")?.unwrap_or_else(|| (1..=n).map(|i| format!("asset{i}")).collect());
    if [vols.len(), initial.len(), names.len()].iter().any(|&len| len != n) {
        return Err(CliError::Input(format!("mu, sigma, s0 and assets must all have {n} entries")));
    }
    let rate: f64 = config.parsed_req("rate")?;
    let horizon: f64 = config.parsed_or("horizon", 1.0)?;
    let wealth: f64 = config.parsed_or("wealth", 100.0)?;
    let assets = names
        .into_iter()
        .zip(drifts)
        .zip(vols)
        .zip(initial)
        .map(|(((name, mu), sigma), s0)| AssetSpec::new(name, mu, sigma, s0))
        .collect();
    Ok(match config.matrix_opt("correlation")? {
        Some(corr) => BasketSpec::new(assets, rate, horizon, wealth, corr)?,
        None => BasketSpec::independent(assets, rate, horizon, wealth)?,
    })
}

pub fn cmd_portfolio(config: &mut RunConfig) -> Result<CommandOutput, CliError> {
    let basket = read_basket(config)?;
    let seed = config.seed()?;
    let paths: usize = config.parsed_or("paths", 100_000)?;
    let steps: usize = config.parsed_or("steps", 12)?;
    let chain_paths: usize = config.parsed_or("chain_paths", 200)?;
    let tol: f64 = config.parsed_or("steady_state_tol", 1e-3)?;
    let cfg = SimulationConfig::new(paths, steps, seed)?;
    let n = basket.n_risky();

    let best_of = expected_best_of_return(&basket, &cfg)?;
    let underperform = prob_all_risky_underperform(&basket, &cfg)?;
    let weights = rebalance_weights(&basket, &cfg)?;
    let choices = enumerate_choices(n)?;
    let max_utility = basket_extrinsic_utility(n, &DiscreteDistribution::uniform(choices.len()))?;

    let grids = simulate_price_paths(&basket, &SimulationConfig::new(chain_paths, steps, seed)?)?;
    let sequences = grids
        .iter()
        .map(|g| label_best_performer(g, basket.risk_free_rate()))
        .collect::<Result<Vec<StateSequence>, _>>()?;
    let estimated = estimate_transitions_pooled(&sequences, n + 1)?;
    let chain_results = analyze_chain(&estimated.chain, tol)?;

    let mut names: Vec<String> = basket.risky_assets().iter().map(|a| a.name.clone()).collect();
    names.push("cash".into());
    let mut table = Table::new("weights", &["asset", "weight", "std_error"]);
    for ((name, w), se) in names.iter().zip(&weights.weights).zip(&weights.std_errors) {
        table.push([name.clone(), cell(*w), cell(*se)]);
    }

    let results = json!({
        "expected_return": best_of.value,
        "initial_wealth": basket.initial_wealth(),
        "capital_guaranteed": best_of.capital_guaranteed,
        "best_asset": best_of.best_asset.map(|j| names[j].clone()),
        "per_asset_present_value": best_of.per_asset,
        "prob_all_risky_underperform": underperform,
        "choices": {
            "count": choices.len(),
            "vectors": choices.iter().map(|c| c.to_bit_string()).collect::<Vec<_>>(),
        },
        "max_extrinsic_utility": max_utility,
        "rebalance": {
            "assets": names,
            "weights": weights.weights,
            "std_errors": weights.std_errors,
        },
        "best_performer_chain": {
            "paths": chain_paths,
            "steps": steps,
            "unvisited_rows": estimated.unvisited_rows,
            "analysis": chain_results,
        },
    });
    Ok(CommandOutput { results, tables: vec![table] })
}

fn analyze_chain(chain: &MarkovChain, tol: f64) -> Result<Value, CliError> {
    let pi = stationary_distribution(chain)?;
    let gibbs = gibbs_bound_check(chain)?;
    let steady = steady_state_check(chain, tol)?;
    Ok(json!({
        "n_states": chain.n_states(),
        "transition": chain.transition(),
        "stationary": pi.probs(),
        "entropy_rate": gibbs.rate,
        "adjoint_entropy": gibbs.adjoint,
        "gibbs_slack": gibbs.slack,
        "gibbs_equality": gibbs.equality,
        "steady_state": steady,
    }))
}

fn chain_table(chain: &MarkovChain) -> Table {
    let headers: Vec<String> = std::iter::once("from".to_owned()).chain((0..chain.n_states()).map(|j| format!("to_{j}"))).collect();
    let mut table = Table { name: "transition", headers, rows: Vec::new() };
    for (i, row) in chain.transition().iter().enumerate() {
        table.push(std::iter::once(i.to_string()).chain(row.iter().map(|p| cell(*p))));
    }
    table
}

pub fn cmd_markov(config: &mut RunConfig) -> Result<CommandOutput, CliError> {
    let tol: f64 = config.parsed_or("steady_state_tol", 1e-6)?;
    let mut estimated: Option<EstimatedChain> = None;
    let mut source = "transition";
    let chain = if let Some(path) = config.str_opt("chain") {
        source = "chain";
        serde_json::from_str::<MarkovChain>(&read_text(Path::new(&path))?)
            .map_err(|e| CliError::Input(format!("{path}: {e}")))?
    } else if let Some(rows) = config.matrix_opt("transition")? {
        MarkovChain::new(rows)?
    } else if let Some(path) = config.str_opt("sequence") {
        source = "sequence";
        let states = ingest_states(Path::new(&path))?;
        let observed = states.iter().max().map_or(1, |m| m + 1);
        let n_states: usize = config.parsed_or("n_states", observed)?;
        let sequence = StateSequence::new(states, n_states)?;
        let e = estimate_transitions(&sequence, n_states)?;
        let chain = e.chain.clone();
        estimated = Some(e);
        chain
    } else if let Some(path) = config.str_opt("prices") {
        source = "prices";
        let table = ingest_prices(Path::new(&path))?;
        let rate: f64 = config.parsed_req("rate")?;
        let sequence = label_best_performer(&table.to_grid(), rate)?;
        let e = estimate_transitions(&sequence, sequence.n_states())?;
        let chain = e.chain.clone();
        estimated = Some(e);
        chain
    } else {
        return Err(CliError::Input("markov needs one of chain, transition, sequence or prices".into()));
    };

    let mut results = analyze_chain(&chain, tol)?;
    results["source"] = json!(source);
    if let Some(e) = &estimated {
        results["counts"] = json!(e.counts);
        results["unvisited_rows"] = json!(e.unvisited_rows);
    }
    Ok(CommandOutput { results, tables: vec![chain_table(&chain)] })
}

fn read_alphabet(config: &mut RunConfig) -> Result<SourceAlphabet, CliError> {
    let (symbols, probs) = match config.str_opt("alphabet") {
        Some(path) => parse_alphabet_table(&read_text(Path::new(&path))?)?,
        None => {
            let probs: Vec<f64> = config.list_req("probs")?;
            let symbols = config.list_opt("symbols")?.unwrap_or_else(|| (1..=probs.len()).map(|i| format!("s{i}")).collect());
            (symbols, probs)
        }
    };
    Ok(SourceAlphabet::new(symbols, DiscreteDistribution::new(probs)?)?)
}

pub fn cmd_code(config: &mut RunConfig) -> Result<CommandOutput, CliError> {
    let alphabet = read_alphabet(config)?;
    let code = build_code(&alphabet)?;
    let lengths = code.lengths();
    let bounds = average_length_bounds(&alphabet)?;

    let mut results = json!({
        "symbols": alphabet.symbols(),
        "probabilities": alphabet.probs(),
        "lengths": lengths,
        "codewords": code.codewords(),
        "kraft_sum": kraft_sum(&lengths)?,
        "prefix_free": code.is_prefix_free(),
        "average_length": bounds.average_length,
        "entropy": bounds.entropy,
        "bounds_hold": bounds.holds,
        "padded_to_one_bit": bounds.padded,
    });
    if let Some(message) = config.list_opt::<String>("message")? {
        results["encoded"] = json!(encode(&code, &message)?);
    }
    if let Some(bits) = config.str_opt("bits") {
        results["decoded"] = json!(decode(&code, &bits)?);
    }

    let channel = match (config.str_opt("channel"), config.parsed_opt::<f64>("flip")?) {
        (Some(path), _) => Some(ingest_channel(Path::new(&path))?),
        (None, Some(q)) => Some(ChannelMatrix::binary_symmetric(q)?),
        (None, None) => None,
    };
    if let Some(channel) = channel {
        let trials: usize = config.parsed_or("trials", 100_000)?;
        let seed = config.seed()?;
        let scheme = config.str_opt("channel_code").unwrap_or_else(|| "padded".into());
        let block = match scheme.split_once(':') {
            None if scheme == "padded" => BlockCode::from_prefix_code(&code)?,
            Some(("repetition", n)) => BlockCode::repetition(parse_count(n)?)?,
            Some(("block", n)) => block_code_map(parse_count(n)?)?,
            _ => return Err(CliError::Input(format!("channel_code {scheme:?}: expected padded, repetition:N or block:N"))),
        };
        let estimate = estimate_decoding_error(&block, &channel, trials, seed)?;
        results["decoding_error"] = json!({
            "channel_code": scheme,
            "codewords": block.codewords().len(),
            "block_length": block.block_length(),
            "trials": trials,
            "probability": estimate.mean,
            "std_error": estimate.std_error,
        });
    }

    let mut table = Table::new("code", &["symbol", "probability", "length", "codeword"]);
    for ((s, p), c) in alphabet.symbols().iter().zip(alphabet.probs()).zip(code.codewords()) {
        table.push([s.clone(), cell(*p), c.len().to_string(), c.clone()]);
    }
    Ok(CommandOutput { results, tables: vec![table] })
}

fn parse_count(raw: &str) -> Result<usize, CliError> {
    raw.trim().parse().map_err(|_| CliError::Input(format!("{raw:?} is not a count")))
}
