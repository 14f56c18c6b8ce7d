//! File readers for the CLI. Row numbers in errors count data rows from 1.

use chrono::NaiveDate;
use std::fs;
use std::path::Path;

use super::CliError;
use crate::coding::ChannelMatrix;
use crate::portfolio::PriceGrid;

const DAYS_PER_YEAR: f64 = 365.25;

/// Historical prices with header `date,<asset names...>`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub assets: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// One row per date, one column per asset.
    pub prices: Vec<Vec<f64>>,
}

impl PriceTable {
    /// Grid with times in years since the first date.
    pub fn to_grid(&self) -> PriceGrid {
        let first = self.dates[0];
        let times = self.dates.iter().map(|d| (*d - first).num_days() as f64 / DAYS_PER_YEAR).collect();
        PriceGrid { times, prices: self.prices.clone() }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn reader(text: &str, has_headers: bool) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(has_headers).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes())
}

pub fn ingest_prices(path: &Path) -> Result<PriceTable, CliError> {
    parse_prices(&read(path)?)
}

pub fn parse_prices(text: &str) -> Result<PriceTable, CliError> {
    let mut rdr = reader(text, true);
    let header = rdr.headers().map_err(|e| CliError::Input(format!("price header: {e}")))?.clone();
    if header.len() < 2 || !header[0].eq_ignore_ascii_case("date") {
        return Err(CliError::Input("price header must be date,<asset names...>".into()));
    }
    let assets: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut prices = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::Input(format!("row {row}: {e}")))?;
        if record.len() != header.len() {
            return Err(CliError::Input(format!("row {row}: expected {} fields, found {}", header.len(), record.len())));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| CliError::Input(format!("row {row}, column date: unparseable date {:?} ({e})", &record[0])))?;
        if let Some(last) = dates.last() {
            if date <= *last {
                return Err(CliError::Input(format!("row {row}, column date: dates must be strictly ascending")));
            }
        }
        let values = assets
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let raw = &record[j + 1];
                match raw.parse::<f64>() {
                    Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
                    _ => Err(CliError::Input(format!("row {row}, column {name}: price {raw:?} is not a positive number"))),
                }
            })
            .collect::<Result<Vec<f64>, _>>()?;
        dates.push(date);
        prices.push(values);
    }
    if dates.is_empty() {
        return Err(CliError::Input("price file has no rows".into()));
    }
    Ok(PriceTable { assets, dates, prices })
}

/// Single column of integer states; a non-numeric first line is a header.
pub fn ingest_states(path: &Path) -> Result<Vec<usize>, CliError> {
    parse_states(&read(path)?)
}

pub fn parse_states(text: &str) -> Result<Vec<usize>, CliError> {
    let mut states = Vec::new();
    for (i, record) in reader(text, false).records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("line {}: {e}", i + 1)))?;
        let field = record.get(0).unwrap_or("");
        match field.parse::<usize>() {
            Ok(s) => states.push(s),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(CliError::Input(format!("line {}: state {field:?} is not a non-negative integer", i + 1))),
        }
    }
    if states.is_empty() {
        return Err(CliError::Input("state file has no rows".into()));
    }
    Ok(states)
}

/// Channel matrix, one CSV row per input letter.
pub fn ingest_channel(path: &Path) -> Result<ChannelMatrix, CliError> {
    parse_channel(&read(path)?)
}

pub fn parse_channel(text: &str) -> Result<ChannelMatrix, CliError> {
    let rows = parse_matrix(text)?;
    ChannelMatrix::new(rows).map_err(|e| CliError::Input(e.to_string()))
}

fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    reader(text, false)
        .records()
        .enumerate()
        .map(|(i, record)| {
            let record = record.map_err(|e| CliError::Input(format!("row {}: {e}", i + 1)))?;
            record
                .iter()
                .enumerate()
                .map(|(j, f)| f.parse::<f64>().map_err(|_| CliError::Input(format!("row {}, column {}: {f:?} is not a number", i + 1, j + 1))))
                .collect()
        })
        .collect()
}

/// `symbol<TAB>probability[<TAB>codeword]` lines; blank and `#` lines skipped.
pub fn parse_alphabet_table(text: &str) -> Result<(Vec<String>, Vec<f64>), CliError> {
    let mut symbols = Vec::new();
    let mut probs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let symbol = fields.next().unwrap_or("").trim();
        let prob = fields.next().map(str::trim).unwrap_or("");
        let p = prob
            .parse::<f64>()
            .map_err(|_| CliError::Input(format!("alphabet line {}: probability {prob:?} is not a number", i + 1)))?;
        symbols.push(symbol.to_owned());
        probs.push(p);
    }
    Ok((symbols, probs))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    read(path)
}
