//! Command-line front end: four subcommands sharing one config format and
//! one JSON report layout.

pub mod commands;
pub mod config;
pub mod ingest;
pub mod report;

use clap::{Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::{Path, PathBuf};

use crate::coding::CodingError;
use crate::markov::MarkovError;
use crate::portfolio::PortfolioError;
use crate::utility::UtilityError;
use commands::CommandOutput;
use config::RunConfig;
use report::Report;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("analysis error: {0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Analysis(_) => 3,
        }
    }
}

impl From<UtilityError> for CliError {
    fn from(e: UtilityError) -> Self {
        match e {
            UtilityError::VerificationFailed { .. } => CliError::Analysis(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<PortfolioError> for CliError {
    fn from(e: PortfolioError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CodingError> for CliError {
    fn from(e: CodingError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<MarkovError> for CliError {
    fn from(e: MarkovError) -> Self {
        match e {
            MarkovError::NotUnique { .. } | MarkovError::SolveFailed { .. } | MarkovError::GibbsViolated { .. } => {
                CliError::Analysis(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "infoutil", version, about = "Information-theoretic utility, basket simulation, coding and Markov analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Config override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Intrinsic, extrinsic and composite utility of a choice set.
    Utility,
    /// Best-of basket simulation and best-performer chain.
    Portfolio,
    /// Shannon-Fano code and channel decoding error.
    Code,
    /// Stationary law, entropy rate and Gibbs bound of a chain.
    Markov,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Utility => "utility",
            Command::Portfolio => "portfolio",
            Command::Code => "code",
            Command::Markov => "markov",
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::parse(&ingest::read_text(path)?)?,
        None => RunConfig::default(),
    };
    for assignment in &cli.overrides {
        config.apply_override(assignment)?;
    }
    if let Some(seed) = cli.seed {
        config.set("seed", &seed.to_string());
    }
    Ok(config)
}

pub fn run_command(command: Command, config: &mut RunConfig) -> Result<CommandOutput, CliError> {
    match command {
        Command::Utility => commands::cmd_utility(config),
        Command::Portfolio => commands::cmd_portfolio(config),
        Command::Code => commands::cmd_code(config),
        Command::Markov => commands::cmd_markov(config),
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut config = load_config(cli)?;
    let output = run_command(cli.command, &mut config)?;
    let seed = config.seed()?;
    match cli.format {
        Format::Csv => {
            let table = output.tables.first().map(|t| t.to_csv()).unwrap_or_default();
            emit(cli.out.as_deref(), &table)
        }
        Format::Json => {
            let report = Report::new(cli.command.name(), config.resolved().clone(), output.results, seed);
            emit(cli.out.as_deref(), &report.to_json())?;
            if let Some(out) = &cli.out {
                for table in &output.tables {
                    write_file(&side_file(out, table.name), &table.to_csv())?;
                }
            }
            Ok(())
        }
    }
}

/// `report.json` with table `curve` becomes `report.curve.csv`.
pub fn side_file(out: &Path, table: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    out.with_file_name(format!("{stem}.{table}.csv"))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
