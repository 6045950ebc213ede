//! `iacvlab`: command-line front end for `iacv-core`.
//!
//! Every report starts with a manifest of `#` lines (command, input
//! digests, config digest, seed, tool version and an optional timestamp)
//! and is otherwise a plain CSV file. Reports depend only on their inputs,
//! so the same manifest always comes with the same bytes.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{Context, DashboardArgs, Format, Outcome, SimulateArgs, ValueArgs, VintageArgs};
use error::{exit, CliError, Result};

/// Environment variable used for the manifest timestamp when `--timestamp`
/// is not given.
pub const SOURCE_DATE_EPOCH: &str = "SOURCE_DATE_EPOCH";

#[derive(Debug, Parser)]
#[command(name = "iacvlab", version, about = "Loan valuation and impairment backtesting")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Exit with status 1 when analytic warnings are raised.
    #[arg(long, global = true)]
    pub strict: bool,

    /// Timestamp recorded in report manifests.
    #[arg(long, global = true)]
    pub timestamp: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-period GCA, iACV, NCA and conservatism of each contract.
    Value {
        #[arg(long)]
        contracts: PathBuf,
        #[arg(long)]
        profiles: Option<PathBuf>,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Impact of Risk, PL and NPL dashboards between two snapshots.
    Dashboard {
        #[arg(long, requires = "eop", conflicts_with = "series")]
        bop: Option<PathBuf>,
        #[arg(long, requires = "bop")]
        eop: Option<PathBuf>,
        /// One file with several dates; reports every consecutive pair.
        #[arg(long, conflicts_with_all = ["bop_date", "eop_date", "provisions_bop"])]
        series: Option<PathBuf>,
        #[arg(long)]
        bop_date: Option<i64>,
        #[arg(long)]
        eop_date: Option<i64>,
        /// Compare with a twelfth of the annual BOP expected loss.
        #[arg(long)]
        monthly: bool,
        /// Add the PD, EAD and LGD components of the PL dashboard.
        #[arg(long)]
        split: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Total provisions at BOP; enables cost of risk and shortfall.
        #[arg(long, requires = "provisions_eop")]
        provisions_bop: Option<f64>,
        #[arg(long, requires = "provisions_bop")]
        provisions_eop: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vintage stack and total expected loss of static NPL pools.
    Vintage {
        #[arg(long)]
        pools: PathBuf,
        #[arg(long)]
        observations: PathBuf,
        #[arg(long)]
        recoveries: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Synthetic books from the configured scenario or a canned figure.
    Simulate {
        #[arg(long)]
        figure: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn read_config(cli: &Cli, vars: &[(String, String)]) -> Result<config::Loaded> {
    let text = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?),
        None => None,
    };
    config::load(text.as_deref(), vars.iter().cloned())
}

/// Runs a parsed command line and writes its outputs.
pub fn execute(cli: &Cli, vars: &[(String, String)], stdout: &mut dyn Write) -> Result<Outcome> {
    let timestamp = cli.timestamp.clone().or_else(|| {
        vars.iter()
            .find(|(k, _)| k == SOURCE_DATE_EPOCH)
            .map(|(_, v)| v.clone())
    });
    let ctx = Context {
        loaded: read_config(cli, vars)?,
        timestamp,
    };
    let outcome = match &cli.command {
        Command::Value { contracts, profiles, out } => commands::value(
            &ctx,
            &ValueArgs {
                contracts: contracts.clone(),
                profiles: profiles.clone(),
                out: out.clone(),
            },
        )?,
        Command::Dashboard {
            bop,
            eop,
            series,
            bop_date,
            eop_date,
            monthly,
            split,
            format,
            provisions_bop,
            provisions_eop,
            out,
        } => commands::dashboard(
            &ctx,
            &DashboardArgs {
                bop: bop.clone(),
                eop: eop.clone(),
                series: series.clone(),
                bop_date: *bop_date,
                eop_date: *eop_date,
                monthly: *monthly,
                split: *split,
                format: match format {
                    FormatArg::Csv => Format::Csv,
                    FormatArg::Table => Format::Table,
                },
                provisions: provisions_bop.zip(*provisions_eop),
                out: out.clone(),
            },
        )?,
        Command::Vintage {
            pools,
            observations,
            recoveries,
            out_dir,
        } => commands::vintage(
            &ctx,
            &VintageArgs {
                pools: pools.clone(),
                observations: observations.clone(),
                recoveries: recoveries.clone(),
                out_dir: out_dir.clone(),
            },
        )?,
        Command::Simulate { figure, seed, out_dir } => commands::simulate(
            &ctx,
            &SimulateArgs {
                figure: figure.clone(),
                seed: *seed,
                out_dir: out_dir.clone(),
            },
        )?,
    };
    for output in &outcome.outputs {
        match &output.path {
            Some(path) => {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                }
                std::fs::write(path, &output.text).map_err(|e| CliError::io(path, e))?;
            }
            None => stdout
                .write_all(output.text.as_bytes())
                .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e))?,
        }
    }
    Ok(outcome)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, vars: &[(String, String)], stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::INPUT_ERROR } else { exit::SUCCESS };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match execute(&cli, vars, stdout) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            if cli.strict && !outcome.warnings.is_empty() {
                exit::WARNING
            } else {
                exit::SUCCESS
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit::INPUT_ERROR
        }
    }
}
