use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use tunable_ht::{LogBase, NuParam};

#[derive(Debug, Parser)]
#[command(name = "tunable-ht", version, about = "Hypothesis testing under the tunable ν-loss")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// KL divergence, Chernoff information and skewed Bhattacharyya quantities.
    Exponents {
        #[command(flatten)]
        pair: PairArgs,
        /// Finite ν values for the affinity quantities.
        #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "1,1.5,2")]
        nu: Vec<f64>,
        #[command(flatten)]
        base: BaseArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Calibrate the ν-most-powerful test to size ε and report its errors.
    MpTest {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_parser = parse_nu)]
        nu: NuParam,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Build the ν-Bayes test and report its risk.
    Bayes {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_parser = parse_nu)]
        nu: NuParam,
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exponent trace of the calibrated ν-MP test over sequence lengths.
    TraceNp {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_parser = parse_nu)]
        nu: NuParam,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_delimiter = ',', action = ArgAction::Set, required = true)]
        n_list: Vec<u32>,
        /// Report the ν-type II error or the ordinary miss probability.
        #[arg(long, value_enum, default_value_t = Reading::Nu)]
        reading: Reading,
        #[command(flatten)]
        base: BaseArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exponent trace of the ν-Bayes risk over sequence lengths.
    TraceBayes {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_parser = parse_nu)]
        nu: NuParam,
        #[arg(long, value_delimiter = ',', action = ArgAction::Set, required = true)]
        n_list: Vec<u32>,
        #[command(flatten)]
        base: BaseArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// D_B,ν over a grid of ν values.
    SweepNu {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 1.0)]
        nu_min: f64,
        #[arg(long, default_value_t = 2.0)]
        nu_max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[command(flatten)]
        base: BaseArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Tabulate the ν-loss on p = 1/steps, ..., 1.
    LossCurve {
        #[arg(long, value_delimiter = ',', action = ArgAction::Set, value_parser = parse_nu, default_value = "1,1.5,2,3,inf")]
        nu: Vec<NuParam>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check the closed-form tests against the grid oracles on random instances.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 2001)]
        grid_points: usize,
        #[arg(long, default_value_t = 2)]
        refinement_rounds: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Null distribution as comma-separated probabilities.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
    pub p0: Option<Vec<f64>>,
    /// Alternative distribution as comma-separated probabilities.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
    pub p1: Option<Vec<f64>>,
    /// Prior (π0,π1).
    #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
    pub prior: Option<Vec<f64>>,
    /// JSON file with `p0`, `p1` and optionally `prior`; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaseArgs {
    /// Unit for information quantities and exponents.
    #[arg(long, default_value = "bits", value_parser = parse_base)]
    pub base: LogBase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reading {
    Nu,
    Classical,
}

fn parse_nu(s: &str) -> Result<NuParam, String> {
    s.parse().map_err(|e: tunable_ht::Error| e.to_string())
}

fn parse_base(s: &str) -> Result<LogBase, String> {
    s.parse().map_err(|e: tunable_ht::Error| e.to_string())
}
