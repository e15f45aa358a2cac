mod cache;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Format;

/// Prime-race densities in abelian extensions of Q.
///
/// A race over classes C_1, ..., C_{r+1} reports the logarithmic density of
/// the set of x with pi(x; C_1) < pi(x; C_2) < ... < pi(x; C_{r+1}) after
/// normalisation, i.e. the classes are listed from least to most primes.
#[derive(Parser, Debug)]
#[command(name = "chebrace", version)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Seed for every randomized computation; echoed in the output.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Cache directory (overrides $CHEBRACE_CACHE_DIR).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Run every loop on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Race statistics and densities.
    #[command(subcommand)]
    Race(RaceCommand),
    /// Moderacy diagnostics for a family of fields.
    #[command(subcommand)]
    Family(FamilyCommand),
    /// Zeros of Dirichlet L-functions.
    #[command(subcommand)]
    Zeros(ZerosCommand),
    /// Sample the limiting distribution and compare with the Gaussian formula.
    Simulate(SimulateArgs),
    /// Gaussian orthant probability P(Z <= x).
    Orthant(OrthantArgs),
    /// Prime-selection constructions with certificates.
    #[command(subcommand)]
    Construct(ConstructCommand),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Asymptotic,
    Zeros,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TailArg {
    None,
    Density,
}

#[derive(Args, Debug)]
pub struct RaceArgs {
    /// Field spec: inline JSON or a path to a file containing it.
    #[arg(long)]
    pub field: String,
    /// Classes as e:(..) elements, comma separated or repeated.
    #[arg(long, required = true, num_args = 1..)]
    pub classes: Vec<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Asymptotic)]
    pub mode: ModeArg,
    /// Zero archive for --mode zeros; computed and cached when absent.
    #[arg(long)]
    pub archive: Option<PathBuf>,
    /// Archive height when computing zeros.
    #[arg(long, default_value_t = 100.0)]
    pub height: f64,
    /// Tail added to finite zero sums.
    #[arg(long, value_enum, default_value_t = TailArg::Density)]
    pub tail: TailArg,
    /// Central zero orders as label=k, e.g. 10=1.
    #[arg(long = "central", value_name = "LABEL=K")]
    pub central: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum RaceCommand {
    /// Means, variances, biases and the correlation matrix.
    Stats(RaceArgs),
    /// Density of the ordering given by --classes.
    Density {
        #[command(flatten)]
        race: RaceArgs,
        /// Points per random shift for races of four or more classes.
        #[arg(long, default_value_t = chebyshev_race::gaussian::DEFAULT_POINTS)]
        samples: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum FamilyCommand {
    /// One row per field.
    Report {
        /// Directory of field-spec files (*.json), processed in name order.
        #[arg(long, conflicts_with = "tower")]
        specs: Option<PathBuf>,
        /// Comma-separated primes; reports each prefix Q(sqrt p_1, ..., sqrt p_k).
        #[arg(long)]
        tower: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ZerosCommand {
    /// Find zeros up to a height, by conductor or for every character of a field.
    Find {
        #[arg(long, required_unless_present = "field", conflicts_with = "field")]
        q: Option<u64>,
        #[arg(long)]
        field: Option<String>,
        #[arg(long)]
        height: f64,
        #[arg(long, default_value_t = chebyshev_race::zeros::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate an archive file against a field.
    Ingest {
        #[arg(long)]
        field: String,
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub field: String,
    #[arg(long, required = true, num_args = 1..)]
    pub classes: Vec<String>,
    /// Zero archive; computed and cached at --height when absent.
    #[arg(long)]
    pub archive: Option<PathBuf>,
    /// Truncation height.
    #[arg(long, default_value_t = 100.0)]
    pub height: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct OrthantArgs {
    /// gamma:r, sigma:r:rho, or a file with one matrix row per line.
    #[arg(long)]
    pub sigma: String,
    /// Upper limits, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    /// Points per random shift.
    #[arg(long, default_value_t = chebyshev_race::gaussian::DEFAULT_POINTS)]
    pub samples: usize,
    /// Skip closed forms.
    #[arg(long)]
    pub force_mc: bool,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct CapArgs {
    #[arg(long, default_value_t = 256)]
    pub max_bits: u64,
    #[arg(long, default_value_t = 8)]
    pub block_len: usize,
    #[arg(long, default_value_t = 8)]
    pub max_doublings: u32,
}

#[derive(Subcommand, Debug)]
pub enum ConstructCommand {
    /// One block: consecutive primes above ell, then a window prime.
    PrimeStep {
        #[arg(long)]
        ell: String,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        caps: CapArgs,
    },
    /// Blocks whose last-prime ratios approach the targets in (0, 1).
    UDense {
        #[arg(long, value_delimiter = ',')]
        targets: Vec<f64>,
        #[command(flatten)]
        caps: CapArgs,
    },
    /// Blocks driving 2^N / log(p_1 ... p_N) towards each target; x or x:eps.
    BDense {
        #[arg(long, value_delimiter = ',')]
        targets: Vec<String>,
        #[command(flatten)]
        caps: CapArgs,
    },
    /// Primes with log(p_1 ... p_k) / 2^(k+1) > 2^(2k) for k <= n.
    TheoremC {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        caps: CapArgs,
    },
    /// Tower with |U| near targets in (1/2, 1) and shrinking r(G)/sqrt(log d).
    TwoMod {
        #[arg(long, value_delimiter = ',')]
        targets: Vec<f64>,
        #[command(flatten)]
        caps: CapArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(v) => {
            print!("{}", output::render(&output::rounded(v), cli.format));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
