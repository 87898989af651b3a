use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::output::Format;

#[derive(Parser)]
#[command(
    name = "omegadist",
    version,
    about = "Limiting distributions of prime-multiplicity counting functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Densities e_m of omega_A = m via the Euler-product recursion
    Densities(DensitiesArgs),
    /// Expectation and variance of the limiting distribution
    Moments(MomentsArgs),
    /// Count omega_A values up to x and compare against the densities
    Verify(VerifyArgs),
    /// Closed-form density sum over powerful numbers f <= X
    PowerfulSum(PowerfulSumArgs),
    /// Coefficient decay diagnostic mu_m = m log m / log(1/e_m)
    Decay(DecayArgs),
    /// Generating-function value at a complex point
    GenfunEval(GenfunEvalArgs),
}

/// Exactly one of --k and --weights selects the weight sequence.
#[derive(Args)]
pub struct WeightSelector {
    /// Shortcut for --weights omega_k:K (K >= 2)
    #[arg(long, conflicts_with = "weights")]
    pub k: Option<u32>,
    /// Weight spec: omega_k:K | S | E | O | renyi |
    /// custom:a2,a3,...[;tail=zero|const:c|periodic:c1,..,cr|affine:alpha,beta]
    #[arg(long)]
    pub weights: Option<String>,
}

#[derive(Args)]
pub struct DensitiesArgs {
    #[command(flatten)]
    pub selector: WeightSelector,
    /// Render one row per k in an inclusive range "LO..HI" (table format only)
    #[arg(long = "k-range", conflicts_with_all = ["k", "weights"])]
    pub k_range: Option<String>,
    /// Largest target m
    #[arg(long = "m-max", default_value_t = 10)]
    pub m_max: usize,
    /// Truncate the Euler product at primes <= this bound
    #[arg(long = "prime-limit", default_value_t = 10_000_000)]
    pub prime_limit: u64,
    /// Working precision in decimal digits; above 15 switches to the
    /// arbitrary-precision engine
    #[arg(long, default_value_t = 15)]
    pub precision: u32,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Directory for the on-disk prime-table cache
    #[arg(long = "cache-dir")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub selector: WeightSelector,
    /// Render one row per k in an inclusive range "LO..HI" (table format only)
    #[arg(long = "k-range", conflicts_with_all = ["k", "weights"])]
    pub k_range: Option<String>,
    #[arg(long = "prime-limit", default_value_t = 10_000_000)]
    pub prime_limit: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long = "cache-dir")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub selector: WeightSelector,
    /// Count over the integers 1..=x
    #[arg(long)]
    pub x: u64,
    /// Check targets m = 0..=m-max (ignored when --m is given)
    #[arg(long = "m-max", default_value_t = 10)]
    pub m_max: usize,
    /// Check a single target m instead of a range
    #[arg(long)]
    pub m: Option<i64>,
    /// Prime bound for the reference densities (nonnegative weights)
    #[arg(long = "prime-limit", default_value_t = 10_000_000)]
    pub prime_limit: u64,
    /// Powerful-number bound for the reference (signed weights)
    #[arg(long = "X", default_value_t = 1_000_000)]
    pub x_bound: u64,
    /// Largest acceptable c_hat = |count - e_m x| / (sqrt(x) log x)
    #[arg(long = "c-hat-threshold", default_value_t = 10.0)]
    pub c_hat_threshold: f64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long = "cache-dir")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct PowerfulSumArgs {
    #[command(flatten)]
    pub selector: WeightSelector,
    /// Target value of omega_A (signed weights welcome)
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub m: i64,
    /// Truncate the sum at powerful numbers f <= X
    #[arg(long = "X", default_value_t = 1_000_000)]
    pub x_bound: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args)]
pub struct DecayArgs {
    #[command(flatten)]
    pub selector: WeightSelector,
    #[arg(long = "m-from", default_value_t = 2)]
    pub m_from: usize,
    #[arg(long = "m-to", default_value_t = 10)]
    pub m_to: usize,
    /// Working precision in decimal digits
    #[arg(long, default_value_t = 60)]
    pub precision: u32,
    #[arg(long = "prime-limit", default_value_t = 10_000_000)]
    pub prime_limit: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long = "cache-dir")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenfunEvalArgs {
    #[command(flatten)]
    pub selector: WeightSelector,
    /// Evaluation point as "re,im"; |z| <= 1 or z real
    #[arg(long, allow_hyphen_values = true)]
    pub z: String,
    #[arg(long = "prime-limit", default_value_t = 10_000_000)]
    pub prime_limit: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long = "cache-dir")]
    pub cache_dir: Option<PathBuf>,
}

impl Command {
    pub fn format(&self) -> Format {
        match self {
            Command::Densities(a) => a.format,
            Command::Moments(a) => a.format,
            Command::Verify(a) => a.format,
            Command::PowerfulSum(a) => a.format,
            Command::Decay(a) => a.format,
            Command::GenfunEval(a) => a.format,
        }
    }
}
