use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use farm_pricer::mdp_poisson::SweepParam;
use farm_pricer::simulator::ServiceLaw;

#[derive(Debug, Parser)]
#[command(name = "farm-pricer", version, about = "Optimal admission prices for multi-server loss systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// System description. Flags override the `system` block of `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct SystemArgs {
    /// JSON config file with a `system` block.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of servers.
    #[arg(long)]
    pub k: Option<usize>,
    /// Arrival rate.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Per-server service rate.
    #[arg(long)]
    pub mu: Option<f64>,
    /// `exp:BETA`, `pareto:THETA[,SHAPE]` or `uniform:LO,HI`.
    #[arg(long)]
    pub valuation: Option<String>,
    /// `exp`, `deterministic`, `uniform[:LO,HI]` or `two_point:X1,P1,X2`.
    #[arg(long)]
    pub arrival: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PriceArgs {
    /// Comma-separated prices for states 0..K-1; `inf` closes a state.
    #[arg(long)]
    pub prices: Option<String>,
    /// JSON file holding `prices` (and optionally `system`), e.g. the output
    /// of another subcommand.
    #[arg(long)]
    pub from: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Vary {
    Lambda,
    Mu,
    K,
}

impl From<Vary> for SweepParam {
    fn from(v: Vary) -> Self {
        match v {
            Vary::Lambda => SweepParam::Lambda,
            Vary::Mu => SweepParam::Mu,
            Vary::K => SweepParam::K,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ServiceArg {
    Exponential,
    Deterministic,
    Uniform,
}

impl From<ServiceArg> for ServiceLaw {
    fn from(s: ServiceArg) -> Self {
        match s {
            ServiceArg::Exponential => ServiceLaw::Exponential,
            ServiceArg::Deterministic => ServiceLaw::Deterministic,
            ServiceArg::Uniform => ServiceLaw::Uniform,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal state-dependent prices under Poisson arrivals.
    SolvePoisson {
        #[command(flatten)]
        system: SystemArgs,
        /// Absolute precision on the revenue rate.
        #[arg(long)]
        precision: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Optimal state-dependent prices under renewal arrivals.
    SolveGeneral {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        precision: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Best uniform price and the bounds it gives on the optimum.
    Uniform {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Revenue rate and occupancy of a given price vector.
    Evaluate {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        prices: PriceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo estimate of revenue, blocking and occupancy.
    Simulate {
        #[command(flatten)]
        system: SystemArgs,
        /// Prices to simulate; defaults to the optimal ones.
        #[command(flatten)]
        prices: PriceArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Arrivals per replication, including a 10% warmup.
        #[arg(long, default_value_t = 1_000_000)]
        horizon: u64,
        #[arg(long, default_value_t = 20)]
        replications: usize,
        #[arg(long, value_enum, default_value_t = ServiceArg::Exponential)]
        service: ServiceArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Optimal revenue along a grid of one parameter (Poisson arrivals).
    Sweep {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, value_enum)]
        vary: Vary,
        /// Comma-separated, strictly increasing values.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        precision: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Revenue of the unlimited-server price, the best uniform price and the
    /// optimal prices.
    Compare {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        precision: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write the CSV data behind one of the standard figures.
    Figure {
        /// opt-pri-exp, lam-rev, mu-rev, serv-rev, five-servers, ten-servers
        /// or rev-vs-k.
        id: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}
