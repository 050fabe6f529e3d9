use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;
mod spec;

use config::Resolver;
use error::CliError;
use output::Format;

/// Equilibria, optimal rewards and convergence experiments for rank-based races.
#[derive(Parser)]
#[command(name = "rankrace", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Io {
    /// JSON object of parameters; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `csv` or `json`; defaults to the output extension, else CSV.
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Args, Clone, Default)]
pub struct RewardArgs {
    /// `power`, `cutoff` or `staircase`.
    #[arg(long)]
    pub reward: Option<String>,
    /// Budget `B`.
    #[arg(long = "B")]
    pub budget: Option<f64>,
    /// Cut-off rank `α`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Power exponent `q`.
    #[arg(long)]
    pub q: Option<f64>,
    /// Staircase breakpoints `0,r1,..,1`.
    #[arg(long)]
    pub breaks: Option<String>,
    /// Staircase levels, one per step.
    #[arg(long)]
    pub levels: Option<String>,
}

#[derive(Args, Clone, Default)]
pub struct CostArgs {
    /// `c`, `affine:a,s`, `steps:grid;values` or `table:grid;values`.
    #[arg(long)]
    pub cost: Option<String>,
}

#[derive(Args, Clone, Default)]
pub struct PopulationArgs {
    /// Explicit rewards `R_1,..,R_N`.
    #[arg(long)]
    pub rewards: Option<String>,
    /// Number of players when rewards come from a mean-field scheme.
    #[arg(long = "N")]
    pub players: Option<usize>,
    /// `sampling` or `average`.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Explicit costs `c_0,..,c_{N-1}` (or one constant); default `c(n/N)`.
    #[arg(long)]
    pub costs: Option<String>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Mean-field equilibrium for a reward scheme.
    MfEquilibrium {
        #[command(flatten)]
        reward: RewardArgs,
        #[command(flatten)]
        cost: CostArgs,
        /// Number of rank intervals in the output grid.
        #[arg(long)]
        grid: Option<usize>,
        #[command(flatten)]
        io: Io,
    },
    /// Optimal mean-field reward scheme for a target proportion.
    MfPrincipal {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long = "B")]
        budget: Option<f64>,
        #[command(flatten)]
        cost: CostArgs,
        #[arg(long)]
        grid: Option<usize>,
        #[command(flatten)]
        io: Io,
    },
    /// Smallest budget reaching a proportion by a given time.
    MinimalBudget {
        #[arg(long = "T")]
        time: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        cost: CostArgs,
        #[command(flatten)]
        io: Io,
    },
    /// N-player equilibrium by backward recursion.
    NplayerSolve {
        #[command(flatten)]
        population: PopulationArgs,
        #[command(flatten)]
        reward: RewardArgs,
        #[command(flatten)]
        cost: CostArgs,
        #[arg(long)]
        n0: Option<usize>,
        #[command(flatten)]
        io: Io,
    },
    /// Monte Carlo completion times of the N-player equilibrium.
    NplayerSimulate {
        #[command(flatten)]
        population: PopulationArgs,
        #[command(flatten)]
        reward: RewardArgs,
        #[command(flatten)]
        cost: CostArgs,
        #[arg(long)]
        n0: Option<usize>,
        #[arg(long)]
        paths: Option<usize>,
        /// Seed; defaults to RACE_SEED, else 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write every sampled completion time.
        #[arg(long)]
        samples: bool,
        #[command(flatten)]
        io: Io,
    },
    /// Optimal N-player reward vector.
    NplayerPrincipal {
        #[arg(long = "N")]
        players: Option<usize>,
        #[arg(long)]
        n0: Option<usize>,
        #[arg(long = "B")]
        budget: Option<f64>,
        #[command(flatten)]
        cost: CostArgs,
        #[arg(long)]
        costs: Option<String>,
        /// Cross-check against direct numerical minimization.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        io: Io,
    },
    /// Closed-form N-player optimum against direct minimization on small instances.
    OracleCheck {
        /// Largest population checked.
        #[arg(long = "max-N")]
        max_players: Option<usize>,
        #[arg(long = "B")]
        budget: Option<f64>,
        #[command(flatten)]
        io: Io,
    },
    /// N-player rewards from a mean-field scheme.
    Discretize {
        #[command(flatten)]
        reward: RewardArgs,
        #[arg(long = "N")]
        players: Option<usize>,
        #[arg(long)]
        scheme: Option<String>,
        #[command(flatten)]
        io: Io,
    },
    /// Convergence of N-player values and efforts to the mean field.
    ConvergeValue {
        #[command(flatten)]
        reward: RewardArgs,
        #[command(flatten)]
        cost: CostArgs,
        /// `a:b` dyadic ladder or a list.
        #[arg(long = "Ns")]
        ns: Option<String>,
        #[arg(long)]
        scheme: Option<String>,
        #[command(flatten)]
        io: Io,
    },
    /// Convergence of the N-player optimum to the mean-field optimum.
    ConvergePrincipal {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long = "B")]
        budget: Option<f64>,
        #[command(flatten)]
        cost: CostArgs,
        #[arg(long = "Ns")]
        ns: Option<String>,
        #[command(flatten)]
        io: Io,
    },
    /// Suboptimality of the sampled mean-field optimum in the N-player game.
    EpsOptimal {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long = "B")]
        budget: Option<f64>,
        #[command(flatten)]
        cost: CostArgs,
        #[arg(long = "Ns")]
        ns: Option<String>,
        #[command(flatten)]
        io: Io,
    },
    /// Optimal expected completion time against population size.
    SizeEffect {
        /// `fixed-proportion` or `fixed-count`.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long = "B")]
        budget: Option<f64>,
        #[arg(long)]
        n0: Option<usize>,
        /// Total budget `K = N B`.
        #[arg(long = "K")]
        total: Option<f64>,
        /// Constant cost.
        #[arg(long)]
        cost: Option<f64>,
        #[arg(long = "Ns")]
        ns: Option<String>,
        #[command(flatten)]
        io: Io,
    },
    /// Writes the data behind all figures into a directory.
    Figures {
        #[arg(long = "out-dir")]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        io: Io,
    },
}

impl Command {
    fn io(&self) -> &Io {
        match self {
            Command::MfEquilibrium { io, .. }
            | Command::MfPrincipal { io, .. }
            | Command::MinimalBudget { io, .. }
            | Command::NplayerSolve { io, .. }
            | Command::NplayerSimulate { io, .. }
            | Command::NplayerPrincipal { io, .. }
            | Command::OracleCheck { io, .. }
            | Command::Discretize { io, .. }
            | Command::ConvergeValue { io, .. }
            | Command::ConvergePrincipal { io, .. }
            | Command::EpsOptimal { io, .. }
            | Command::SizeEffect { io, .. }
            | Command::Figures { io, .. } => io,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let io = cli.command.io().clone();
    let mut res = Resolver::load(io.config.as_deref())?;
    if let Command::Figures { out_dir, .. } = cli.command {
        let dir = res.req("out_dir", out_dir)?;
        return commands::figures(&dir);
    }
    let format = Format::resolve(io.format.as_deref(), io.out.as_deref())?;
    let mut report = commands::dispatch(cli.command, &mut res)?;
    report.config = res.echo().clone();
    report.write(io.out.as_deref(), format)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rankrace: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
