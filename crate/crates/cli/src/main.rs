//! `fjmm`: build influence graphs, simulate, check stability and rerun the
//! reference experiments from the shell.
//!
//! Exit codes: 0 ok, 1 bad input, 2 equilibrium requested on an unstable
//! model, 3 stability check says unstable.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{RunConfig, Values};
use error::{CliError, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "fjmm", version, about = "Opinion dynamics with memory and multi-hop influence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write it as an edge list (or its weight matrix).
    GenGraph {
        #[command(flatten)]
        model: ModelArgs,
        /// Write the row-stochastic weight matrix as CSV instead.
        #[arg(long)]
        matrix: bool,
    },
    /// Simulate a model; writes trajectory.csv and summary.json.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Skip the equilibrium, so unstable models can be simulated.
        #[arg(long)]
        no_equilibrium: bool,
    },
    /// Print the stability report as JSON. Exit 0 if stable, 3 if not.
    Stability {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Rerun a reference experiment and write its CSV and metadata.
    Experiment {
        /// example1, example2, example3, fig2, homogeneous-sweep,
        /// heterogeneous-sweep, or `all`.
        name: String,
        #[command(flatten)]
        model: ModelArgs,
        /// Uniform susceptibility for the homogeneous sweep.
        #[arg(long)]
        sigma: Option<f64>,
        /// Share of stubborn agents for the heterogeneous sweep.
        #[arg(long)]
        fraction: Option<f64>,
        /// Comma-separated memory weights to sweep.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Graph spec (barbell:K, cycle:N, complete:N, er:N:P, ws:N:K:P) or an
    /// edge-list file.
    #[arg(long)]
    graph: Option<String>,
    /// two-hop, two-hop-alt, inertia, memory, blend or lagged-comm. Without
    /// it the model is memoryless.
    #[arg(long)]
    use_case: Option<String>,
    /// Weight on the past: a number or a per-node file.
    #[arg(long)]
    beta: Option<Values>,
    /// Weight of W in the blend use case (the rest goes to I).
    #[arg(long)]
    alpha1: Option<f64>,
    /// Susceptibility: a number or a per-node file.
    #[arg(long)]
    lambda: Option<Values>,
    /// Fully stubborn agents (1-based, comma-separated); everyone else gets
    /// susceptibility 1.
    #[arg(long, value_delimiter = ',')]
    stubborn: Option<Vec<usize>>,
    /// `polarized` or a per-node file.
    #[arg(long)]
    innate: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (gen-graph) or directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stopping and convergence tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Number of steps to simulate.
    #[arg(long)]
    horizon: Option<usize>,
}

impl ModelArgs {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            graph: self.graph,
            use_case: self.use_case,
            beta: self.beta,
            alpha1: self.alpha1,
            lambda: self.lambda,
            stubborn: self.stubborn,
            innate: self.innate,
            seed: self.seed,
            out: self.out,
            tol: self.tol,
            horizon: self.horizon,
            ..Default::default()
        };
        Ok(flags.over(file))
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::GenGraph { model, matrix } => commands::gen_graph(&model.resolve()?, matrix),
        Command::Simulate {
            model,
            no_equilibrium,
        } => commands::simulate(&model.resolve()?, !no_equilibrium),
        Command::Stability { model } => commands::stability(&model.resolve()?),
        Command::Experiment {
            name,
            model,
            sigma,
            fraction,
            grid,
        } => {
            let mut cfg = model.resolve()?;
            cfg.sigma = sigma.or(cfg.sigma);
            cfg.stubborn_fraction = fraction.or(cfg.stubborn_fraction);
            cfg.grid = grid.or(cfg.grid);
            commands::experiment(&name, &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if let CliError::Unstable(report) = &e {
                eprintln!("{}", report.to_json());
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
