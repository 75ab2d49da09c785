//! `tomnet` — replay coded team transcripts through networked Bayesian
//! belief agents, fit model parameters, compute theory-of-mind measures, and
//! simulate counterfactual interventions.

mod cmd;
mod config;
mod errors;

use clap::{Parser, Subcommand};

use errors::CliResult;

#[derive(Parser)]
#[command(
    name = "tomnet",
    version,
    about = "Networked Bayesian belief agents for team communication transcripts",
    after_help = "Exit codes: 0 ok, 2 input/schema error, 3 numerical-invariant violation, 4 network error."
)]
struct Cli {
    /// Worker threads (0 = all cores). Results are identical for any value.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the catalog of connected five-node topologies with betweenness
    Topologies(cmd::topologies::TopologiesArgs),
    /// Generate a synthetic dataset with scripted communicators
    Simulate(cmd::simulate::SimulateArgs),
    /// Replay a dataset under one model configuration and score it
    Replay(cmd::replay::ReplayArgs),
    /// Grid-search maximum-likelihood fit of weights and alpha_d
    Fit(cmd::fit::FitArgs),
    /// Per-individual alpha_d estimates at fixed weights
    Alpha(cmd::alpha::AlphaArgs),
    /// Message-level theory-of-mind measures (alpha_C, temporal profiles)
    Measure(cmd::measure::MeasureArgs),
    /// Counterfactual KL-guided interventions vs a random baseline
    Intervene(cmd::intervene::InterveneArgs),
    /// Download a raw dataset archive and record its content hash
    Fetch(cmd::fetch::FetchArgs),
    /// Convert a raw dataset into the canonical four-CSV layout
    Convert(cmd::convert::ConvertArgs),
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Topologies(args) => cmd::topologies::run(args),
        Command::Simulate(args) => cmd::simulate::run(args),
        Command::Replay(args) => cmd::replay::run(args),
        Command::Fit(args) => cmd::fit::run(args),
        Command::Alpha(args) => cmd::alpha::run(args),
        Command::Measure(args) => cmd::measure::run(args),
        Command::Intervene(args) => cmd::intervene::run(args),
        Command::Fetch(args) => cmd::fetch::run(args),
        Command::Convert(args) => cmd::convert::run(args),
    }
}

fn main() {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .expect("thread pool");
    let result = pool.install(|| dispatch(cli));
    if let Err(e) = result {
        let code = e.exit_code();
        eprintln!("{}", serde_json::json!({ "error": e.to_string(), "exit_code": code }));
        std::process::exit(code);
    }
}
