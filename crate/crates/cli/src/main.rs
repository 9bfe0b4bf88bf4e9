use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evnav_cli::config::ExperimentConfig;
use evnav_cli::generate::{corner_terminals, generate_instance};
use evnav_cli::instance::save_instance;
use evnav_cli::runner::{acquire_instance, preprocess, run_experiment};
use evnav_cli::{report, CliError};

/// Simulation toolkit for charging-aware long-distance EV navigation:
/// preprocess road networks into charger-to-charger feasibility graphs and
/// compare station-selection policies by cumulative regret.
#[derive(Parser)]
#[command(name = "evnav", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Experiment manifest (key = value with [section] headers).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the manifest's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic road-network instance from the [generator]
    /// section and write its nodes/edges CSV files.
    Generate(CommonOpts),
    /// Build the charger-to-charger feasibility graph and cache it as CSV.
    Preprocess(CommonOpts),
    /// Run the configured policies over all seeds, writing regret traces
    /// and posterior snapshots.
    Run {
        #[command(flatten)]
        common: CommonOpts,
        /// Override the manifest's seed list, e.g. 1,2,3.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Run only this policy (greedy, epsilon_greedy, thompson, bayes_ucb).
        #[arg(long)]
        policy: Option<String>,
    },
    /// Summarize trace files into summary.csv and regret.svg.
    Report {
        /// Directory holding trace_s*_*.csv files (and receiving the report).
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(common: &CommonOpts) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn cmd_generate(common: &CommonOpts) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let Some(gen) = &cfg.generator else {
        return Err(CliError::Config("generate requires a [generator] section".into()));
    };
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::io(format!("creating {}", cfg.output_dir.display()), e))?;
    let road = generate_instance(gen)?;
    let nodes = cfg.output_dir.join("nodes.csv");
    let edges = cfg.output_dir.join("edges.csv");
    save_instance(&road, &nodes, &edges)?;
    let (src, trg) = corner_terminals(&road);
    println!(
        "generated {} nodes ({} stations), {} directed edges",
        road.node_count(),
        road.station_ids().len(),
        road.edge_count()
    );
    println!("instance written to {} and {}", nodes.display(), edges.display());
    println!("suggested terminals: source = {src}, target = {trg}");
    Ok(())
}

fn cmd_preprocess(common: &CommonOpts) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::io(format!("creating {}", cfg.output_dir.display()), e))?;
    let road = acquire_instance(&cfg)?;
    let fg = preprocess(&cfg, &road, true)?;
    println!(
        "feasibility graph: {} stations, {} edges (usable window {} Ws)",
        fg.stations().len(),
        fg.edges().len(),
        fg.usable_window_ws()
    );
    Ok(())
}

fn cmd_run(
    common: &CommonOpts,
    seeds: &Option<Vec<u64>>,
    policy: &Option<String>,
) -> Result<(), CliError> {
    let mut cfg = load_config(common)?;
    if let Some(seeds) = seeds {
        if seeds.is_empty() {
            return Err(CliError::Config("--seeds needs at least one seed".into()));
        }
        cfg.seeds = seeds.clone();
    }
    if let Some(name) = policy {
        let kind = evnav_core::bandit::PolicyKind::parse(name)
            .ok_or_else(|| CliError::Config(format!("unknown policy {name}")))?;
        cfg.policies = vec![kind];
    }
    let outcome = run_experiment(&cfg)?;
    println!(
        "trip {} -> {} over {} stations, {} feasibility edges",
        outcome.source,
        outcome.target,
        outcome.station_count,
        outcome.feasibility_edge_count
    );
    println!(
        "wrote {} trace files to {}",
        outcome.trace_paths.len(),
        cfg.output_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(common) => cmd_generate(common),
        Command::Preprocess(common) => cmd_preprocess(common),
        Command::Run { common, seeds, policy } => cmd_run(common, seeds, policy),
        Command::Report { out } => report::report(out, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
