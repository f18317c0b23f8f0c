use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hinforge::config::RunConfig;
use hinforge::pipeline::{run, Mode};

/// Heterogeneous-network embedding workbench: synthetic graphs, attention
/// model training, simulated federation, influence ranking, and research
/// team identification. All outputs are plot-ready TSV plus a JSON run
/// manifest; every run is byte-reproducible for a fixed seed.
#[derive(Parser)]
#[command(name = "hinforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic planted-team graph (graph, truth, labels).
    Gen(CommonArgs),
    /// Train the embedding model and report classification metrics against
    /// the built-in baselines.
    Train(CommonArgs),
    /// Run the round-based federated simulation and emit per-round traces.
    Fedtrain(CommonArgs),
    /// Export fused node embeddings (TSV) with a label sidecar.
    Embed(CommonArgs),
    /// Attention-received influence scores, centrality baselines, and their
    /// top-K intersections.
    Influence(CommonArgs),
    /// Prefilter, identify teams, and report leaders/core/non-core members.
    Teams(CommonArgs),
    /// Identify teams and score them against a ground-truth file (NMI).
    Eval(CommonArgs),
    /// The local-epoch x batch-size sensitivity grid over the federated
    /// simulation.
    Sensitivity(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Gen(a) => (Mode::Gen, a),
        Command::Train(a) => (Mode::Train, a),
        Command::Fedtrain(a) => (Mode::FedTrain, a),
        Command::Embed(a) => (Mode::Embed, a),
        Command::Influence(a) => (Mode::Influence, a),
        Command::Teams(a) => (Mode::Teams, a),
        Command::Eval(a) => (Mode::Eval, a),
        Command::Sensitivity(a) => (Mode::Sensitivity, a),
    };
    match execute(mode, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(mode: Mode, args: CommonArgs) -> anyhow::Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output.dir = out;
    }
    run(mode, &cfg)
}
