use clap::{Parser, Subcommand};
use insulate_core::harness::{run, Command, HarnessError, RunConfig, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

/// Thin insulating layers: reduced and thick solves, insulation
/// optimization and limit diagnostics.
#[derive(Debug, Parser)]
#[command(name = "insulate", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Output directory (defaults to `output.directory`, then `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Seed of the random fields used by `verify`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Solve the reduced Robin problem.
    SolveReduced(Args),
    /// Solve the thick-layer problem for every epsilon in the list.
    SolveThick(Args),
    /// Optimize the insulation distribution.
    Optimize(Args),
    /// Compare thick and reduced energies over the epsilon list.
    GammaSweep(Args),
    /// Run the diagnostic suite.
    Verify(Args),
    /// Report mesh statistics and the admissible layer thickness.
    MeshInfo(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::SolveReduced(a) => (Command::SolveReduced, a),
        Cmd::SolveThick(a) => (Command::SolveThick, a),
        Cmd::Optimize(a) => (Command::Optimize, a),
        Cmd::GammaSweep(a) => (Command::GammaSweep, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::MeshInfo(a) => (Command::MeshInfo, a),
    };
    let result = RunConfig::load(&args.config).and_then(|config| {
        let out = cli
            .out
            .clone()
            .or_else(|| config.output.directory.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let options = RunOptions {
            out,
            threads: cli.threads,
            seed: cli.seed,
        };
        run(command, config, &options)
    });
    match result {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
