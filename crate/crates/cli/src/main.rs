use std::path::PathBuf;
use std::process::ExitCode;

use attribmkt_cli::{execute, load_config, Experiment, Overrides};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "attribmkt", version, about = "Experiments on attribute-based demand markets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; defaults are used when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Also write SVG heatmaps.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Monopoly, closed-form and iterative single-product price equilibria.
    PriceEq(RunArgs),
    /// Optimal monopoly attribute design.
    DesignMonopoly(RunArgs),
    /// Symmetric competitive design, optionally with attribute exclusivity.
    DesignCompetition(RunArgs),
    /// Best-response design simulations.
    BrSim(RunArgs),
    /// Consumer-surplus grid comparing monopoly and competition.
    WelfareGrid(RunArgs),
    /// Optimal inner-product maps for the two-consumer market.
    RhoGrid(RunArgs),
    /// Givens-rotation composition and pairwise angle recovery.
    RotationDemo(RunArgs),
}

impl Command {
    fn split(self) -> (Experiment, RunArgs) {
        match self {
            Command::PriceEq(a) => (Experiment::PriceEq, a),
            Command::DesignMonopoly(a) => (Experiment::DesignMonopoly, a),
            Command::DesignCompetition(a) => (Experiment::DesignCompetition, a),
            Command::BrSim(a) => (Experiment::BrSim, a),
            Command::WelfareGrid(a) => (Experiment::WelfareGrid, a),
            Command::RhoGrid(a) => (Experiment::RhoGrid, a),
            Command::RotationDemo(a) => (Experiment::RotationDemo, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (experiment, args) = cli.command.split();
    let overrides = Overrides {
        output_dir: args.out,
        seed: args.seed,
        svg: args.svg,
    };
    let result = load_config(experiment, args.config.as_deref(), &overrides).and_then(|cfg| execute(&cfg));
    match result {
        Ok(report) => {
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            for f in &report.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
