use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use temple_lagrange::config::RunConfig;
use temple_lagrange::pipeline::{self, Stage};

#[derive(Parser)]
#[command(
    name = "temple-lagrange",
    about = "Solve scalar conservation laws through an equivalent 2x2 system \
             and recover the solution along particle paths",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Path to the run configuration (flat JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: solve, reconstruct coordinates, recover the scalar
    /// solution, plus comparison and entropy audit when the config asks.
    Run(StageArgs),
    /// Print the problem transform (orientation, shift, flux constant,
    /// region, timestep) without solving.
    TransformInfo(StageArgs),
    /// March the system solver only and write the cell snapshots.
    Solve(StageArgs),
    /// Solve, rebuild the coordinate map, and write the recovered profile.
    Recover(StageArgs),
    /// Recover and compare against the scalar reference solver.
    Compare(StageArgs),
    /// Recover and run the entropy residual monitor.
    Audit(StageArgs),
}

impl Command {
    fn split(&self) -> (Stage, &StageArgs) {
        match self {
            Command::Run(a) => (Stage::Run, a),
            Command::TransformInfo(a) => (Stage::TransformInfo, a),
            Command::Solve(a) => (Stage::Solve, a),
            Command::Recover(a) => (Stage::Recover, a),
            Command::Compare(a) => (Stage::Compare, a),
            Command::Audit(a) => (Stage::Audit, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, args) = cli.command.split();

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("validation error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let config = match RunConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("validation error: {e}");
            return ExitCode::from(2);
        }
    };

    let started = Instant::now();
    match pipeline::execute(&config, stage, args.out.as_deref()) {
        Ok(outcome) => {
            if stage == Stage::TransformInfo {
                match pipeline::to_pretty_json(&outcome.transform) {
                    Ok(json) => print!("{json}"),
                    Err(e) => {
                        eprintln!("{e}");
                        return ExitCode::from(1);
                    }
                }
            } else {
                for path in &outcome.files {
                    println!("wrote {}", path.display());
                }
                if let Some(report) = &outcome.report {
                    println!(
                        "{} steps to t = {}, max region violation {:.3e}",
                        report.steps, report.final_time, report.max_region_violation
                    );
                    for s in &report.max_entropy_residual_per_entropy {
                        println!("entropy center {}: max residual {:.3e}", s.center, s.max_residual);
                    }
                    for c in &report.l1_vs_oracle {
                        println!("L1 vs oracle at t = {}: {:.6e}", c.time, c.l1_distance);
                    }
                }
            }
            // Timing goes to stdout only; the report file stays reproducible.
            println!("completed in {:.3} s", started.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
