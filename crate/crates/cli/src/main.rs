use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bonnet_cli::config::parse_resolution;
use bonnet_cli::{execute, CliError, Command, Overrides, RunConfig};

/// Timelike Bonnet surfaces in Lorentzian 3-space.
#[derive(Parser)]
#[command(name = "bonnetlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the principal frame, invariants and identity residuals.
    Analyze(RunArgs),
    /// Analyze, then classify the surface.
    Check(RunArgs),
    /// Check, then deform and reconstruct for each requested T0 or phi0.
    Deform(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid resolution as NxM (overrides `resolution`).
    #[arg(long, value_parser = parse_resolution)]
    resolution: Option<[usize; 2]>,
    /// Classification tolerance (overrides `tolerances.tol`).
    #[arg(long)]
    tol: Option<f64>,
    /// Comma-separated initial values of T (replaces `deformations`).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    t0: Option<Vec<f64>>,
}

fn run(cmd: Command, args: RunArgs) -> Result<(), CliError> {
    let ov = Overrides {
        out: args.out,
        resolution: args.resolution,
        tol: args.tol,
        t0: args.t0,
    };
    let cfg = RunConfig::load(&args.config)?.resolve(&ov)?;
    let result = execute(cmd, &cfg)?;
    let written = result.outputs.write_all(&cfg.output.dir)?;
    if let Some(b) = &result.report.bonnet {
        println!(
            "classification: {} (normR1 {:.3e}, normR2 {:.3e}, tol {:.3e})",
            b.classification, b.norm_r1, b.norm_r2, b.tol
        );
    }
    for d in result.report.deformations.iter().flatten() {
        println!(
            "deformation phi0 {:.6}: metricErr {:.3e}, curvErr {:.3e}, pathResidual {:.3e}",
            d.phi0, d.metric_err, d.curv_err, d.path_residual
        );
    }
    println!(
        "wrote {} files to {}",
        written.len(),
        cfg.output.dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Analyze(a) => (Command::Analyze, a),
        Cmd::Check(a) => (Command::Check, a),
        Cmd::Deform(a) => (Command::Deform, a),
    };
    match run(cmd, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bonnetlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
