//! Command-line front end: lattice reporting, geometry synthesis, the
//! continuation solve, and residual verification, all driven by one JSON
//! config. Exit codes: 0 on success, 2 on residual or feasibility
//! failures, 1 on usage/config errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use strominger::config::load_config;
use strominger::error::PipelineError;
use strominger::pipeline;

#[derive(Parser)]
#[command(name = "strominger", version, about = "Torus-bundle Hull-Strominger workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct IoArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports and field files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Exact divisor-lattice arithmetic: b2 chain, Euler number, divisor
    /// constructions, classification labels, integrability budget table.
    Lattice(IoArgs),
    /// Build the analytic field data (W, rho, mu) from integer charges.
    Synthesize(IoArgs),
    /// Run the continuation solve; writes u.field, trace.csv and a summary.
    Solve(IoArgs),
    /// Evaluate all system residuals at the solved u in the output directory.
    Verify(IoArgs),
}

fn run(cmd: &Command) -> Result<(), PipelineError> {
    let (io, f): (&IoArgs, fn(&_, &_) -> _) = match cmd {
        Command::Lattice(io) => (io, pipeline::cmd_lattice),
        Command::Synthesize(io) => (io, pipeline::cmd_synthesize),
        Command::Solve(io) => (io, pipeline::cmd_solve),
        Command::Verify(io) => (io, pipeline::cmd_verify),
    };
    let cfg = load_config(&io.config)?;
    f(&cfg, &io.out)
}

fn main() -> ExitCode {
    // clap's default exit code for usage errors is 2, which this tool
    // reserves for residual/feasibility failures; remap usage errors to 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
