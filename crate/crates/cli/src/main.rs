use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use plab_core::commands::{run_files, Args, COMMANDS};

/// Exact computations on jet spaces, prolongations, Spencer cohomology and
/// Pfaffian systems.
#[derive(Parser, Debug)]
#[command(name = "plab", version, after_help = commands_help())]
struct Cli {
    /// Command to run.
    command: String,
    /// Input files: .pde systems, .pfs Pfaffian systems, .map maps.
    files: Vec<String>,
    /// Jet or symbol order.
    #[arg(long)]
    order: Option<usize>,
    /// Number of orders beyond the system order to scan.
    #[arg(long)]
    orders: Option<usize>,
    /// Point as comma separated assignments, e.g. "x=0,u=1/2".
    #[arg(long)]
    point: Option<String>,
    /// Number of prolongations.
    #[arg(long)]
    levels: Option<usize>,
    /// Seed for every sampled point and flag.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
}

fn commands_help() -> String {
    format!("Commands: {}", COMMANDS.join(", "))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let args = Args {
        command: cli.command,
        files: cli.files,
        order: cli.order,
        orders: cli.orders,
        point: cli.point,
        levels: cli.levels,
        seed: cli.seed,
        json: cli.json,
    };
    let outcome = run_files(&args);
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(outcome.output.as_bytes());
    let _ = out.flush();
    ExitCode::from(outcome.exit as u8)
}
