use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fraclb_cli::{list_text, run, summary, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(name = "fraclb", version, about = "Fractional Laplace-Beltrami experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a `key = value` configuration file.
    Run { config: PathBuf },
    /// List experiments with descriptions and the keys they read.
    List,
    /// Print the library version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            print!("{}", list_text());
            ExitCode::SUCCESS
        }
        Command::Version => {
            println!("fraclb {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Run { config } => {
            let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from);
            match run(&config, root.as_deref()) {
                Ok((dir, outcome)) => {
                    print!("{}", summary(&outcome));
                    println!("{} -> {}", if outcome.pass() { "PASS" } else { "FAIL" }, dir.display());
                    ExitCode::from(if outcome.pass() { 0 } else { 1 })
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
