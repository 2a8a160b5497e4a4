use std::path::PathBuf;

use clap::Parser;
use toeplitz_spectra::{run, Command, Options};

/// Finite-truncation spectra of Toeplitz operator algebras on weighted
/// Bergman spaces of the unit ball.
#[derive(Debug, Parser)]
#[command(name = "toeplitz-spectra", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration (optional for `info`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; all cores by default.
    #[arg(long)]
    threads: Option<usize>,
    /// Bypass the on-disk block cache.
    #[arg(long)]
    no_cache: bool,
    /// Output directory for reports and side files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let code = run(&Options {
        command: cli.command,
        config: cli.config,
        threads: cli.threads,
        no_cache: cli.no_cache,
        out: cli.out,
    });
    std::process::exit(code);
}
