//! Batch front end for `toeplitz-core`: configuration, command dispatch,
//! the on-disk block cache and report emission.

pub mod cache;
pub mod commands;
pub mod config;
pub mod report;
pub mod verify;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use toeplitz_core::assembly::Assembler;

pub use commands::{execute, Command, Outcome};
pub use config::RunConfig;
pub use report::{ErrorReport, Report};

/// Stable exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const NUMERICAL: i32 = 2;
    pub const VERIFICATION: i32 = 3;
}

/// Parsed command line.
#[derive(Debug, Clone)]
pub struct Options {
    pub command: Command,
    pub config: Option<PathBuf>,
    /// `None` uses every core.
    pub threads: Option<usize>,
    pub no_cache: bool,
    pub out: PathBuf,
}

/// Runs one command end to end and returns the process exit code. Reports
/// go to `<out>/<command>.json`; failures are also printed to stderr as a
/// JSON error object.
pub fn run(opts: &Options) -> i32 {
    let start = Instant::now();
    let fail = |kind: &str, code: i32, message: String| {
        let err = ErrorReport::new(opts.command, kind, code, message);
        eprintln!("{}", err.to_json());
        let _ = std::fs::create_dir_all(&opts.out);
        let _ = std::fs::write(opts.out.join(format!("{}.error.json", opts.command.name())), err.to_json());
        code
    };

    let cfg = match &opts.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => Some(c),
            Err(e) => return fail("config", exit::CONFIG, e.to_string()),
        },
        None if opts.command == Command::Info => None,
        None => return fail("config", exit::CONFIG, "--config is required for this command".into()),
    };
    if let Err(e) = std::fs::create_dir_all(&opts.out) {
        return fail("io", exit::NUMERICAL, format!("cannot create {}: {e}", opts.out.display()));
    }

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = opts.threads {
            b = b.num_threads(n.max(1));
        }
        match b.build() {
            Ok(p) => p,
            Err(e) => return fail("config", exit::CONFIG, format!("cannot start thread pool: {e}")),
        }
    };

    let outcome = pool.install(|| -> toeplitz_core::Result<(Outcome, Option<toeplitz_core::assembly::CacheStats>)> {
        let Some(cfg) = &cfg else {
            return Ok((commands::info_without_config(), None));
        };
        let mut asm = Assembler::new(cfg.quadrature);
        if !opts.no_cache {
            let dir = cache::DiskStore::location(&opts.out);
            match cache::DiskStore::new(dir) {
                Ok(store) => asm = asm.with_store(Arc::new(store)),
                Err(e) => eprintln!("warning: block cache disabled: {e}"),
            }
        }
        let out = execute(opts.command, cfg, &asm)?;
        Ok((out, Some(asm.stats())))
    });

    let (outcome, stats) = match outcome {
        Ok(o) => o,
        Err(e) if e.is_config() => return fail("config", exit::CONFIG, e.to_string()),
        Err(e) => return fail("numerical", exit::NUMERICAL, e.to_string()),
    };

    for (name, contents) in &outcome.files {
        if let Err(e) = std::fs::write(opts.out.join(name), contents) {
            return fail("io", exit::NUMERICAL, format!("cannot write {name}: {e}"));
        }
    }
    let report = Report::new(opts.command, cfg.as_ref(), &outcome, stats, start.elapsed().as_secs_f64());
    let path = opts.out.join(format!("{}.json", opts.command.name()));
    if let Err(e) = std::fs::write(&path, report.to_json()) {
        return fail("io", exit::NUMERICAL, format!("cannot write {}: {e}", path.display()));
    }
    println!("{}", report.summary_line(&path));
    if outcome.failed {
        exit::VERIFICATION
    } else {
        exit::OK
    }
}
