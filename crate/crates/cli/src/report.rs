//! Report envelopes. The payload holds only deterministic results; timing
//! and cache statistics sit beside it.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use toeplitz_core::assembly::CacheStats;

use crate::commands::{Command, Outcome};
use crate::config::RunConfig;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct CacheReport {
    pub memory_hits: usize,
    pub store_hits: usize,
    pub computed: usize,
    /// Every block came from the memo or the disk store.
    pub cache_hit: bool,
}

impl From<CacheStats> for CacheReport {
    fn from(s: CacheStats) -> Self {
        CacheReport {
            memory_hits: s.memory_hits,
            store_hits: s.store_hits,
            computed: s.computed,
            cache_hit: s.computed == 0 && s.store_hits > 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub tool_version: String,
    pub config: Value,
    pub payload: Value,
    pub warnings: Vec<String>,
    pub cache: Option<CacheReport>,
    pub wall_time_seconds: f64,
}

impl Report {
    pub fn new(
        command: Command,
        cfg: Option<&RunConfig>,
        outcome: &Outcome,
        stats: Option<CacheStats>,
        wall_time_seconds: f64,
    ) -> Self {
        Report {
            command: command.name().to_string(),
            tool_version: TOOL_VERSION.to_string(),
            config: cfg.map_or(Value::Null, RunConfig::echo),
            payload: outcome.payload.clone(),
            warnings: outcome.warnings.clone(),
            cache: stats.map(CacheReport::from),
            wall_time_seconds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn summary_line(&self, path: &Path) -> String {
        format!(
            "{}: report written to {} ({} warning(s), {:.2}s)",
            self.command,
            path.display(),
            self.warnings.len(),
            self.wall_time_seconds
        )
    }
}

/// Machine-readable failure object.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub command: String,
    pub tool_version: String,
    pub error: ErrorBody,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub kind: String,
    pub exit_code: i32,
    pub message: String,
}

impl ErrorReport {
    pub fn new(command: Command, kind: &str, exit_code: i32, message: String) -> Self {
        ErrorReport {
            command: command.name().to_string(),
            tool_version: TOOL_VERSION.to_string(),
            error: ErrorBody { kind: kind.to_string(), exit_code, message },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error reports serialize")
    }
}
