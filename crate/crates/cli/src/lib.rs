//! Configuration-driven experiment runner for `fraclb`.

pub mod config;
pub mod experiments;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fraclb::table::{fmt_float, Table};

pub use config::{ConfigError, RunConfig, EXPERIMENTS, KEYS};

/// Environment variable that overrides the directory output paths are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "FRACLB_OUTPUT_ROOT";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    /// Library error raised inside the named module.
    Module { module: &'static str, source: fraclb::Error },
    Io(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Module { module, source } => write!(f, "{module}: {source}"),
            RunError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

/// Tags a library error with the module it came from.
pub(crate) fn in_module(module: &'static str) -> impl Fn(fraclb::Error) -> RunError {
    move |source| RunError::Module { module, source }
}

/// One asserted check: passes iff `value` compares correctly against `limit`.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, pass: value < limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, pass: value >= limit }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn checks_table(&self) -> Table {
        let mut t = Table::new(&["check", "value", "limit", "verdict"]);
        for c in &self.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            t.push(vec![c.name.as_str().into(), c.value.into(), c.limit.into(), verdict.into()])
                .expect("four columns");
        }
        t
    }
}

/// Runs the configured experiment in memory.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, RunError> {
    experiments::dispatch(cfg)
}

/// Output directory: `output_dir` resolved against the override root when set.
pub fn output_dir(cfg: &RunConfig, root: Option<&Path>) -> PathBuf {
    let dir = PathBuf::from(cfg.raw("output_dir"));
    match root {
        Some(r) if dir.is_relative() => r.join(dir),
        _ => dir,
    }
}

pub fn manifest(cfg: &RunConfig, outcome: &Outcome) -> String {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut s = String::new();
    s.push_str(&format!("fraclb_version = {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("timestamp = {stamp}\n"));
    for (k, v) in cfg.entries() {
        s.push_str(&format!("{k} = {v}\n"));
    }
    let passed = outcome.checks.iter().filter(|c| c.pass).count();
    s.push_str(&format!("checks_passed = {passed}/{}\n", outcome.checks.len()));
    s.push_str(&format!("verdict = {}\n", if outcome.pass() { "PASS" } else { "FAIL" }));
    s
}

/// Writes all tables, `checks.csv` and `manifest` into `dir`.
pub fn write_outputs(cfg: &RunConfig, outcome: &Outcome, dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    for (name, table) in &outcome.tables {
        table.write(&dir.join(name)).map_err(|e| RunError::Io(e.to_string()))?;
    }
    outcome
        .checks_table()
        .write(&dir.join("checks.csv"))
        .map_err(|e| RunError::Io(e.to_string()))?;
    std::fs::write(dir.join("manifest"), manifest(cfg, outcome)).map_err(|e| RunError::Io(e.to_string()))
}

/// Parses, runs and writes; returns the output directory and the outcome.
pub fn run(config_path: &Path, root: Option<&Path>) -> Result<(PathBuf, Outcome), RunError> {
    let cfg = RunConfig::from_file(config_path)?;
    let outcome = execute(&cfg)?;
    let dir = output_dir(&cfg, root);
    write_outputs(&cfg, &outcome, &dir)?;
    Ok((dir, outcome))
}

/// Text printed by the `list` subcommand.
pub fn list_text() -> String {
    let mut s = String::from("experiment  description  [keys]\n");
    for (name, desc, keys) in EXPERIMENTS {
        s.push_str(&format!("{name}  {desc}  [{keys}]\n"));
    }
    s
}

/// One summary line per check.
pub fn summary(outcome: &Outcome) -> String {
    outcome
        .checks
        .iter()
        .map(|c| {
            format!(
                "{} {} value={} limit={}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                fmt_float(c.value),
                fmt_float(c.limit)
            )
        })
        .collect()
}
