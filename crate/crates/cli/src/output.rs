use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cli::Format;

/// Why a command stopped; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad invocation (status 1).
    Usage(String),
    /// Unreadable or inconsistent data (status 2).
    Data(String),
    /// The command ran but a lint threshold tripped (status 3).
    Lint(usize),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Lint(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Data(m) => write!(f, "data error: {m}"),
            Failure::Lint(n) => write!(f, "lint failed: {n} finding(s) at or above the fail threshold"),
        }
    }
}

impl From<ccbench::Error> for Failure {
    fn from(e: ccbench::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

pub type Outcome<T = ()> = std::result::Result<T, Failure>;

pub fn io_failure(path: &Path, e: impl fmt::Display) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

/// What every report starts with: enough to replay the command.
#[derive(Clone, Debug, Serialize)]
pub struct Echo {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub format: Format,
    pub config: Value,
}

impl Echo {
    pub fn new(command: &'static str, format: Format, config: Value) -> Self {
        Self {
            tool: "ccbench",
            version: env!("CARGO_PKG_VERSION"),
            command,
            format,
            config,
        }
    }

    /// `{tool, version, command, format, config, ...body}`.
    pub fn wrap(&self, body: Value) -> Value {
        let mut out = json!({
            "tool": self.tool,
            "version": self.version,
            "command": self.command,
            "format": self.format,
            "config": self.config,
        });
        if let (Value::Object(o), Value::Object(b)) = (&mut out, body) {
            o.extend(b);
        }
        out
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_failure(path, e))?;
    text.push('\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn to_bytes(&self) -> Outcome<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let bad = |e: csv::Error| Failure::Data(e.to_string());
        w.write_record(&self.header).map_err(bad)?;
        for r in &self.rows {
            w.write_record(r).map_err(bad)?;
        }
        w.into_inner().map_err(|e| Failure::Data(e.to_string()))
    }
}

pub fn companion(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

/// Writes a report as JSON, or as CSV with the full JSON report (config,
/// warnings, tags) beside it in `<out>.config.json`; to `out` or stdout.
pub fn emit(echo: &Echo, body: Value, table: Option<Table>, out: Option<&Path>) -> Outcome {
    let bytes = match (echo.format, table) {
        (Format::Csv, Some(t)) => {
            if let Some(p) = out {
                write_json(&companion(p, ".config.json"), &echo.wrap(body))?;
            }
            t.to_bytes()?
        }
        _ => {
            let mut s = serde_json::to_string_pretty(&echo.wrap(body)).expect("report is valid JSON");
            s.push('\n');
            s.into_bytes()
        }
    };
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
            }
            fs::write(p, bytes).map_err(|e| io_failure(p, e))
        }
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| Failure::Data(format!("stdout: {e}"))),
    }
}

/// Provenance stored next to an estimates or ground-truth CSV, so later
/// commands know which pipeline produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub pipeline: ccbench::imaging::Pipeline,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_id: Option<String>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub config: Value,
}

pub fn provenance_path(csv: &Path) -> PathBuf {
    csv.with_extension("provenance.json")
}

pub fn read_provenance(csv: &Path) -> Outcome<Option<Provenance>> {
    let p = provenance_path(csv);
    if !p.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&p).map_err(|e| io_failure(&p, e))?;
    serde_json::from_str(&text).map(Some).map_err(|e| io_failure(&p, e))
}

pub fn warn(message: &str) {
    eprintln!("warning: {message}");
}
