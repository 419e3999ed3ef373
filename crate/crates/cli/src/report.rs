//! Output files and the error-to-exit-code mapping.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use evosys::weighted_time::TimeSignal;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid configuration; exit code 3.
    Config(String),
    /// A certified property does not hold; exit code 2.
    Certification(String),
    /// Output could not be written; exit code 1.
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Certification(m) => write!(f, "certification failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<evosys::Error> for CliError {
    fn from(e: evosys::Error) -> Self {
        if e.is_certification_failure() {
            CliError::Certification(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Certification(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

/// Pinned float format: 17 significant digits, scientific.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self(dir.to_path_buf()))
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.0.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn write_json<S: Serialize>(&self, name: &str, value: &S) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// Long-format field history: one row per `(step, field, index)`.
pub struct HistoryCsv {
    text: String,
}

impl HistoryCsv {
    pub fn new() -> Self {
        Self { text: "step,t,field,index,value\n".into() }
    }

    pub fn push(&mut self, name: &str, s: &TimeSignal<f64>) {
        for n in 0..s.nodes() {
            let t = fmt_f64(s.grid().time(n));
            for (i, v) in s.at(n).iter().enumerate() {
                let _ = writeln!(self.text, "{n},{t},{name},{i},{}", fmt_f64(*v));
            }
        }
    }

    pub fn finish(self) -> String {
        self.text
    }
}

impl Default for HistoryCsv {
    fn default() -> Self {
        Self::new()
    }
}

/// One named hypothesis or certification in a report.
#[derive(Clone, Debug, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Hypothesis {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}
