use std::path::{Path, PathBuf};

use prnu_core::tensor_io::atomic_write;
use serde::Serialize;
use serde_json::Value;

use crate::{CliError, CliResult};

pub const TOOL: &str = "prnu";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits: enough to round-trip any f64.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Sink {
    pub dir: PathBuf,
    /// Resolved invocation minus the thread count, embedded in JSON reports.
    pub config: Value,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a Value,
    report: &'a T,
}

impl Sink {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn bytes(&self, name: &str, bytes: &[u8]) -> CliResult<()> {
        Ok(atomic_write(&self.path(name), bytes)?)
    }

    pub fn json<T: Serialize>(&self, name: &str, report: &T) -> CliResult<()> {
        let env = Envelope {
            tool: TOOL,
            version: VERSION,
            config: &self.config,
            report,
        };
        let mut text =
            serde_json::to_string_pretty(&env).map_err(|e| CliError::Input(e.to_string()))?;
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Input(e.to_string());
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
        self.bytes(name, &bytes)
    }
}

/// Reads the `report` member of a JSON file written by [`Sink::json`], or
/// the whole document when it is not wrapped.
pub fn read_report<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|source| prnu_core::Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let inner = match doc.get_mut("report") {
        Some(r) => r.take(),
        None => doc,
    };
    serde_json::from_value(inner).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Relative manifest paths are taken relative to the manifest's directory.
pub fn resolve(base: &Path, entry: &str) -> PathBuf {
    let p = Path::new(entry);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
