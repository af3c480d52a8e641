use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Result;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance carried by every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub config_sha256: String,
    #[serde(skip)]
    pub config_json: String,
}

impl Header {
    pub fn new(subcommand: &str, seed: u64, echo: &serde_json::Value) -> Self {
        let config_json = serde_json::to_string(echo).expect("json value serializes");
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            subcommand: subcommand.into(),
            seed,
            config_sha256: hex::encode(Sha256::digest(config_json.as_bytes())),
            config_json,
        }
    }

    fn csv_block(&self) -> String {
        format!(
            "# {} {}\n# subcommand: {}\n# config_sha256: {}\n# seed: {}\n# config: {}\n",
            self.tool, self.version, self.subcommand, self.config_sha256, self.seed, self.config_json
        )
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Write `header`, then the column row, then `rows`.
pub fn write_csv(path: &Path, header: &Header, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    let mut s = header.csv_block();
    s.push_str(&columns.join(","));
    s.push('\n');
    for row in rows {
        let _ = writeln!(s, "{}", row.join(","));
    }
    std::fs::write(path, s)?;
    Ok(path.to_path_buf())
}

/// `{"config": ..., "header": ..., "report": ...}` with keys sorted at every
/// level.
pub fn write_json<T: Serialize>(path: &Path, header: &Header, echo: &serde_json::Value, report: &T) -> Result<PathBuf> {
    let value = serde_json::json!({
        "config": echo,
        "header": header,
        "report": report,
    });
    // serde_json maps are ordered by key
    let mut s = serde_json::to_string_pretty(&value).expect("json value serializes");
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(path.to_path_buf())
}
