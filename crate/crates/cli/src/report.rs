//! Report assembly, config hashing, and CSV side files.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;

use crate::commands::{CsvRow, Outcome};
use crate::scene::Scene;

pub const REPORT_VERSION: &str = "sio-report/1";

/// Options that select what a command computes; file paths are excluded on purpose.
#[derive(Debug, Clone, Serialize)]
pub struct CommandEcho {
    pub name: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<crate::commands::Suite>,
}

#[derive(Debug, Serialize)]
struct Config<'a> {
    command: &'a CommandEcho,
    scene: &'a Scene,
}

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    version: &'static str,
    command: &'a CommandEcho,
    config_hash: String,
    verdict: &'static str,
    exit_code: i32,
    payload: &'a Value,
    /// Scene with command-line overrides applied; rerunning with it reproduces the report.
    config: Config<'a>,
}

/// Hex SHA-256 of the canonical JSON encoding of `(command, scene)`.
pub fn config_hash(command: &CommandEcho, scene: &Scene) -> String {
    let bytes = serde_json::to_vec(&Config { command, scene }).expect("config serializes");
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn render(command: &CommandEcho, scene: &Scene, outcome: &Outcome) -> String {
    let report = Report {
        version: REPORT_VERSION,
        command,
        config_hash: config_hash(command, scene),
        verdict: outcome.verdict,
        exit_code: outcome.exit_code,
        payload: &outcome.payload,
        config: Config { command, scene },
    };
    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
    s.push('\n');
    s
}

pub fn render_csv(rows: &[CsvRow]) -> String {
    rows.iter().fold(String::from("n,sigma_index,sigma_value\n"), |mut s, (n, i, v)| {
        let _ = writeln!(s, "{n},{i},{v:e}");
        s
    })
}
