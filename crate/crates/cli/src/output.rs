use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dnls_core::dynamics::DiagnosticsRow;
use dnls_core::LatticeState;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const DIAGNOSTICS_HEADER: &str = "t,charge,energy,l21_sq,tail_M,weighted_norm,J,Lambda";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.charge),
            fmt_f64(r.energy),
            fmt_f64(r.l21_sq),
            opt(r.tail_mass),
            opt(r.weighted_norm),
            fmt_f64(r.j),
            fmt_f64(r.lambda),
        );
    }
    out
}

pub fn snapshots_jsonl(states: &[LatticeState]) -> String {
    let mut out = String::new();
    for s in states {
        out.push_str(&serde_json::to_string(s).expect("state serializes"));
        out.push('\n');
    }
    out
}

pub fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    write(path, &text)
}

/// Quotes a CSV field when needed.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
