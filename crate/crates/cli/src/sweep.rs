//! Parameter grids: one experiment per grid point, one CSV row per point.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use dnls_core::random::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::{check_keys, suggest, ExperimentConfig, FIELDS};
use crate::error::{CliError, CliResult};
use crate::output::{csv_field, fmt_f64, write};
use crate::run::{run, Status};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub field: String,
    pub values: Vec<Value>,
}

/// `base` is an experiment config; `axes` vary its fields, first axis slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub base: Map<String, Value>,
    #[serde(default)]
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn from_json_str(text: &str) -> CliResult<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
        check_keys(&value, &["base", "axes"])?;
        let grid: GridSpec = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        check_keys(&Value::Object(grid.base.clone()), FIELDS)?;
        for axis in &grid.axes {
            if !FIELDS.contains(&axis.field.as_str()) || axis.field == "kind" {
                let hint = suggest(&axis.field, FIELDS)
                    .map(|s| format!(" (did you mean \"{s}\"?)"))
                    .unwrap_or_default();
                return Err(CliError::Config(format!("axis over unknown field \"{}\"{hint}", axis.field)));
            }
        }
        Ok(grid)
    }

    /// No axes, or an axis without values, gives no points.
    pub fn points(&self) -> Vec<Vec<Value>> {
        if self.axes.is_empty() || self.axes.iter().any(|a| a.values.is_empty()) {
            return Vec::new();
        }
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(v.clone());
                        q
                    })
                })
                .collect();
        }
        points
    }

    fn base_seed(&self) -> u64 {
        self.base.get("seed").and_then(Value::as_u64).unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub csv: String,
    pub csv_path: PathBuf,
    pub rows: usize,
    pub failed: usize,
}

impl SweepOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            2
        } else {
            0
        }
    }
}

struct PointResult {
    status: String,
    exit_code: i32,
    error: String,
    metrics: BTreeMap<String, String>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) if n.is_f64() => fmt_f64(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::String(s) => csv_field(s),
        other => csv_field(&other.to_string()),
    }
}

/// Scalar fields of the report, nested objects one level deep as `a.b`.
fn flatten(report: &Value) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let Some(map) = report.as_object() else {
        return out;
    };
    for (key, value) in map {
        match value {
            Value::Array(_) => {}
            Value::Object(inner) => {
                for (k, v) in inner {
                    if !matches!(v, Value::Array(_) | Value::Object(_)) {
                        out.insert(format!("{key}.{k}"), cell(v));
                    }
                }
            }
            v => {
                out.insert(key.clone(), cell(v));
            }
        }
    }
    out
}

fn run_point(grid: &GridSpec, values: &[Value], seed: u64, dir: PathBuf) -> PointResult {
    let mut object = grid.base.clone();
    for (axis, v) in grid.axes.iter().zip(values) {
        object.insert(axis.field.clone(), v.clone());
    }
    object.insert("seed".into(), Value::from(seed));
    object.insert("output_dir".into(), Value::from(dir.display().to_string()));
    let text = Value::Object(object).to_string();
    let result = ExperimentConfig::from_json_str(&text).and_then(|c| run(&c));
    match result {
        Ok(outcome) => PointResult {
            status: serde_json::to_value(outcome.status)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            exit_code: outcome.exit_code(),
            error: outcome
                .report
                .get("error")
                .and_then(Value::as_str)
                .map(csv_field)
                .unwrap_or_default(),
            metrics: if outcome.status == Status::Invalid || outcome.status == Status::NumericalError {
                BTreeMap::new()
            } else {
                flatten(&outcome.report)
            },
        },
        Err(err) => PointResult {
            status: "invalid".into(),
            exit_code: err.exit_code(),
            error: csv_field(&err.to_string()),
            metrics: BTreeMap::new(),
        },
    }
}

/// Runs every grid point on the current rayon pool and writes
/// `sweep.csv` plus one artifact directory per point under `out`.
pub fn sweep(grid: &GridSpec, out: &Path) -> CliResult<SweepOutcome> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let points = grid.points();
    let base_seed = grid.base_seed();
    let results: Vec<PointResult> = points
        .par_iter()
        .enumerate()
        .map(|(i, values)| {
            let seed = derive_seed(base_seed, i as u64);
            run_point(grid, values, seed, out.join(format!("point_{i:04}")))
        })
        .collect();

    let metric_names: BTreeSet<&String> = results.iter().flat_map(|r| r.metrics.keys()).collect();
    let mut header: Vec<String> = vec!["index".into(), "seed".into()];
    header.extend(grid.axes.iter().map(|a| csv_field(&a.field)));
    header.extend(["status", "exit_code", "error"].map(String::from));
    header.extend(metric_names.iter().map(|k| csv_field(k)));

    let mut csv = header.join(",");
    csv.push('\n');
    for (i, (values, r)) in points.iter().zip(&results).enumerate() {
        let mut row: Vec<String> = vec![i.to_string(), derive_seed(base_seed, i as u64).to_string()];
        row.extend(values.iter().map(cell));
        row.extend([r.status.clone(), r.exit_code.to_string(), r.error.clone()]);
        row.extend(metric_names.iter().map(|k| r.metrics.get(*k).cloned().unwrap_or_default()));
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    let csv_path = out.join("sweep.csv");
    write(&csv_path, &csv)?;
    let failed = results.iter().filter(|r| r.exit_code != 0).count();
    Ok(SweepOutcome { csv, csv_path, rows: points.len(), failed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(text: &str) -> GridSpec {
        GridSpec::from_json_str(text).unwrap()
    }

    #[test]
    fn points_are_in_row_major_order() {
        let g = grid(
            r#"{"base":{"kind":"simulate"},"axes":[{"field":"delta","values":[0.1,0.2]},{"field":"sigma","values":[1,2,3]}]}"#,
        );
        let p = g.points();
        assert_eq!(p.len(), 6);
        assert_eq!(p[1], vec![Value::from(0.1), Value::from(2)]);
        assert_eq!(p[3], vec![Value::from(0.2), Value::from(1)]);
    }

    #[test]
    fn empty_axes_give_no_points() {
        assert!(grid(r#"{"base":{"kind":"simulate"},"axes":[]}"#).points().is_empty());
        assert!(grid(r#"{"base":{"kind":"simulate"},"axes":[{"field":"delta","values":[]}]}"#)
            .points()
            .is_empty());
    }

    #[test]
    fn unknown_axis_is_rejected() {
        let err = GridSpec::from_json_str(r#"{"base":{"kind":"simulate"},"axes":[{"field":"detla","values":[1]}]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("delta"), "{err}");
    }

    #[test]
    fn flatten_keeps_scalars() {
        let v = serde_json::json!({"a": 1.5, "b": {"c": true, "d": [1]}, "e": [1, 2], "f": null});
        let f = flatten(&v);
        assert_eq!(f.keys().collect::<Vec<_>>(), vec!["a", "b.c", "f"]);
        assert_eq!(f["f"], "");
    }
}
