//! Experiment reports and their serialized forms.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A pass/fail check of `observed` against a declared threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub threshold: f64,
    /// Human-readable rule, e.g. `observed >= threshold`.
    pub rule: String,
}

impl Verdict {
    pub fn at_least(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Verdict {
            name: name.into(),
            passed: observed >= threshold,
            observed,
            threshold,
            rule: "observed >= threshold".into(),
        }
    }

    pub fn at_most(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Verdict {
            name: name.into(),
            passed: observed <= threshold,
            observed,
            threshold,
            rule: "observed <= threshold".into(),
        }
    }

    /// `|observed - target| <= tolerance`; `observed` is stored as the deviation.
    pub fn within(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        let dev = (value - target).abs();
        Verdict {
            name: name.into(),
            passed: dev <= tolerance,
            observed: dev,
            threshold: tolerance,
            rule: format!("|{value} - {target}| <= threshold"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub version: String,
    pub master_seed: u64,
    /// One JSON object per trial (or per Monte Carlo chunk), in index order.
    pub records: Vec<serde_json::Value>,
    pub aggregates: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    /// Column names of [`Self::table`].
    pub table_columns: [String; 2],
    /// Plot-ready `x y` rows.
    pub table: Vec<[f64; 2]>,
    pub wall_clock_secs: f64,
}

impl ExperimentReport {
    pub(crate) fn new(config: &ExperimentConfig) -> Self {
        ExperimentReport {
            config: config.clone(),
            version: VERSION.to_string(),
            master_seed: config.seed,
            records: Vec::new(),
            aggregates: BTreeMap::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            table_columns: ["x".into(), "y".into()],
            table: Vec::new(),
            wall_clock_secs: 0.0,
        }
    }

    pub(crate) fn push_records<T: Serialize>(&mut self, records: &[T]) -> Result<()> {
        for r in records {
            self.records.push(serde_json::to_value(r).map_err(json_err)?);
        }
        Ok(())
    }

    pub(crate) fn set(&mut self, key: impl Into<String>, value: f64) {
        self.aggregates.insert(key.into(), value);
    }

    pub fn aggregate(&self, key: &str) -> Option<f64> {
        self.aggregates.get(key).copied()
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    /// True when every declared verdict passed (vacuously true with none).
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// Per-trial records, one JSON object per line.
    pub fn records_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }

    /// Per-trial records as CSV. Columns are the record keys in sorted order;
    /// absent values and nulls are empty cells.
    pub fn records_csv(&self) -> String {
        let mut columns: Vec<String> = Vec::new();
        for r in &self.records {
            if let serde_json::Value::Object(map) = r {
                for k in map.keys() {
                    if !columns.contains(k) {
                        columns.push(k.clone());
                    }
                }
            }
        }
        columns.sort();
        let mut out = columns.join(",");
        out.push('\n');
        for r in &self.records {
            let cells: Vec<String> = columns
                .iter()
                .map(|c| match r.get(c) {
                    None | Some(serde_json::Value::Null) => String::new(),
                    Some(serde_json::Value::String(s)) => csv_escape(s),
                    Some(v) => csv_escape(&v.to_string()),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Aggregates and verdicts as `kind,name,value,threshold,passed` rows.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("kind,name,value,threshold,passed\n");
        for (k, v) in &self.aggregates {
            let _ = writeln!(out, "aggregate,{},{},,", csv_escape(k), v);
        }
        for v in &self.verdicts {
            let _ = writeln!(
                out,
                "verdict,{},{},{},{}",
                csv_escape(&v.name),
                v.observed,
                v.threshold,
                v.passed
            );
        }
        out
    }

    /// The `x y` table with a `# x y` header line.
    pub fn table_text(&self) -> String {
        let mut out = format!("# {} {}\n", self.table_columns[0], self.table_columns[1]);
        for [x, y] in &self.table {
            let _ = writeln!(out, "{x} {y}");
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(json_err)
    }

    /// Short human-readable summary.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{} n={} r={} ell={} seed={} ({:.2}s, v{})\n",
            self.config.kind.name(),
            self.config.params.n(),
            self.config.params.r(),
            self.config.params.ell(),
            self.master_seed,
            self.wall_clock_secs,
            self.version
        );
        for (k, v) in &self.aggregates {
            let _ = writeln!(out, "  {k} = {v}");
        }
        for v in &self.verdicts {
            let _ = writeln!(
                out,
                "  [{}] {}: observed {} vs threshold {} ({})",
                if v.passed { "PASS" } else { "FAIL" },
                v.name,
                v.observed,
                v.threshold,
                v.rule
            );
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        out
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub(crate) fn json_err(e: serde_json::Error) -> Error {
    Error::Io(e.to_string())
}
