//! Output tables: `# key=value` header lines followed by CSV or aligned rows.

use crate::args::{Cli, Format};
use recordlab::Estimate;
use serde_json::{Map, Value};

/// Rows of one run. Every table starts with `quantity`, its parameters, then
/// `value, abs_error, dim, seed`, and optional diagnostics.
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Estimates that stopped on their evaluation budget.
    pub unconverged: usize,
    /// `(failed, total)` for validation runs.
    pub checks: Option<(usize, usize)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Self::default() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// `quantity, params…, value, abs_error, dim, seed, extra…`.
    pub fn estimate(&mut self, quantity: &str, params: &[String], e: &Estimate, dim: usize, seed: u64, extra: &[String]) {
        if !e.converged {
            self.unconverged += 1;
        }
        let mut row = vec![quantity.to_string()];
        row.extend_from_slice(params);
        row.extend([fmt(e.value), fmt(e.abs_error), dim.to_string(), seed.to_string()]);
        row.extend_from_slice(extra);
        self.push(row);
    }
}

/// Shortest round-trip form; scientific outside [1e-4, 1e15).
pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn flatten(prefix: Option<&str>, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => flatten_map(m, out),
        Value::Null => {}
        Value::String(s) => out.push((prefix.unwrap_or("").to_string(), s.clone())),
        other => out.push((prefix.unwrap_or("").to_string(), other.to_string())),
    }
}

fn flatten_map(m: &Map<String, Value>, out: &mut Vec<(String, String)>) {
    for (k, v) in m {
        match v {
            Value::Object(_) => flatten(None, v, out),
            _ => flatten(Some(k), v, out),
        }
    }
}

/// Resolved settings as `(flag, value)` pairs, in a fixed order.
pub fn settings(cli: &Cli) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let v = serde_json::to_value(cli).expect("arguments serialize");
    flatten(None, &v["global"], &mut out);
    if let Value::Object(cmd) = &v["command"] {
        for inner in cmd.values() {
            flatten(None, inner, &mut out);
        }
    }
    // booleans are flags: drop the false ones
    out.retain(|(_, v)| v != "false");
    out.iter().map(|(k, v)| (k.replace('_', "-"), v.clone())).collect()
}

/// Command line that reproduces the run.
pub fn rerun_line(cli: &Cli) -> String {
    let mut s = format!("recordlab {}", cli.command.name());
    for (k, v) in settings(cli) {
        if v == "true" {
            s.push_str(&format!(" --{k}"));
        } else if v.chars().any(|c| c.is_whitespace() || c == '\'' || c == '"') {
            s.push_str(&format!(" --{k}='{}'", v.replace('\'', "'\\''")));
        } else {
            s.push_str(&format!(" --{k}={v}"));
        }
    }
    s
}

pub fn render(cli: &Cli, table: &Table) -> String {
    let mut out = String::new();
    out.push_str(&format!("# recordlab={}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("# command={}\n", cli.command.name()));
    for (k, v) in settings(cli) {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&format!("# rerun={}\n", rerun_line(cli)));
    match cli.global.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.columns).expect("in-memory write");
            for r in &table.rows {
                w.write_record(r).expect("in-memory write");
            }
            out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields"));
        }
        Format::Pretty => {
            let n = table.columns.len();
            let width: Vec<usize> =
                (0..n).map(|c| table.rows.iter().map(|r| r[c].chars().count()).chain([table.columns[c].len()]).max().unwrap_or(0)).collect();
            let line = |cells: &[String]| {
                let parts: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:>w$}")).collect();
                parts.join("  ").trim_end().to_string() + "\n"
            };
            out.push_str(&line(&table.columns));
            out.push_str(&line(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
            for r in &table.rows {
                out.push_str(&line(r));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt(0.2), "0.2");
        assert_eq!(fmt(1e-7), "1e-7");
        assert_eq!(fmt(0.0), "0");
        assert_eq!(fmt(f64::INFINITY), "inf");
        assert_eq!(fmt(-0.5), "-0.5");
    }
}
