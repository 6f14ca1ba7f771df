//! Output plumbing: where results go and how numbers are printed.
//!
//! `--out` accepts the literal format names `json` and `csv` (stdout) or a
//! file path ending in `.json`/`.csv`.  JSON carries 17 significant digits
//! (the machine interface, enough to round-trip any double); CSV carries 12
//! (the human interface).  Non-finite values render as `null` in JSON.

use std::fs;
use std::path::{Path, PathBuf};

use trimoment::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// A resolved `--out` destination.
#[derive(Debug, Clone)]
pub enum Target {
    Stdout(Format),
    File(PathBuf, Format),
}

impl Target {
    pub fn format(&self) -> Format {
        match self {
            Target::Stdout(f) | Target::File(_, f) => *f,
        }
    }

    pub fn is_file(&self) -> bool {
        matches!(self, Target::File(..))
    }

    /// Sends rendered text to the destination.
    pub fn deliver(&self, text: &str) -> Result<()> {
        match self {
            Target::Stdout(_) => {
                print!("{text}");
                Ok(())
            }
            Target::File(path, _) => write_file(path, text),
        }
    }
}

pub fn parse_target(out: &str) -> Result<Target> {
    match out {
        "json" => Ok(Target::Stdout(Format::Json)),
        "csv" => Ok(Target::Stdout(Format::Csv)),
        p if p.ends_with(".json") => Ok(Target::File(PathBuf::from(p), Format::Json)),
        p if p.ends_with(".csv") => Ok(Target::File(PathBuf::from(p), Format::Csv)),
        p => Err(Error::InvalidParameter(format!(
            "--out must be 'json', 'csv', or a path ending in .json/.csv, got '{p}'"
        ))),
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| {
        Error::InvalidParameter(format!("cannot write {}: {e}", path.display()))
    })
}

/// JSON number at 17 significant digits; non-finite values become `null`.
pub fn json_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

/// CSV number at 12 significant digits.
pub fn csv_num(x: f64) -> String {
    format!("{x:.11e}")
}

fn json_str(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// `{"0": v0, "2": v2, ..}` with keys in the given order, one entry per line.
pub fn json_index_map(pairs: &[(usize, f64)]) -> String {
    if pairs.is_empty() {
        return "{}\n".into();
    }
    let body: Vec<String> = pairs
        .iter()
        .map(|(k, v)| format!("  \"{k}\": {}", json_num(*v)))
        .collect();
    format!("{{\n{}\n}}\n", body.join(",\n"))
}

/// `k,value` CSV over the same pairs.
pub fn csv_index_map(pairs: &[(usize, f64)]) -> String {
    let mut s = String::from("k,value\n");
    for (k, v) in pairs {
        s.push_str(&format!("{k},{}\n", csv_num(*v)));
    }
    s
}

/// One-line JSON array of numbers.
pub fn json_vector(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| json_num(*x)).collect();
    format!("[{}]", cells.join(", "))
}

/// JSON matrix, one row per line, indented by `indent` spaces.
pub fn json_matrix(m: &[Vec<f64>], indent: usize) -> String {
    let pad = " ".repeat(indent);
    if m.is_empty() {
        return "[]".into();
    }
    let rows: Vec<String> = m
        .iter()
        .map(|row| format!("{pad}  {}", json_vector(row)))
        .collect();
    format!("[\n{}\n{pad}]", rows.join(",\n"))
}

/// One estimate line of the simulation schema.
#[derive(Debug, Clone)]
pub struct SimRow {
    pub k: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub predicted: f64,
    pub z_score: f64,
}

/// The stable simulation CSV: `k,estimate,stderr,predicted,z_score`.
pub fn sim_rows_csv(rows: &[SimRow]) -> String {
    let mut s = String::from("k,estimate,stderr,predicted,z_score\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.k,
            csv_num(r.estimate),
            csv_num(r.stderr),
            csv_num(r.predicted),
            csv_num(r.z_score)
        ));
    }
    s
}

/// JSON array of row objects, indented by `indent` spaces.
pub fn sim_rows_json(rows: &[SimRow], indent: usize) -> String {
    let pad = " ".repeat(indent);
    if rows.is_empty() {
        return "[]".into();
    }
    let body: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{pad}  {{\"k\": {}, \"estimate\": {}, \"stderr\": {}, \"predicted\": {}, \"z_score\": {}}}",
                r.k,
                json_num(r.estimate),
                json_num(r.stderr),
                json_num(r.predicted),
                json_num(r.z_score)
            )
        })
        .collect();
    format!("[\n{}\n{pad}]", body.join(",\n"))
}

/// Wraps pre-rendered results in the experiment report envelope written to
/// JSON files: version, command, inputs echo, wall time, results.
pub fn report_json(
    command: &str,
    inputs: &[(String, String)],
    wall_secs: f64,
    results: &str,
) -> String {
    let mut s = String::from("{\n");
    s.push_str(&format!(
        "  \"version\": {},\n",
        json_str(&format!("trimoment {}", env!("CARGO_PKG_VERSION")))
    ));
    s.push_str(&format!("  \"command\": {},\n", json_str(command)));
    s.push_str("  \"inputs\": {\n");
    let body: Vec<String> = inputs
        .iter()
        .map(|(k, v)| format!("    {}: {}", json_str(k), json_str(v)))
        .collect();
    s.push_str(&body.join(",\n"));
    s.push_str("\n  },\n");
    s.push_str(&format!("  \"wall_secs\": {},\n", json_num(wall_secs)));
    s.push_str(&format!("  \"results\": {results}\n"));
    s.push_str("}\n");
    s
}
