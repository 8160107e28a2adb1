//! CSV, JSON metadata and plot files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::svg::{heatmap, scatter, Series};
use super::{Failure, MapResult, Record, SweepResult};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "model,param_json,state,engine,k,t,value,flag";

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Shortest decimal that parses back to the same `f64`.
fn number(v: f64) -> String {
    format!("{v}")
}

/// Rows as CSV text, header first.
pub fn csv_string(records: &[Record]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(','))
        .expect("in-memory write");
    for r in records {
        let value = r.value.map(number).unwrap_or_default();
        w.write_record([
            r.model.as_str(),
            r.param_json.as_str(),
            r.state.as_str(),
            r.engine.as_str(),
            &number(r.k),
            &number(r.t),
            &value,
            r.flag.as_str(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn write_csv(records: &[Record], path: &Path) -> Result<()> {
    fs::write(path, csv_string(records)).map_err(|e| io_error(path, e))
}

/// SHA-256 of the config's canonical JSON form, hex encoded.
pub fn config_hash<S: Serialize>(spec: &S) -> String {
    let bytes = serde_json::to_vec(spec).expect("specs serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Serialize)]
struct FailureEntry<'a> {
    k: f64,
    state: &'a str,
    engine: &'a str,
    message: &'a str,
}

#[derive(Serialize)]
struct Metadata<'a, S: Serialize> {
    tool: &'static str,
    version: &'static str,
    kind: &'static str,
    model: &'a str,
    config_sha256: String,
    rows: usize,
    failures: Vec<FailureEntry<'a>>,
    config: &'a S,
}

fn metadata<'a, S: Serialize>(
    kind: &'static str,
    model: &'a str,
    spec: &'a S,
    rows: usize,
    failures: &'a [Failure],
) -> String {
    let meta = Metadata {
        tool: "znh",
        version: env!("CARGO_PKG_VERSION"),
        kind,
        model,
        config_sha256: config_hash(spec),
        rows,
        failures: failures
            .iter()
            .map(|f| FailureEntry {
                k: f.k,
                state: &f.state,
                engine: &f.engine,
                message: &f.message,
            })
            .collect(),
        config: spec,
    };
    let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    text.push('\n');
    text
}

/// Paths written by [`write_sweep`] and [`write_map`].
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFiles {
    pub csv: PathBuf,
    pub plot: PathBuf,
    pub metadata: PathBuf,
}

fn write_all(dir: &Path, stem: &str, csv: String, svg: String, meta: String) -> Result<OutputFiles> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let files = OutputFiles {
        csv: dir.join(format!("{stem}.csv")),
        plot: dir.join(format!("{stem}.svg")),
        metadata: dir.join(format!("{stem}.json")),
    };
    fs::write(&files.csv, csv).map_err(|e| io_error(&files.csv, e))?;
    fs::write(&files.plot, svg).map_err(|e| io_error(&files.plot, e))?;
    fs::write(&files.metadata, meta).map_err(|e| io_error(&files.metadata, e))?;
    Ok(files)
}

/// `sweep.csv`, `sweep.svg` (scatter of value against k, one series per
/// state and engine) and `sweep.json` in `dir`.
pub fn write_sweep<S: Serialize>(result: &SweepResult, spec: &S, dir: &Path) -> Result<OutputFiles> {
    let mut series: Vec<Series> = Vec::new();
    for r in &result.records {
        let label = format!("{} / {}", r.state, r.engine);
        let idx = match series.iter().position(|s| s.label == label) {
            Some(i) => i,
            None => {
                series.push(Series {
                    label,
                    points: Vec::new(),
                });
                series.len() - 1
            }
        };
        if let Some(v) = r.value {
            series[idx].points.push((r.k, v));
        }
    }
    let title = format!("{}: survival at t = {}", result.model, number(result.t_obs));
    let svg = scatter(&title, "k = omega/omega0", "survival probability", &series);
    let meta = metadata("sweep", &result.model, spec, result.records.len(), &result.failures);
    write_all(dir, "sweep", csv_string(&result.records), svg, meta)
}

/// `map.csv`, `map.svg` (heatmap of the discrepancy) and `map.json` in `dir`.
pub fn write_map<S: Serialize>(result: &MapResult, spec: &S, dir: &Path) -> Result<OutputFiles> {
    let title = format!("{} ({}): |P_exact - P_2|", result.model, result.state);
    let times: Vec<f64> = result.times.iter().map(|t| t * result.omega0).collect();
    let svg = heatmap(
        &title,
        "omega/omega0",
        "omega0 t",
        &result.omega_ratios,
        &times,
        &result.discrepancy,
    );
    let meta = metadata("map", &result.model, spec, result.records.len(), &result.failures);
    write_all(dir, "map", csv_string(&result.records), svg, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(value: Option<f64>, flag: &str) -> Record {
        Record {
            model: "gain-loss".into(),
            param_json: r#"{"gamma":0.25,"omega":3.0}"#.into(),
            state: "plus".into(),
            engine: "exact".into(),
            k: 3.0,
            t: std::f64::consts::TAU,
            value,
            flag: flag.into(),
        }
    }

    #[test]
    fn empty_result_is_header_only() {
        assert_eq!(csv_string(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn rows_round_trip() {
        let v = 0.1 + 0.2;
        let text = csv_string(&[record(Some(v), ""), record(None, "stiffness")]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(
            lines.next(),
            Some(r#"gain-loss,"{""gamma"":0.25,""omega"":3.0}",plus,exact,3,6.283185307179586,0.30000000000000004,"#)
        );
        assert_eq!(
            lines.next(),
            Some(r#"gain-loss,"{""gamma"":0.25,""omega"":3.0}",plus,exact,3,6.283185307179586,,stiffness"#)
        );
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows[0][1].to_string(), r#"{"gamma":0.25,"omega":3.0}"#);
        assert_eq!(rows[0][6].parse::<f64>().unwrap(), v);
    }

    #[test]
    fn shortest_round_trip_numbers() {
        for v in [1e-300, 1.0 / 3.0, 123456.789, 5e-324, 1.0, 0.0] {
            assert_eq!(number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(number(1.0), "1");
        assert_eq!(number(0.5), "0.5");
    }

    #[test]
    fn hash_is_stable() {
        let a = config_hash(&vec![1, 2, 3]);
        assert_eq!(a, config_hash(&vec![1, 2, 3]));
        assert_ne!(a, config_hash(&vec![1, 2, 4]));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn unwritable_path_reports_it() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("x.csv");
        match write_csv(&[], &path) {
            Err(Error::Io { path: p, .. }) => assert_eq!(p, path),
            other => panic!("unexpected {other:?}"),
        }
    }
}
