//! Artifact writing: CSV with `#` metadata lines, JSON with the same
//! metadata embedded, optional gnuplot script. Every file is written to a
//! temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use twostage::{TIME_UNIT, VERSION};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    version: &'a str,
    time_unit: &'a str,
    config: &'a RunConfig,
    result: &'a T,
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp-{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn metadata_lines(config: &RunConfig) -> Result<String, CliError> {
    Ok(format!(
        "# twostage {VERSION}\n# time_unit: {TIME_UNIT}\n# config: {}\n",
        serde_json::to_string(config).map_err(|e| CliError::Config(e.to_string()))?
    ))
}

/// A table destined for CSV.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Shortest round-tripping decimal; empty for missing values.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        String::new()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_bytes(config: &RunConfig, table: &Table) -> Result<Vec<u8>, CliError> {
    let mut out = metadata_lines(config)?.into_bytes();
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Config(e.to_string());
    w.write_record(&table.header).map_err(err)?;
    for row in &table.rows {
        w.write_record(row).map_err(err)?;
    }
    out.extend(w.into_inner().map_err(|e| CliError::Config(e.to_string()))?);
    Ok(out)
}

pub fn json_bytes<T: Serialize>(config: &RunConfig, result: &T) -> Result<Vec<u8>, CliError> {
    let artifact = Artifact { version: VERSION, time_unit: TIME_UNIT, config, result };
    let mut s = serde_json::to_string_pretty(&artifact).map_err(|e| CliError::Config(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn gnuplot_script(csv: &Path, table: &Table, log_y: bool) -> String {
    let name = csv.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut s = String::from("set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n");
    s.push_str(&format!("set xlabel '{}'\n", table.header[0]));
    if log_y {
        s.push_str("set logscale y\nset format y '%.0e'\n");
    }
    let cols: Vec<String> = (2..=table.header.len())
        .map(|c| {
            let y = if log_y { format!("(abs(${c}))") } else { c.to_string() };
            format!("'{name}' using 1:{y} with linespoints")
        })
        .collect();
    s.push_str(&format!("plot {}\n", cols.join(", \\\n     ")));
    s
}

/// Written files, for reporting.
#[derive(Debug)]
pub struct Written {
    pub paths: Vec<PathBuf>,
}

pub fn emit<T: Serialize>(
    config: &RunConfig,
    table: Option<&Table>,
    result: &T,
    log_y: bool,
) -> Result<Written, CliError> {
    let mut paths = Vec::new();
    if let Some(table) = table {
        let csv = with_extension(&config.out, "csv");
        write_atomic(&csv, &csv_bytes(config, table)?)?;
        if config.gnuplot {
            let gp = with_extension(&config.out, "gp");
            write_atomic(&gp, gnuplot_script(&csv, table, log_y).as_bytes())?;
            paths.push(gp);
        }
        paths.push(csv);
    }
    let json = with_extension(&config.out, "json");
    write_atomic(&json, &json_bytes(config, result)?)?;
    paths.push(json);
    Ok(Written { paths })
}
