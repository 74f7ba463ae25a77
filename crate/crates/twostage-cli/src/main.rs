//! `twostage`: simulations, sweeps, fits and predictions for two-stage
//! purity decay, emitted as CSV/JSON artifacts.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::config::{Command, RunArgs, RunConfig};

#[derive(Parser)]
#[command(name = "twostage", version, about = "Two-stage purity decay in local quantum circuits")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Evolve a free-boundary domain wall and fit both stages.
    Simulate(RunArgs),
    /// Resummed magnon rate across a grid of a_z.
    SweepAz(RunArgs),
    /// Closed-form rates and scenario.
    Predict(RunArgs),
    /// Light-cone channel of a fixed Floquet gate.
    Channel(RunArgs),
    /// Irreducible-diagram resummation of a series or magnon table.
    Resum(RunArgs),
    /// Exact small-system checks of a fixed Floquet gate.
    Exact(RunArgs),
    /// Re-run the configuration embedded in an artifact (or a bare config).
    Replay {
        file: PathBuf,
        /// Write to this prefix instead of the recorded one.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl From<twostage::Error> for CliError {
    fn from(e: twostage::Error) -> Self {
        match e {
            twostage::Error::Config(m) => CliError::Config(m),
            twostage::Error::Numerical(m) => CliError::Numerical(m),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

fn load_config(file: &PathBuf) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(file).map_err(|e| CliError::Config(format!("{}: {e}", file.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let config = value.get("config").cloned().unwrap_or(value);
    serde_json::from_value(config).map_err(|e| CliError::Config(format!("not a run configuration: {e}")))
}

fn resolve(sub: Sub) -> Result<RunConfig, CliError> {
    match sub {
        Sub::Simulate(a) => a.resolve(Command::Simulate),
        Sub::SweepAz(a) => a.resolve(Command::SweepAz),
        Sub::Predict(a) => a.resolve(Command::Predict),
        Sub::Channel(a) => a.resolve(Command::Channel),
        Sub::Resum(a) => a.resolve(Command::Resum),
        Sub::Exact(a) => a.resolve(Command::Exact),
        Sub::Replay { file, out } => {
            let mut c = load_config(&file)?;
            if let Some(out) = out {
                c.out = out;
            }
            Ok(c)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match resolve(cli.command).and_then(|c| commands::run(&c)) {
        Ok(written) => {
            for p in written.paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("twostage: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(argv: &[&str]) -> Result<RunConfig, CliError> {
        resolve(Cli::try_parse_from(std::iter::once("twostage").chain(argv.iter().copied())).unwrap().command)
    }

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("twostage-cli-{}-{name}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn read(paths: &[PathBuf]) -> Vec<Vec<u8>> {
        paths.iter().map(|p| std::fs::read(p).unwrap()).collect()
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = config(&["simulate", "--family", "xyz", "--az", "0.3", "--L", "10", "--window1", "1:4"]).unwrap();
        assert_eq!((c.t_max, c.x0), (Some(30), Some(5)));
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn defaults_are_recorded() {
        let c = config(&["sweep-az"]).unwrap();
        assert_eq!((c.l, c.order, c.az_grid.len()), (Some(16), Some(15), 11));
        let c = config(&["exact", "--az", "0.5", "--mode", "reverse", "--L", "8"]).unwrap();
        assert_eq!(c.t_max, Some(7));
    }

    #[test]
    fn bad_input_maps_to_config_exit_code() {
        let e = config(&["simulate", "--family", "xyz", "--L", "8"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = config(&["predict", "--family", "xyz", "--az", "1.5"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = config(&["simulate", "--family", "haar", "--L", "8", "--window1", "5:2"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let c = config(&["simulate", "--family", "haar", "--L", "5"]).unwrap();
        assert_eq!(commands::run(&c).unwrap_err().exit_code(), 2);
        assert_eq!(CliError::from(twostage::Error::Numerical("x".into())).exit_code(), 3);
    }

    #[test]
    fn artifacts_carry_metadata_and_are_deterministic() {
        let dir = scratch("det");
        let out = dir.join("sim");
        let argv = ["simulate", "--family", "haar", "--L", "8", "--T", "16", "--gnuplot", "-o", out.to_str().unwrap()];
        let c = config(&argv).unwrap();
        let first = commands::run(&c).unwrap().paths;
        assert_eq!(first.len(), 3);
        let bytes = read(&first);
        let again = read(&commands::run(&c).unwrap().paths);
        assert_eq!(bytes, again);

        let csv = String::from_utf8(std::fs::read(out.with_extension("csv")).unwrap()).unwrap();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("# twostage "));
        assert!(lines.next().unwrap().starts_with("# time_unit: "));
        assert!(lines.next().unwrap().starts_with("# config: {"));
        assert_eq!(lines.next(), Some("t,delta_z"));

        let json: Value = serde_json::from_slice(&std::fs::read(out.with_extension("json")).unwrap()).unwrap();
        assert_eq!(json["version"], twostage::VERSION);
        assert!(json["result"]["first_stage"]["rate"].as_f64().unwrap() > 0.0);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn replay_reproduces_the_artifacts() {
        let dir = scratch("replay");
        let out = dir.join("pred");
        let c = config(&["predict", "--family", "xyz", "--az", "0.7", "--bc", "periodic", "-o", out.to_str().unwrap()])
            .unwrap();
        let original = read(&commands::run(&c).unwrap().paths);
        let json = out.with_extension("json");
        let replayed = load_config(&json).unwrap();
        assert_eq!(replayed, c);
        assert_eq!(read(&commands::run(&replayed).unwrap().paths), original);

        let bare = dir.join("bare.json");
        std::fs::write(&bare, serde_json::to_vec(&c).unwrap()).unwrap();
        assert_eq!(load_config(&bare).unwrap(), c);
        std::fs::write(&bare, b"{\"nope\": 1}").unwrap();
        assert_eq!(load_config(&bare).unwrap_err().exit_code(), 2);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn resum_reads_series_files() {
        let dir = scratch("resum");
        let input = dir.join("series.csv");
        // Z(t) = 2^{-t}: a single irreducible piece, rate exactly 1 bit.
        let rows: String = (0..10).map(|t| format!("{t},{}\n", 0.5f64.powi(t))).collect();
        std::fs::write(&input, format!("# comment\nt,z\n{rows}")).unwrap();
        let out = dir.join("r");
        let c = config(&["resum", "--input", input.to_str().unwrap(), "-o", out.to_str().unwrap()]).unwrap();
        commands::run(&c).unwrap();
        let json: Value = serde_json::from_slice(&std::fs::read(out.with_extension("json")).unwrap()).unwrap();
        let rate = json["result"]["resummed"]["root"]["rate"].as_f64().unwrap();
        assert!((rate - 1.0).abs() < 1e-9, "{rate}");
        std::fs::remove_dir_all(dir).unwrap();
    }
}
