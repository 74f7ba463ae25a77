use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use twostage::exact_circuit::{REVERSE_SEED, REVERSE_STATES};
use twostage::propagator::{Boundary, EvolutionPath, FitWindow, Geometry};
use twostage::resummation::Reduction;
use twostage::GateFamily;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    SweepAz,
    Predict,
    Channel,
    Resum,
    Exact,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::SweepAz => "sweep-az",
            Command::Predict => "predict",
            Command::Channel => "channel",
            Command::Resum => "resum",
            Command::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    Haar,
    Xyz,
    Floquet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExactMode {
    /// Resummed magnon rate of the exact overlap table vs the channel.
    Magnon,
    /// Squared boundary correlator averaged over random product states.
    Reverse,
    /// Light-cone two-point function from the channel.
    Correlator,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GeometryArg {
    Brickwall,
    Staircase,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryArg {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReductionArg {
    SumX,
    MaxX,
    AbsSumX,
    AbsMaxX,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PathArg {
    Auto,
    Dense,
    DomainWall,
}

/// Flags shared by every subcommand; each uses the ones it needs.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Gate ensemble.
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    /// Local dimension (Haar).
    #[arg(long, default_value_t = 2)]
    pub q: u32,
    #[arg(long, default_value_t = 1.0)]
    pub ax: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ay: f64,
    #[arg(long)]
    pub az: Option<f64>,
    /// Single-site rotation angle of the Floquet gate.
    #[arg(long, default_value_t = 0.6)]
    pub phi: f64,
    #[arg(long, value_enum, default_value = "brickwall")]
    pub geometry: GeometryArg,
    #[arg(long, value_enum, default_value = "open")]
    pub bc: BoundaryArg,
    /// Chain length.
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Final time, in time units.
    #[arg(long = "T")]
    pub t: Option<u32>,
    /// Initial domain-wall position (default L/2).
    #[arg(long)]
    pub x0: Option<usize>,
    /// First-stage fit window `t_min:t_max`.
    #[arg(long)]
    pub window1: Option<String>,
    /// Second-stage fit window `t_min:t_max`.
    #[arg(long)]
    pub window2: Option<String>,
    #[arg(long, value_enum, default_value = "sum-x")]
    pub reduction: ReductionArg,
    /// Resummation truncation order.
    #[arg(long)]
    pub order: Option<usize>,
    /// Comma-separated a_z values.
    #[arg(long)]
    pub az_grid: Option<String>,
    #[arg(long, value_enum, default_value = "magnon")]
    pub mode: ExactMode,
    /// Series CSV to resum (`t,value` rows; `#` lines ignored).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = REVERSE_SEED)]
    pub seed: u64,
    /// Random product states in the reverse-transition average.
    #[arg(long, default_value_t = REVERSE_STATES)]
    pub states: usize,
    #[arg(long, value_enum, default_value = "auto")]
    pub path: PathArg,
    /// Output prefix; `.csv`, `.json` (and `.gp`) are appended.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write a gnuplot script for the CSV.
    #[arg(long)]
    pub gnuplot: bool,
}

/// A fully resolved run; embedded in every artifact and replayable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub family: Option<GateFamily>,
    pub geometry: Geometry,
    pub boundary: Boundary,
    pub l: Option<usize>,
    pub t_max: Option<u32>,
    pub x0: Option<usize>,
    pub window1: Option<FitWindow>,
    pub window2: Option<FitWindow>,
    pub reduction: Reduction,
    pub order: Option<usize>,
    pub az_grid: Vec<f64>,
    pub mode: ExactMode,
    pub input: Option<PathBuf>,
    pub seed: u64,
    pub states: usize,
    pub path: EvolutionPath,
    pub out: PathBuf,
    pub gnuplot: bool,
}

fn parse_window(s: &str) -> Result<FitWindow, CliError> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("window {s:?} must look like t_min:t_max")))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad window bound {v:?}")));
    let w = FitWindow::new(num(a)?, num(b)?);
    if w.t_min > w.t_max {
        return Err(CliError::Config(format!("window {s:?} is empty")));
    }
    Ok(w)
}

fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            let x: f64 = v.trim().parse().map_err(|_| CliError::Config(format!("bad a_z value {v:?}")))?;
            if (0.0..=1.0).contains(&x) {
                Ok(x)
            } else {
                Err(CliError::Config(format!("a_z = {x} outside [0, 1]")))
            }
        })
        .collect()
}

impl RunArgs {
    fn family(&self, command: Command) -> Result<Option<GateFamily>, CliError> {
        let need_az = |what: &str| self.az.ok_or_else(|| CliError::Config(format!("{what} needs --az")));
        let kind = match (self.family, command) {
            (Some(k), _) => Some(k),
            (None, Command::Channel | Command::Exact) => Some(FamilyKind::Floquet),
            (None, Command::Resum) if self.input.is_none() => Some(FamilyKind::Xyz),
            _ => None,
        };
        Ok(match kind {
            None => None,
            Some(FamilyKind::Haar) => Some(GateFamily::haar(self.q)?),
            Some(FamilyKind::Xyz) => Some(GateFamily::xyz(self.ax, self.ay, need_az("the xyz family")?)?),
            Some(FamilyKind::Floquet) => {
                Some(GateFamily::floquet(self.ax, self.ay, need_az("the floquet family")?, self.phi)?)
            }
        })
    }

    pub fn resolve(&self, command: Command) -> Result<RunConfig, CliError> {
        let family = self.family(command)?;
        let az_grid = match (&self.az_grid, command) {
            (Some(s), _) => parse_grid(s)?,
            (None, Command::SweepAz) => (0..=10).map(|k| k as f64 / 10.0).collect(),
            (None, _) => Vec::new(),
        };
        // Record the effective defaults so artifacts are self-describing.
        let (mut l, mut t_max, mut x0, mut order) = (self.l, self.t, self.x0, self.order);
        match command {
            Command::Simulate => {
                if let Some(l) = l {
                    t_max = t_max.or(Some(3 * l as u32));
                    x0 = x0.or(Some(l / 2));
                }
            }
            Command::SweepAz | Command::Resum if self.input.is_none() => {
                let n = *l.get_or_insert(16);
                order = order.or(Some(n.saturating_sub(1)));
            }
            Command::Exact => {
                let n = *l.get_or_insert(12);
                t_max = match self.mode {
                    ExactMode::Magnon => t_max,
                    ExactMode::Reverse => t_max.or(Some(n.saturating_sub(1) as u32)),
                    ExactMode::Correlator => t_max.or(Some(n as u32)),
                };
            }
            _ => {}
        }
        Ok(RunConfig {
            command,
            family,
            geometry: match self.geometry {
                GeometryArg::Brickwall => Geometry::Brickwall,
                GeometryArg::Staircase => Geometry::Staircase,
            },
            boundary: match self.bc {
                BoundaryArg::Open => Boundary::Open,
                BoundaryArg::Periodic => Boundary::Periodic,
            },
            l,
            t_max,
            x0,
            window1: self.window1.as_deref().map(parse_window).transpose()?,
            window2: self.window2.as_deref().map(parse_window).transpose()?,
            reduction: match self.reduction {
                ReductionArg::SumX => Reduction::SumX,
                ReductionArg::MaxX => Reduction::MaxX,
                ReductionArg::AbsSumX => Reduction::AbsSumX,
                ReductionArg::AbsMaxX => Reduction::AbsMaxX,
            },
            order,
            az_grid,
            mode: self.mode,
            input: self.input.clone(),
            seed: self.seed,
            states: self.states,
            path: match self.path {
                PathArg::Auto => EvolutionPath::Auto,
                PathArg::Dense => EvolutionPath::Dense,
                PathArg::DomainWall => EvolutionPath::DomainWallSector,
            },
            out: self.out.clone().unwrap_or_else(|| PathBuf::from(format!("twostage-{}", command.name()))),
            gnuplot: self.gnuplot,
        })
    }
}
