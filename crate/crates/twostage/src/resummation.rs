//! Irreducible-diagram resummation of a decaying series.
//!
//! A trajectory contributing to `Z(t)` splits at the last time it returns to
//! the "pure" mode into an irreducible piece `W` and a shorter trajectory:
//!
//! `Z(t) = W(t) + Σ_{t'=1}^{t-1} Z(t') W(t − t')`, with `Z(0) = 1`.
//!
//! The generating function `Σ Z(t) x^t` then has a pole at the smallest
//! positive root `x₀` of `1 − Σ W(t) x^t`, and `Z(t) ~ x₀^(−t)`. When `W`
//! decays quickly, a handful of terms pins down `x₀` much more accurately
//! than a straight fit of `Z`.

use roots::{find_root_brent, SimpleConvergency};
use serde::{Deserialize, Serialize};

use crate::propagator::SpaceTimeTable;
use crate::Error;

/// Lower end of the root scan; `x₀ > 1` for a decaying series.
pub const ROOT_SCAN_START: f64 = 1.0 + 1e-9;
/// Upper end of the first scan, expanded geometrically when no root is found.
pub const ROOT_SCAN_END: f64 = 64.0;
const ROOT_SCAN_LIMIT: f64 = 1e12;
const ROOT_SCAN_FACTOR: f64 = 1.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    SumX,
    MaxX,
    AbsSumX,
    AbsMaxX,
}

impl Reduction {
    pub fn absolute(self) -> Reduction {
        match self {
            Reduction::SumX | Reduction::AbsSumX => Reduction::AbsSumX,
            Reduction::MaxX | Reduction::AbsMaxX => Reduction::AbsMaxX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub method: Reduction,
}

impl ReducedSeries {
    pub fn from_values(values: Vec<f64>) -> Self {
        let times = (0..values.len()).map(|t| t as f64).collect();
        ReducedSeries { times, values, method: Reduction::SumX }
    }

    /// Some nonzero value differs in sign from its predecessor, `Z(0)`
    /// included.
    pub fn oscillates(&self) -> bool {
        let signs: Vec<f64> = self.values.iter().filter(|v| **v != 0.0).map(|v| v.signum()).collect();
        signs.windows(2).any(|w| w[0] != w[1])
    }

    pub fn truncated(&self, rows: usize) -> ReducedSeries {
        let n = rows.min(self.values.len());
        ReducedSeries { times: self.times[..n].to_vec(), values: self.values[..n].to_vec(), method: self.method }
    }
}

pub fn reduce_space(table: &SpaceTimeTable, method: Reduction) -> ReducedSeries {
    let values = table
        .values
        .iter()
        .map(|row| match method {
            Reduction::SumX => row.iter().sum(),
            Reduction::AbsSumX => row.iter().map(|v| v.abs()).sum(),
            Reduction::MaxX => row.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Reduction::AbsMaxX => row.iter().map(|v| v.abs()).fold(0.0, f64::max),
        })
        .collect();
    ReducedSeries { times: table.times.clone(), values, method }
}

/// `W(t)` for `t = 1..=T`, stored at index `t − 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreducibleWeights {
    pub w: Vec<f64>,
}

impl IrreducibleWeights {
    pub fn order(&self) -> usize {
        self.w.len()
    }

    /// `W(t)`, 1-based.
    pub fn get(&self, t: usize) -> f64 {
        self.w[t - 1]
    }

    pub fn truncated(&self, order: usize) -> IrreducibleWeights {
        IrreducibleWeights { w: self.w[..order.min(self.w.len())].to_vec() }
    }

    /// Rebuild `Z(0..=T)` (with `Z(0) = 1`) by the forward convolution.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.w.len();
        let mut z = vec![1.0; n + 1];
        for t in 1..=n {
            z[t] = self.get(t) + (1..t).map(|tp| z[tp] * self.get(t - tp)).sum::<f64>();
        }
        z
    }

    /// `1 − Σ_t W(t) x^t`.
    pub fn characteristic(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        let mut p = 1.0;
        for &w in &self.w {
            p *= x;
            acc += w * p;
        }
        1.0 - acc
    }
}

/// Invert the convolution; the series is normalized by `Z(0)` first.
pub fn solve_irreducible(series: &ReducedSeries) -> Result<IrreducibleWeights, Error> {
    let z = &series.values;
    if z.len() < 3 {
        return Err(Error::config("resummation needs Z(0), Z(1) and Z(2) at least"));
    }
    let z0 = z[0];
    if z0 == 0.0 || !z0.is_finite() {
        return Err(Error::numerical("Z(0) must be finite and nonzero"));
    }
    let z: Vec<f64> = z.iter().map(|v| v / z0).collect();
    let n = z.len() - 1;
    let mut w = vec![0.0; n];
    for t in 1..=n {
        let conv: f64 = (1..t).map(|tp| z[tp] * w[t - tp - 1]).sum();
        w[t - 1] = z[t] - conv;
    }
    Ok(IrreducibleWeights { w })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub order: usize,
    pub x0: Option<f64>,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub x0: f64,
    pub rate: f64,
    /// `|1 − Σ W(t) x₀^t|`.
    pub residual: f64,
    pub order: usize,
    /// Root and rate at every truncation order `2..=T`.
    pub trace: Vec<TracePoint>,
}

/// Smallest root of `1 − Σ W(t) x^t` above 1 for the full order, plus the
/// convergence trace over truncation orders.
pub fn generating_root(w: &IrreducibleWeights) -> Result<RootResult, Error> {
    if w.order() == 0 {
        return Err(Error::config("no irreducible weights to resum"));
    }
    let trace = (2..=w.order())
        .map(|order| {
            let x0 = smallest_root(&w.truncated(order)).ok();
            TracePoint { order, x0, rate: x0.map(f64::log2) }
        })
        .collect();
    let x0 = smallest_root(w)?;
    Ok(RootResult { x0, rate: x0.log2(), residual: w.characteristic(x0).abs(), order: w.order(), trace })
}

/// Geometric scan from just above 1 for a sign change, then Brent.
pub fn smallest_root(w: &IrreducibleWeights) -> Result<f64, Error> {
    let f = |x: f64| w.characteristic(x);
    let mut lo = ROOT_SCAN_START;
    let mut flo = f(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    let mut end = ROOT_SCAN_END;
    loop {
        while lo < end {
            let hi = (lo * ROOT_SCAN_FACTOR).min(end);
            let fhi = f(hi);
            if !fhi.is_finite() {
                return Err(Error::numerical(format!("generating function diverged near x = {hi}")));
            }
            if fhi == 0.0 {
                return Ok(hi);
            }
            if flo.signum() != fhi.signum() {
                let mut conv = SimpleConvergency { eps: 1e-15, max_iter: 200 };
                return find_root_brent(lo, hi, &f, &mut conv)
                    .map_err(|e| Error::numerical(format!("root refinement failed: {e:?}")));
            }
            lo = hi;
            flo = fhi;
        }
        if end >= ROOT_SCAN_LIMIT {
            return Err(Error::numerical(format!("no root of 1 - sum W(t) x^t up to x = {end:e}")));
        }
        end *= end;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResummedRate {
    pub root: RootResult,
    /// The reduction actually used (switched to absolute values when the
    /// requested reduction oscillates in sign).
    pub method: Reduction,
    pub oscillating: bool,
}

/// Reduce, invert and resum a pinned table using rows `0..=order`.
pub fn resummed_rate(table: &SpaceTimeTable, method: Reduction, order: usize) -> Result<ResummedRate, Error> {
    let series = reduce_space(table, method).truncated(order + 1);
    let oscillating = series.oscillates();
    let series = if oscillating { reduce_space(table, method.absolute()).truncated(order + 1) } else { series };
    let root = generating_root(&solve_irreducible(&series)?)?;
    Ok(ResummedRate { root, method: series.method, oscillating })
}
