//! Gate schedules and evolution of the purity coordinate vector.
//!
//! The state of the averaged circuit at depth `t` is a vector `Z_s(t)` over
//! all `2^L` spin configurations. Each gate contracts a [`LocalTransfer`]
//! into the two sites it touches. The all-plus and all-minus configurations
//! are fixed points; their weight is drained after every layer so that what
//! remains is the decaying part `ΔZ(t) = Z(t) − Z(∞)`.

use serde::{Deserialize, Serialize};

use crate::effective_magnet::{
    dual_basis, full_mask, gram, haar_weight, local_transfer, GateFamily, LocalTransfer, Spin, SpinConfig,
    TransferWeights,
};
use crate::Error;

/// Dense evolution stores `2^L` coordinates; beyond this it is refused.
pub const MAX_DENSE_SITES: usize = 24;

/// Mass below which a series is considered fully absorbed.
const ABSORBED_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Brickwall,
    Staircase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

/// An ordered, periodically repeated list of gate layers.
///
/// Brickwall schedules hold two layers (even, odd) worth one time unit each.
/// Staircase schedules hold a single sweep worth two time units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub geometry: Geometry,
    pub boundary: Boundary,
    pub l: usize,
    pub layers: Vec<Vec<(usize, usize)>>,
    /// Set for staircase + periodic, which is allowed but less tested.
    pub flagged: bool,
}

pub fn build_schedule(geometry: Geometry, boundary: Boundary, l: usize) -> Result<Schedule, Error> {
    if l < 4 || l % 2 != 0 {
        return Err(Error::config(format!("L = {l}: the chain length must be even and at least 4")));
    }
    if l > crate::effective_magnet::MAX_SITES {
        return Err(Error::config(format!("L = {l} exceeds the supported maximum")));
    }
    let wrap = boundary == Boundary::Periodic;
    let layers = match geometry {
        Geometry::Brickwall => {
            let even: Vec<_> = (1..l).step_by(2).map(|i| (i, i + 1)).collect();
            let mut odd: Vec<_> = (2..l).step_by(2).map(|i| (i, i + 1)).collect();
            if wrap {
                odd.push((l, 1));
            }
            vec![even, odd]
        }
        Geometry::Staircase => {
            let mut sweep: Vec<_> = (1..l).map(|i| (i, i + 1)).collect();
            if wrap {
                sweep.push((l, 1));
            }
            vec![sweep]
        }
    };
    Ok(Schedule { geometry, boundary, l, layers, flagged: geometry == Geometry::Staircase && wrap })
}

impl Schedule {
    /// Gates of the `k`-th layer (layers repeat periodically).
    pub fn layer(&self, k: usize) -> &[(usize, usize)] {
        &self.layers[k % self.layers.len()]
    }

    pub fn time_per_layer(&self) -> u32 {
        match self.geometry {
            Geometry::Brickwall => 1,
            Geometry::Staircase => 2,
        }
    }

    /// First layer to apply so that the initial configuration is not idle.
    ///
    /// Brickwall parity matters: a wall sitting on a bond that the first
    /// layer does not cover would spend a step frozen. We start with the
    /// first layer that has a gate across some wall of `config`.
    pub fn aligned_start(&self, config: &SpinConfig) -> usize {
        (0..self.layers.len())
            .find(|&k| self.layer(k).iter().any(|&(i, j)| config.spin(i) != config.spin(j)))
            .unwrap_or(0)
    }

    pub fn describe(&self) -> String {
        format!("{:?}/{:?}/L={}", self.geometry, self.boundary, self.l).to_lowercase()
    }
}

/// Coordinates `Z_s(t)` over all spin configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct PurityVector {
    pub coeffs: Vec<f64>,
    pub l: usize,
    pub layers_applied: usize,
    pub time: u32,
    pub absorbed_plus: f64,
    pub absorbed_minus: f64,
}

impl PurityVector {
    pub fn indicator(config: &SpinConfig) -> Result<Self, Error> {
        let l = config.len();
        if l > MAX_DENSE_SITES {
            return Err(Error::config(format!(
                "L = {l}: dense evolution is limited to {MAX_DENSE_SITES} sites"
            )));
        }
        let mut coeffs = vec![0.0; 1 << l];
        coeffs[config.index()] = 1.0;
        let mut v = PurityVector { coeffs, l, layers_applied: 0, time: 0, absorbed_plus: 0.0, absorbed_minus: 0.0 };
        v.drain();
        Ok(v)
    }

    pub fn coeff(&self, config: &SpinConfig) -> f64 {
        self.coeffs[config.index()]
    }

    /// Contract `m` into sites `i`, `j` (1-based).
    pub fn apply_gate(&mut self, i: usize, j: usize, m: &LocalTransfer) -> Result<(), Error> {
        if i == 0 || j == 0 || i > self.l || j > self.l || i == j {
            return Err(Error::config(format!("gate ({i}, {j}) invalid for L = {}", self.l)));
        }
        let (bi, bj) = (1usize << (i - 1), 1usize << (j - 1));
        let idx = [0, bj, bi, bi | bj];
        let c = &mut self.coeffs;
        for base in 0..c.len() {
            if base & (bi | bj) != 0 {
                continue;
            }
            let z = [c[base], c[base | bj], c[base | bi], c[base | bi | bj]];
            if z == [0.0; 4] {
                continue;
            }
            for (out, &o) in idx.iter().enumerate() {
                let row = &m.m[out];
                c[base | o] = row[0] * z[0] + row[1] * z[1] + row[2] * z[2] + row[3] * z[3];
            }
        }
        Ok(())
    }

    fn drain(&mut self) {
        let last = self.coeffs.len() - 1;
        self.absorbed_plus += std::mem::take(&mut self.coeffs[0]);
        self.absorbed_minus += std::mem::take(&mut self.coeffs[last]);
    }

    /// Overlap with the all-ones vector, i.e. the free bottom boundary.
    pub fn total(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    fn mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }
}

/// Apply layer `layer_index` of `schedule`, then drain the absorbing states.
pub fn apply_layer(
    state: &mut PurityVector,
    schedule: &Schedule,
    layer_index: usize,
    m: &LocalTransfer,
) -> Result<(), Error> {
    if state.l != schedule.l {
        return Err(Error::config(format!("state has L = {}, schedule has L = {}", state.l, schedule.l)));
    }
    for &(i, j) in schedule.layer(layer_index) {
        state.apply_gate(i, j, m)?;
    }
    state.drain();
    state.layers_applied += 1;
    state.time += schedule.time_per_layer();
    Ok(())
}

/// Which evolution path [`partition_free_boundary`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionPath {
    /// Domain-wall sector when valid (Haar, open), dense otherwise.
    #[default]
    Auto,
    Dense,
    DomainWallSector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundarySeries {
    pub times: Vec<f64>,
    pub delta_z: Vec<f64>,
    /// The series stopped early because all mass was absorbed.
    pub truncated: bool,
    pub start_layer: usize,
    pub path: EvolutionPath,
    /// The `1/(q²+q)^L` prefactor already applied to `delta_z`.
    pub normalization: f64,
}

fn layer_count(schedule: &Schedule, t_max: u32) -> usize {
    (t_max / schedule.time_per_layer()) as usize
}

/// `ΔZ(t)` for a domain wall initially at `x0` with a free bottom boundary.
///
/// `t_max` is in time units; staircase series are sampled once per sweep.
pub fn partition_free_boundary(
    x0: usize,
    schedule: &Schedule,
    family: &GateFamily,
    t_max: u32,
    path: EvolutionPath,
) -> Result<FreeBoundarySeries, Error> {
    family.validate()?;
    let l = schedule.l;
    let init = SpinConfig::domain_wall(l, x0)?;
    let q = family.q() as f64;
    let normalization = (q * q + q).powi(-(l as i32));
    let dw_ok = matches!(family, GateFamily::Haar { .. }) && schedule.boundary == Boundary::Open;
    let path = match path {
        EvolutionPath::Auto if dw_ok => EvolutionPath::DomainWallSector,
        EvolutionPath::Auto => EvolutionPath::Dense,
        p => p,
    };
    let start = schedule.aligned_start(&init);
    let n_layers = layer_count(schedule, t_max);
    let mut times = vec![0.0];
    let mut delta_z = vec![normalization * if init.is_absorbing() { 0.0 } else { 1.0 }];
    let mut truncated = false;

    match path {
        EvolutionPath::DomainWallSector => {
            let GateFamily::Haar { q } = *family else {
                return Err(Error::config("the domain-wall sector path requires a Haar family"));
            };
            let mut dw = DwVector::new(l, x0)?;
            let TransferWeights::Haar { k, .. } = haar_weight(q)? else { unreachable!() };
            for step in 0..n_layers {
                dw.apply_layer(schedule, start + step, k)?;
                times.push(dw.time as f64);
                delta_z.push(normalization * dw.total());
                if dw.mass() < ABSORBED_FLOOR {
                    truncated = step + 1 < n_layers;
                    break;
                }
            }
        }
        _ => {
            let m = local_transfer(family)?;
            let mut state = PurityVector::indicator(&init)?;
            for step in 0..n_layers {
                apply_layer(&mut state, schedule, start + step, &m)?;
                times.push(state.time as f64);
                delta_z.push(normalization * state.total());
                if state.mass() < ABSORBED_FLOOR {
                    truncated = step + 1 < n_layers;
                    break;
                }
            }
        }
    }
    Ok(FreeBoundarySeries { times, delta_z, truncated, start_layer: start, path, normalization })
}

/// Weights of the `L+1` domain-wall configurations `|+^x -^(L-x)⟩`.
///
/// Under Haar gates a wall either leaves its bond, moving one site left or
/// right with weight `K/2` each, or stays put if no gate covers it.
#[derive(Debug, Clone, PartialEq)]
pub struct DwVector {
    pub z: Vec<f64>,
    pub l: usize,
    pub time: u32,
    pub absorbed_plus: f64,
    pub absorbed_minus: f64,
}

impl DwVector {
    pub fn new(l: usize, x0: usize) -> Result<Self, Error> {
        if x0 > l {
            return Err(Error::config(format!("domain-wall position {x0} outside 0..={l}")));
        }
        let mut z = vec![0.0; l + 1];
        z[x0] = 1.0;
        let mut v = DwVector { z, l, time: 0, absorbed_plus: 0.0, absorbed_minus: 0.0 };
        v.drain();
        Ok(v)
    }

    pub fn apply_layer(&mut self, schedule: &Schedule, layer_index: usize, k: f64) -> Result<(), Error> {
        if schedule.boundary != Boundary::Open {
            return Err(Error::config(
                "the domain-wall sector is closed only for open boundaries; use the dense path",
            ));
        }
        if schedule.l != self.l {
            return Err(Error::config("schedule and domain-wall vector disagree on L"));
        }
        let half = 0.5 * k;
        for &(i, _) in schedule.layer(layer_index) {
            // A wall at bond i sits between sites i and i + 1.
            let w = std::mem::take(&mut self.z[i]);
            self.z[i - 1] += half * w;
            self.z[i + 1] += half * w;
        }
        self.drain();
        self.time += schedule.time_per_layer();
        Ok(())
    }

    fn drain(&mut self) {
        self.absorbed_minus += std::mem::take(&mut self.z[0]);
        self.absorbed_plus += std::mem::take(&mut self.z[self.l]);
    }

    pub fn total(&self) -> f64 {
        self.z.iter().sum()
    }

    fn mass(&self) -> f64 {
        self.z.iter().map(|c| c.abs()).sum()
    }
}

/// Evolve a Haar domain wall in its `(L+1)`-dimensional sector.
///
/// Returns the vectors for `t = 0, 1, …` (one per layer), starting with the
/// layer that covers the initial wall.
pub fn dw_sector_evolve(
    x0: usize,
    schedule: &Schedule,
    family: &GateFamily,
    t_max: u32,
) -> Result<Vec<DwVector>, Error> {
    let GateFamily::Haar { q } = *family else {
        return Err(Error::config("the domain-wall sector is closed only for Haar gates"));
    };
    let TransferWeights::Haar { k, .. } = haar_weight(q)? else { unreachable!() };
    let mut dw = DwVector::new(schedule.l, x0)?;
    let start = schedule.aligned_start(&SpinConfig::domain_wall(schedule.l, x0)?);
    let mut out = vec![dw.clone()];
    for step in 0..layer_count(schedule, t_max) {
        dw.apply_layer(schedule, start + step, k)?;
        out.push(dw.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pinning {
    /// Dual-basis readout of a single `-` at `x`.
    Magnon,
    /// Dual-basis readout of `|-^x +^(L-x)⟩` (the first `x` sites minus).
    DomainWall,
    /// Ordinary-basis readout of a single `-` at `x`, weighted by the Gram
    /// overlaps and normalized so that it equals 1 at `t = 0, x = 1`.
    ModifiedMagnon,
}

/// `Z(x, t)` on `x ∈ 1..=L`, `t` in time units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeTable {
    pub pinning: Pinning,
    pub l: usize,
    pub times: Vec<f64>,
    /// `values[row][x - 1]`.
    pub values: Vec<Vec<f64>>,
    pub family: Option<GateFamily>,
    pub schedule: String,
}

impl SpaceTimeTable {
    pub fn get(&self, x: usize, row: usize) -> f64 {
        self.values[row][x - 1]
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }
}

/// Pinned partition functions starting from `|-+⋯+⟩` at the top boundary.
pub fn pinned_table(
    pinning: Pinning,
    schedule: &Schedule,
    family: &GateFamily,
    t_max: u32,
) -> Result<SpaceTimeTable, Error> {
    family.validate()?;
    let m = local_transfer(family)?;
    let l = schedule.l;
    let init = SpinConfig::magnon(l, 1)?;
    let start = schedule.aligned_start(&init);
    let mut state = PurityVector::indicator(&init)?;
    let q = family.q();
    let read = |s: &PurityVector| -> Vec<f64> {
        match pinning {
            Pinning::Magnon => (1..=l).map(|x| s.coeffs[1 << (x - 1)]).collect(),
            Pinning::DomainWall => (1..=l).map(|x| s.coeffs[full_mask(x) as usize]).collect(),
            Pinning::ModifiedMagnon => gram_weighted_magnon(s, q),
        }
    };
    let mut times = vec![0.0];
    let mut values = vec![read(&state)];
    for step in 0..layer_count(schedule, t_max) {
        apply_layer(&mut state, schedule, start + step, &m)?;
        times.push(state.time as f64);
        values.push(read(&state));
    }
    Ok(SpaceTimeTable { pinning, l, times, values, family: Some(*family), schedule: schedule.describe() })
}

/// `Σ_s Z_s ∏_i ⟨σ_i|s_i⟩ / q²` with `σ` the single-minus configuration.
fn gram_weighted_magnon(s: &PurityVector, q: u32) -> Vec<f64> {
    let ratio = gram(q, Spin::Plus, Spin::Minus) / gram(q, Spin::Plus, Spin::Plus);
    let powers: Vec<f64> = (0..=s.l as i32 + 1).map(|k| ratio.powi(k)).collect();
    (1..=s.l)
        .map(|x| {
            let target = 1usize << (x - 1);
            s.coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(idx, c)| c * powers[(idx ^ target).count_ones() as usize])
                .sum()
        })
        .collect()
}

/// Dual-basis contraction of a coordinate vector with `⟨σ*|`.
///
/// Equivalent to reading the coordinate of `σ`; exposed to make the
/// biorthogonality explicit in tests.
pub fn dual_readout(state: &PurityVector, sigma: &SpinConfig, q: u32) -> Result<f64, Error> {
    let d = dual_basis(q)?;
    let l = state.l;
    let mut total = 0.0;
    for (idx, &c) in state.coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut w = 1.0;
        for i in 1..=l {
            let si = if idx >> (i - 1) & 1 == 1 { Spin::Minus } else { Spin::Plus };
            // ⟨σ_i*|s_i⟩ = Σ_μ c_μ(σ_i) ⟨μ|s_i⟩
            let cp = d.coeff(sigma.spin(i), Spin::Plus);
            let cm = d.coeff(sigma.spin(i), Spin::Minus);
            w *= cp * gram(q, Spin::Plus, si) + cm * gram(q, Spin::Minus, si);
        }
        total += w * c;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_min: f64,
    pub t_max: f64,
}

impl FitWindow {
    pub fn new(t_min: f64, t_max: f64) -> Self {
        FitWindow { t_min, t_max }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.t_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Decay rate `r` in `ΔZ ∝ 2^(−r t)`.
    pub rate: f64,
    pub window: FitWindow,
    pub points: usize,
    /// RMS residual of the straight-line fit to `log₂|ΔZ|`.
    pub rms_residual: f64,
    /// The sign of `ΔZ` changes inside the window.
    pub oscillating: bool,
}

/// Least-squares slope of `log₂|y|` against `t` inside `window`, negated.
pub fn fit_rate(times: &[f64], series: &[f64], window: FitWindow) -> Result<RateEstimate, Error> {
    if times.len() != series.len() {
        return Err(Error::config("times and series differ in length"));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(series)
        .filter(|(t, y)| window.contains(**t) && y.is_finite() && **y != 0.0)
        .map(|(t, y)| (*t, *y))
        .collect();
    if pts.len() < 3 {
        return Err(Error::numerical(format!(
            "window [{}, {}] holds {} usable points; at least 3 are needed",
            window.t_min,
            window.t_max,
            pts.len()
        )));
    }
    let oscillating = pts.windows(2).any(|w| w[0].1.signum() != w[1].1.signum());
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.abs().log2()).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::numerical("all points in the window share one time"));
    }
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1.abs().log2() - my)).sum();
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let rss: f64 = pts.iter().map(|p| (p.1.abs().log2() - intercept - slope * p.0).powi(2)).sum();
    Ok(RateEstimate { rate: -slope, window, points: pts.len(), rms_residual: (rss / n).sqrt(), oscillating })
}

/// Saturation time for a half-chain subsystem, `L_A = L/2`.
pub fn saturation_time(schedule: &Schedule) -> f64 {
    let la = schedule.l as f64 / 2.0;
    match (schedule.geometry, schedule.boundary) {
        (Geometry::Brickwall, Boundary::Periodic) => la / 2.0,
        _ => la,
    }
}

/// Default first- and second-stage windows for a series sampled at `times`.
///
/// First stage `[2, t_sat − 2]`, widened to `[0, t_sat]` when that holds
/// fewer than three samples; second stage `[t_sat + 2, end]`.
pub fn default_windows(schedule: &Schedule, times: &[f64]) -> (FitWindow, FitWindow) {
    let ts = saturation_time(schedule);
    let end = times.last().copied().unwrap_or(0.0);
    let mut first = FitWindow::new(2.0, ts - 2.0);
    if times.iter().filter(|t| first.contains(**t)).count() < 3 {
        first = FitWindow::new(0.0, ts);
    }
    (first, FitWindow::new(ts + 2.0, end))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_examples() {
        let s = build_schedule(Geometry::Brickwall, Boundary::Open, 6).unwrap();
        assert_eq!(s.layers[0], vec![(1, 2), (3, 4), (5, 6)]);
        assert_eq!(s.layers[1], vec![(2, 3), (4, 5)]);
        let s = build_schedule(Geometry::Brickwall, Boundary::Periodic, 4).unwrap();
        assert_eq!(s.layers[1], vec![(2, 3), (4, 1)]);
        let s = build_schedule(Geometry::Staircase, Boundary::Open, 4).unwrap();
        assert_eq!(s.layers, vec![vec![(1, 2), (2, 3), (3, 4)]]);
        assert!(!s.flagged);
        assert!(build_schedule(Geometry::Staircase, Boundary::Periodic, 4).unwrap().flagged);
        assert!(build_schedule(Geometry::Brickwall, Boundary::Open, 5).is_err());
        assert!(build_schedule(Geometry::Brickwall, Boundary::Open, 2).is_err());
    }

    #[test]
    fn single_gate_examples() {
        let haar = local_transfer(&GateFamily::haar(2).unwrap()).unwrap();
        let mut v = PurityVector::indicator(&SpinConfig::from_spins(&[Spin::Plus, Spin::Minus, Spin::Plus, Spin::Minus]).unwrap()).unwrap();
        v.apply_gate(1, 2, &haar).unwrap();
        // ++ at sites 1,2 is code 0b1000; -- is 0b1011
        assert!((v.coeffs[0b1000] - 0.4).abs() < 1e-15);
        assert!((v.coeffs[0b1011] - 0.4).abs() < 1e-15);
        assert_eq!(v.coeffs.iter().filter(|c| **c != 0.0).count(), 2);

        let mut v = PurityVector::indicator(&SpinConfig::magnon(4, 3).unwrap()).unwrap();
        let before = v.clone();
        v.apply_gate(1, 2, &haar).unwrap();
        assert_eq!(v, before);

        let xyz = local_transfer(&GateFamily::xyz(1.0, 1.0, 0.5).unwrap()).unwrap();
        let mut v = PurityVector::indicator(&SpinConfig::from_spins(&[Spin::Plus, Spin::Minus, Spin::Minus, Spin::Minus]).unwrap()).unwrap();
        v.apply_gate(1, 2, &xyz).unwrap();
        let want = [(0b1100, 2.0 / 9.0), (0b1110, -1.0 / 9.0), (0b1101, 5.0 / 9.0), (0b1111, 2.0 / 9.0)];
        for (idx, w) in want {
            assert!((v.coeffs[idx] - w).abs() < 1e-15, "{idx:b}");
        }
    }

    #[test]
    fn dw_one_layer_from_middle() {
        let s = build_schedule(Geometry::Brickwall, Boundary::Open, 8).unwrap();
        let fam = GateFamily::haar(2).unwrap();
        let series = dw_sector_evolve(3, &s, &fam, 1).unwrap();
        let z = &series[1].z;
        assert!((z[2] - 0.4).abs() < 1e-15 && (z[4] - 0.4).abs() < 1e-15);
        assert!(dw_sector_evolve(3, &build_schedule(Geometry::Brickwall, Boundary::Periodic, 8).unwrap(), &fam, 1).is_err());
    }

    #[test]
    fn wall_at_edge_is_absorbed() {
        let s = build_schedule(Geometry::Brickwall, Boundary::Open, 4).unwrap();
        let fam = GateFamily::haar(2).unwrap();
        let series = dw_sector_evolve(1, &s, &fam, 1).unwrap();
        assert!((series[1].absorbed_minus - 0.4).abs() < 1e-15);
        assert!((series[1].z[2] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn free_boundary_t0() {
        let s = build_schedule(Geometry::Brickwall, Boundary::Open, 6).unwrap();
        let fam = GateFamily::haar(2).unwrap();
        for x0 in 1..6 {
            let r = partition_free_boundary(x0, &s, &fam, 0, EvolutionPath::Dense).unwrap();
            assert!((r.delta_z[0] - 6f64.powi(-6)).abs() < 1e-20);
        }
    }

    #[test]
    fn swap_magnon_is_ballistic() {
        let s = build_schedule(Geometry::Brickwall, Boundary::Open, 8).unwrap();
        let fam = GateFamily::xyz(1.0, 1.0, 1.0).unwrap();
        let table = pinned_table(Pinning::Magnon, &s, &fam, 7).unwrap();
        for row in 0..table.rows() {
            for x in 1..=8 {
                let want = if x == row + 1 { 1.0 } else { 0.0 };
                assert!((table.get(x, row) - want).abs() < 1e-15, "x={x} t={row}");
            }
        }
    }

    #[test]
    fn dual_readout_is_coordinate() {
        let s = build_schedule(Geometry::Brickwall, Boundary::Open, 6).unwrap();
        let m = local_transfer(&GateFamily::xyz(1.0, 0.8, 0.3).unwrap()).unwrap();
        let mut v = PurityVector::indicator(&SpinConfig::magnon(6, 1).unwrap()).unwrap();
        for k in 0..3 {
            apply_layer(&mut v, &s, k, &m).unwrap();
        }
        for code in [1u64, 2, 5, 12, 33] {
            let sigma = SpinConfig::new(code, 6).unwrap();
            assert!((dual_readout(&v, &sigma, 2).unwrap() - v.coeff(&sigma)).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_synthetic_exponential() {
        let t: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = t.iter().map(|t| 0.8f64.powf(*t)).collect();
        let r = fit_rate(&t, &y, FitWindow::new(0.0, 9.0)).unwrap();
        assert!((r.rate - 1.25f64.log2()).abs() < 1e-12);
        assert!(r.rms_residual < 1e-12 && !r.oscillating);
        let alt: Vec<f64> = t.iter().map(|t| (-0.5f64).powf(*t)).collect();
        let r = fit_rate(&t, &alt, FitWindow::new(0.0, 9.0)).unwrap();
        assert!(r.oscillating && (r.rate - 1.0).abs() < 1e-12);
        assert!(fit_rate(&t, &[0.0; 10], FitWindow::new(0.0, 9.0)).is_err());
        let flat = fit_rate(&t, &[2.0; 10], FitWindow::new(0.0, 9.0)).unwrap();
        assert_eq!(flat.rate, 0.0);
    }

    #[test]
    fn default_window_fallback() {
        let pbc = build_schedule(Geometry::Brickwall, Boundary::Periodic, 12).unwrap();
        let times: Vec<f64> = (0..=40).map(f64::from).collect();
        let (a, b) = default_windows(&pbc, &times);
        assert_eq!((a.t_min, a.t_max), (0.0, 3.0));
        assert_eq!((b.t_min, b.t_max), (5.0, 40.0));
        let obc = build_schedule(Geometry::Brickwall, Boundary::Open, 14).unwrap();
        let (a, _) = default_windows(&obc, &times);
        assert_eq!((a.t_min, a.t_max), (2.0, 5.0));
    }
}
