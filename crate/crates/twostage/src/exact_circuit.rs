//! Exact small-system simulation of fixed (non-averaged) Floquet circuits.
//!
//! Operators are tracked in the Heisenberg picture, `A(t+1) = W† A(t) W`,
//! with `W` the next brickwall layer (even bonds first). Two equivalent
//! representations are provided:
//!
//! - [`PauliOperator`]: real coefficients over Pauli strings, base-4 digit
//!   `i − 1` holding the Pauli on site `i` in the order `I, X, Y, Z`;
//! - [`EvolutionState`]: the accumulated product of layers `V(t)`
//!   vectorized as a state on `2L` qubits, amplitude index `out + (in << L)`.
//!
//! Both feed the magnon overlap table through operator purities of the
//! region "output site 1 plus the input legs under `-` spins".

use nalgebra::{DMatrix, Matrix2, Matrix4, SMatrix, SVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::effective_magnet::{dual_basis, GateFamily, Spin};
use crate::propagator::{fit_rate, FitWindow, Geometry, Pinning, RateEstimate, Schedule, SpaceTimeTable};
use crate::resummation::{resummed_rate, Reduction, ResummedRate};
use crate::Error;

/// Largest chain handled by the exact routines.
pub const MAX_EXACT_SITES: usize = 12;
/// Inputs to [`build_gate`] must be unitary to this accuracy.
pub const UNITARY_TOL: f64 = 1e-10;
/// Dual-unitarity threshold on the reshuffled-gate residual.
pub const DUAL_UNITARY_RESIDUAL: f64 = 1e-12;
/// Product states averaged over in the reverse-transition correlator.
pub const REVERSE_STATES: usize = 32;
pub const REVERSE_SEED: u64 = 7;
const SERIES_BUDGET_BYTES: usize = 1 << 31;

pub type Ptm = SMatrix<f64, 16, 16>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const NONTRIVIAL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(k: usize) -> Pauli {
        Pauli::ALL[k]
    }

    pub fn matrix(self) -> Matrix2<C64> {
        let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
        match self {
            Pauli::I => Matrix2::new(o, z, z, o),
            Pauli::X => Matrix2::new(z, o, o, z),
            Pauli::Y => Matrix2::new(z, -i, i, z),
            Pauli::Z => Matrix2::new(o, z, z, -o),
        }
    }
}

impl std::str::FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_uppercase().as_str() {
            "I" => Ok(Pauli::I),
            "X" => Ok(Pauli::X),
            "Y" => Ok(Pauli::Y),
            "Z" => Ok(Pauli::Z),
            _ => Err(Error::config(format!("unknown Pauli label {s:?}"))),
        }
    }
}

/// `a ⊗ b`, with `a` on the high (first-site) bit.
pub fn kron2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| a[(r >> 1, c >> 1)] * b[(r & 1, c & 1)])
}

fn unitarity_residual<const N: usize>(m: &SMatrix<C64, N, N>) -> f64 {
    (m * m.adjoint() - SMatrix::<C64, N, N>::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `exp(−iπ/4 Σ_α a_α σ^α ⊗ σ^α)`; the three terms commute.
pub fn u_sym(ax: f64, ay: f64, az: f64) -> Matrix4<C64> {
    let mut u = Matrix4::identity();
    for (a, p) in [(ax, Pauli::X), (ay, Pauli::Y), (az, Pauli::Z)] {
        let th = std::f64::consts::FRAC_PI_4 * a;
        let pp = kron2(&p.matrix(), &p.matrix());
        u *= Matrix4::identity() * C64::new(th.cos(), 0.0) - pp * C64::new(0.0, th.sin());
    }
    u
}

/// `exp(i(sin φ σˣ + cos φ σᶻ))`.
pub fn single_site_u(phi: f64) -> Matrix2<C64> {
    let (c, s) = (1f64.cos(), 1f64.sin());
    let n = Pauli::X.matrix() * C64::new(phi.sin(), 0.0) + Pauli::Z.matrix() * C64::new(phi.cos(), 0.0);
    Matrix2::identity() * C64::new(c, 0.0) + n * C64::new(0.0, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    /// Present when every dressing is `exp(i(sin φ σˣ + cos φ σᶻ))`.
    pub phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitGate {
    /// Row `2·o₁ + o₂`, column `2·i₁ + i₂`.
    pub matrix: Matrix4<C64>,
    pub params: Option<GateParams>,
}

impl TwoQubitGate {
    pub fn from_matrix(matrix: Matrix4<C64>) -> Result<Self, Error> {
        let r = unitarity_residual(&matrix);
        if r > UNITARY_TOL {
            return Err(Error::config(format!("gate is not unitary (residual {r:e})")));
        }
        Ok(TwoQubitGate { matrix, params: None })
    }

    pub fn swap() -> Self {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        let mut m = Matrix4::from_element(z);
        for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            m[(r, c)] = o;
        }
        TwoQubitGate { matrix: m, params: Some(GateParams { ax: 1.0, ay: 1.0, az: 1.0, phi: None }) }
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.matrix)
    }

    pub fn family(&self) -> Option<GateFamily> {
        let p = self.params?;
        Some(GateFamily::FixedFloquet { ax: p.ax, ay: p.ay, az: p.az, phi: p.phi? })
    }
}

/// `(u₁ ⊗ u₂) u_sym (u₃ ⊗ u₄)`.
pub fn build_gate(ax: f64, ay: f64, az: f64, u: [Matrix2<C64>; 4]) -> Result<TwoQubitGate, Error> {
    for (k, m) in u.iter().enumerate() {
        let r = unitarity_residual(m);
        if r > UNITARY_TOL {
            return Err(Error::config(format!("u{} is not unitary (residual {r:e})", k + 1)));
        }
    }
    for a in [ax, ay, az] {
        if !a.is_finite() {
            return Err(Error::config("gate parameters must be finite"));
        }
    }
    let matrix = kron2(&u[0], &u[1]) * u_sym(ax, ay, az) * kron2(&u[2], &u[3]);
    Ok(TwoQubitGate { matrix, params: Some(GateParams { ax, ay, az, phi: None }) })
}

/// The Floquet gate with all four dressings equal to [`single_site_u`].
pub fn floquet_gate(ax: f64, ay: f64, az: f64, phi: f64) -> Result<TwoQubitGate, Error> {
    let u = single_site_u(phi);
    let mut g = build_gate(ax, ay, az, [u; 4])?;
    g.params = Some(GateParams { ax, ay, az, phi: Some(phi) });
    Ok(g)
}

pub fn gate_for_family(family: &GateFamily) -> Result<TwoQubitGate, Error> {
    match *family {
        GateFamily::FixedFloquet { ax, ay, az, phi } => floquet_gate(ax, ay, az, phi),
        _ => Err(Error::config("exact simulation needs a fixed Floquet gate")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualUnitarityCheck {
    pub dual_unitary: bool,
    pub residual: f64,
}

/// Unitarity of the gate read sideways: `(o₁,o₂; i₁,i₂) → (o₂,i₂; o₁,i₁)`.
pub fn check_dual_unitarity(gate: &TwoQubitGate) -> DualUnitarityCheck {
    let u = &gate.matrix;
    let shuffled = Matrix4::from_fn(|r, c| {
        let (o2, i2) = (r >> 1, r & 1);
        let (o1, i1) = (c >> 1, c & 1);
        u[(2 * o1 + o2, 2 * i1 + i2)]
    });
    let residual = unitarity_residual(&shuffled);
    DualUnitarityCheck { dual_unitary: residual < DUAL_UNITARY_RESIDUAL, residual }
}

/// Heisenberg Pauli transfer matrix `R[b][a] = Tr(P_b U† P_a U)/4`, local
/// index `4·p_i + p_j`.
pub fn ptm(gate: &TwoQubitGate) -> Ptm {
    let u = &gate.matrix;
    let paulis: Vec<Matrix4<C64>> =
        (0..16).map(|k| kron2(&Pauli::from_index(k >> 2).matrix(), &Pauli::from_index(k & 3).matrix())).collect();
    Ptm::from_fn(|b, a| {
        let h = u.adjoint() * paulis[a] * u;
        (paulis[b] * h).trace().re / 4.0
    })
}

fn check_exact_size(l: usize) -> Result<(), Error> {
    if l > MAX_EXACT_SITES {
        return Err(Error::config(format!("L = {l} exceeds the exact-simulation limit of {MAX_EXACT_SITES}")));
    }
    Ok(())
}

fn check_brickwall(schedule: &Schedule, t_max: usize) -> Result<(), Error> {
    check_exact_size(schedule.l)?;
    if schedule.geometry != Geometry::Brickwall {
        return Err(Error::config("exact circuits run on brickwall schedules"));
    }
    if t_max > schedule.l {
        return Err(Error::config(format!(
            "T = {t_max} exceeds L = {}; later times are contaminated by boundary reflections",
            schedule.l
        )));
    }
    Ok(())
}

/// Insert a zero field of `width` bits at bit offset `pos`.
fn insert_zero(x: usize, pos: usize, width: usize) -> usize {
    let low = x & ((1 << pos) - 1);
    ((x >> pos) << (pos + width)) | low
}

/// An operator as real coefficients over Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliOperator {
    pub l: usize,
    pub coeffs: Vec<f64>,
}

impl PauliOperator {
    pub fn single_site(l: usize, site: usize, p: Pauli) -> Result<Self, Error> {
        check_exact_size(l)?;
        if site == 0 || site > l {
            return Err(Error::config(format!("site {site} outside 1..={l}")));
        }
        let mut coeffs = vec![0.0; 1 << (2 * l)];
        coeffs[p.index() << (2 * (site - 1))] = 1.0;
        Ok(PauliOperator { l, coeffs })
    }

    /// Coefficient of the single-site string `p` at `site`.
    pub fn single_site_coeff(&self, site: usize, p: Pauli) -> f64 {
        self.coeffs[p.index() << (2 * (site - 1))]
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `A → G† A G` for the gate on sites `(i, j)`.
    pub fn apply_gate(&mut self, i: usize, j: usize, r: &Ptm) {
        let (si, sj) = (2 * (i - 1), 2 * (j - 1));
        let (lo, hi) = (si.min(sj), si.max(sj));
        let mut v = [0.0; 16];
        for rest in 0..1usize << (2 * (self.l - 2)) {
            let base = insert_zero(insert_zero(rest, lo, 2), hi, 2);
            let mut any = false;
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = self.coeffs[base | (k >> 2) << si | (k & 3) << sj];
                any |= *slot != 0.0;
            }
            if !any {
                continue;
            }
            let w = r * SVector::<f64, 16>::from_column_slice(&v);
            for (k, x) in w.iter().enumerate() {
                self.coeffs[base | (k >> 2) << si | (k & 3) << sj] = *x;
            }
        }
    }

    pub fn apply_layer(&mut self, gates: &[(usize, usize)], r: &Ptm) {
        for &(i, j) in gates {
            self.apply_gate(i, j, r);
        }
    }

    /// `S(T) = Σ_{supp σ = T} c_σ²`, indexed by the support bitmask.
    pub fn support_weights(&self) -> Vec<f64> {
        let table: Vec<u16> = (0..1usize << 16)
            .map(|x| {
                let nz = (x | x >> 1) & 0x5555;
                (0..8).fold(0u16, |m, k| m | (((nz >> (2 * k)) & 1) as u16) << k)
            })
            .collect();
        let mut w = vec![0.0; 1 << self.l];
        for (idx, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let mut mask = 0usize;
            let mut x = idx;
            let mut shift = 0;
            while x != 0 {
                mask |= (table[x & 0xffff] as usize) << shift;
                x >>= 16;
                shift += 8;
            }
            w[mask] += c * c;
        }
        w
    }
}

/// Subset-sum transform: `f(s) ← Σ_{T ⊆ s} f(T)`.
fn zeta_transform(f: &mut [f64]) {
    let n = f.len();
    let mut bit = 1;
    while bit < n {
        for s in 0..n {
            if s & bit != 0 {
                f[s] += f[s ^ bit];
            }
        }
        bit <<= 1;
    }
}

/// Normalized purities of `|V⟩` on output site 1 plus the input legs in `s`,
/// from the support weights of `V† P₁ V` for `P = X, Y, Z`.
pub fn purities_from_support_weights(l: usize, weights: &[Vec<f64>; 3]) -> Vec<f64> {
    let mut total = vec![0.0; 1 << l];
    for w in weights {
        for (t, x) in total.iter_mut().zip(w) {
            *t += x;
        }
    }
    zeta_transform(&mut total);
    total
        .iter()
        .enumerate()
        .map(|(s, z)| 0.5 * (1.0 + z) / (1u64 << s.count_ones()) as f64)
        .collect()
}

/// `Z(x) = Σ_s ∏_i q² c(σ_i*, s_i) · P(s)` for `σ` the magnon at `x`.
pub fn magnon_row_from_purities(l: usize, purities: &[f64]) -> Vec<f64> {
    let d = dual_basis(2).expect("q = 2");
    let spin = |b: bool| if b { Spin::Minus } else { Spin::Plus };
    (1..=l)
        .map(|x| {
            purities
                .iter()
                .enumerate()
                .map(|(s, p)| {
                    let w: f64 = (1..=l)
                        .map(|i| 4.0 * d.coeff(spin(i == x), spin(s >> (i - 1) & 1 == 1)))
                        .product();
                    w * p
                })
                .sum()
        })
        .collect()
}

fn exact_table(gate: &TwoQubitGate, schedule: &Schedule, rows: Vec<Vec<f64>>) -> SpaceTimeTable {
    SpaceTimeTable {
        pinning: Pinning::Magnon,
        l: schedule.l,
        times: (0..rows.len()).map(|t| t as f64).collect(),
        values: rows,
        family: gate.family(),
        schedule: schedule.describe(),
    }
}

/// Magnon overlaps `Z(x, t)` for `t = 0..=t_max` via Pauli-string evolution.
pub fn magnon_overlap_table(gate: &TwoQubitGate, schedule: &Schedule, t_max: usize) -> Result<SpaceTimeTable, Error> {
    check_brickwall(schedule, t_max)?;
    let l = schedule.l;
    let r = ptm(gate);
    let mut weights: Vec<[Vec<f64>; 3]> = (0..=t_max).map(|_| [vec![], vec![], vec![]]).collect();
    for (k, p) in Pauli::NONTRIVIAL.iter().enumerate() {
        let mut op = PauliOperator::single_site(l, 1, *p)?;
        for (t, w) in weights.iter_mut().enumerate() {
            if t > 0 {
                op.apply_layer(schedule.layer(t - 1), &r);
            }
            w[k] = op.support_weights();
        }
    }
    let rows = weights.iter().map(|w| magnon_row_from_purities(l, &purities_from_support_weights(l, w))).collect();
    Ok(exact_table(gate, schedule, rows))
}

/// The accumulated evolution operator `V(t)` as a state on `2L` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub l: usize,
    pub layers: usize,
    /// Index `out + (in << L)`.
    pub amps: Vec<C64>,
}

/// Apply `m` to bits `hi` and `lo` of a state, local index `2·b_hi + b_lo`.
fn apply_two_site(amps: &mut [C64], hi: usize, lo: usize, m: &Matrix4<C64>) {
    let (a, b) = (hi.min(lo), hi.max(lo));
    let n = amps.len().trailing_zeros() as usize;
    let mut v = [C64::new(0.0, 0.0); 4];
    for rest in 0..1usize << (n - 2) {
        let base = insert_zero(insert_zero(rest, a, 1), b, 1);
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = amps[base | (k >> 1) << hi | (k & 1) << lo];
        }
        for (k, row) in m.row_iter().enumerate() {
            amps[base | (k >> 1) << hi | (k & 1) << lo] = (0..4).map(|c| row[c] * v[c]).sum();
        }
    }
}

impl EvolutionState {
    /// `|I⟩ / 2^(L/2)`.
    pub fn identity(l: usize) -> Result<Self, Error> {
        check_exact_size(l)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << (2 * l)];
        let a = (0.5f64).powf(l as f64 / 2.0);
        for x in 0..1usize << l {
            amps[x | x << l] = C64::new(a, 0.0);
        }
        Ok(EvolutionState { l, layers: 0, amps })
    }

    /// `V → V W` for a gate on `(i, j)`: `Wᵀ` acts on the input legs.
    pub fn apply_gate(&mut self, i: usize, j: usize, gate: &TwoQubitGate) {
        let wt = gate.matrix.transpose();
        apply_two_site(&mut self.amps, self.l + i - 1, self.l + j - 1, &wt);
    }

    pub fn apply_layer(&mut self, gates: &[(usize, usize)], gate: &TwoQubitGate) {
        for &(i, j) in gates {
            self.apply_gate(i, j, gate);
        }
        self.layers += 1;
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Tr ρ_A²` for the qubits in `mask` (bit `k < L`: output site `k+1`;
    /// bit `L + k`: input site `k+1`).
    pub fn operator_purity(&self, mask: u64) -> f64 {
        let n = 2 * self.l;
        let a_bits: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).collect();
        let b_bits: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 0).collect();
        let compress = |idx: usize, bits: &[usize]| bits.iter().enumerate().fold(0, |acc, (k, b)| acc | (idx >> b & 1) << k);
        let mut m = DMatrix::<C64>::zeros(1 << a_bits.len(), 1 << b_bits.len());
        for (idx, z) in self.amps.iter().enumerate() {
            m[(compress(idx, &a_bits), compress(idx, &b_bits))] = *z;
        }
        let g = if m.nrows() <= m.ncols() { &m * m.adjoint() } else { m.adjoint() * &m };
        let norm = self.norm().powi(2);
        g.iter().map(|z| z.norm_sqr()).sum::<f64>() / (norm * norm)
    }

    /// Purity of output site 1 together with the input legs in `s`.
    pub fn magnon_purity(&self, s: usize) -> f64 {
        self.operator_purity(1 | (s as u64) << self.l)
    }
}

/// `V(t)` for `t = 0..=t_max`.
pub fn evolve_operator_state(
    l: usize,
    gate: &TwoQubitGate,
    schedule: &Schedule,
    t_max: usize,
) -> Result<Vec<EvolutionState>, Error> {
    if schedule.l != l {
        return Err(Error::config(format!("schedule is for L = {}, not {l}", schedule.l)));
    }
    check_brickwall(schedule, t_max)?;
    let bytes = (t_max + 1) * (1usize << (2 * l)) * std::mem::size_of::<C64>();
    if bytes > SERIES_BUDGET_BYTES {
        return Err(Error::config(format!("storing {} states of L = {l} needs {bytes} bytes", t_max + 1)));
    }
    let mut state = EvolutionState::identity(l)?;
    let mut out = vec![state.clone()];
    for t in 0..t_max {
        state.apply_layer(schedule.layer(t), gate);
        out.push(state.clone());
    }
    Ok(out)
}

/// Magnon table from reduced density matrices of the vectorized evolution.
pub fn magnon_overlap_table_from_states(
    gate: &TwoQubitGate,
    schedule: &Schedule,
    states: &[EvolutionState],
) -> Result<SpaceTimeTable, Error> {
    let l = schedule.l;
    if states.iter().any(|s| s.l != l) {
        return Err(Error::config("state series and schedule disagree on L"));
    }
    let rows = states
        .iter()
        .map(|st| {
            let p: Vec<f64> = (0..1usize << l).map(|s| st.magnon_purity(s)).collect();
            magnon_row_from_purities(l, &p)
        })
        .collect();
    Ok(exact_table(gate, schedule, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Operators on a gate's first leg, carried to its second.
    Right,
    /// Operators on a gate's second leg, carried to its first.
    Left,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliChannel {
    pub side: Side,
    /// `C[b][a]`: component of `C(P_a)` along `P_b`.
    pub single: SMatrix<f64, 4, 4>,
    /// `C ⊗ C`.
    pub doubled: Ptm,
    /// The gate is dual-unitary, so the channel is exact on the light cone.
    pub exact: bool,
}

pub fn light_cone_channel(gate: &TwoQubitGate, side: Side) -> PauliChannel {
    let r = ptm(gate);
    let single = SMatrix::<f64, 4, 4>::from_fn(|b, a| match side {
        Side::Right => r[(b, 4 * a)],
        Side::Left => r[(4 * b, a)],
    });
    let doubled = Ptm::from_fn(|r, c| single[(r >> 2, c >> 2)] * single[(r & 3, c & 3)]);
    PauliChannel { side, single, doubled, exact: check_dual_unitarity(gate).dual_unitary }
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<C64> {
    let mut ev: Vec<C64> = m.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)).then(b.im.total_cmp(&a.im)));
    ev
}

impl PauliChannel {
    pub fn eigenvalues(&self) -> Vec<C64> {
        sorted_eigenvalues(DMatrix::from_column_slice(4, 4, self.single.as_slice()))
    }

    pub fn doubled_eigenvalues(&self) -> Vec<C64> {
        sorted_eigenvalues(DMatrix::from_column_slice(16, 16, self.doubled.as_slice()))
    }

    /// The non-identity block `T` of `C = diag(1, T)`.
    pub fn traceless_block(&self) -> SMatrix<f64, 3, 3> {
        self.single.fixed_view::<3, 3>(1, 1).into_owned()
    }

    /// Leading eigenvalue of `C ⊗ C` within the Krylov space of the magnon
    /// vector `Σ_{P≠I} P ⊗ P`.
    pub fn magnon_lambda(&self) -> C64 {
        let mut start = SVector::<f64, 16>::zeros();
        for p in 1..4 {
            start[5 * p] = 1.0;
        }
        let mut basis: Vec<SVector<f64, 16>> = vec![start.normalize()];
        let scale = self.doubled.norm().max(1.0);
        while basis.len() < 16 {
            let mut w = self.doubled * basis.last().expect("nonempty");
            for _ in 0..2 {
                for q in &basis {
                    w -= q * q.dot(&w);
                }
            }
            if w.norm() < 1e-10 * scale {
                break;
            }
            basis.push(w.normalize());
        }
        let k = basis.len();
        let h = DMatrix::from_fn(k, k, |r, c| basis[r].dot(&(self.doubled * basis[c])));
        sorted_eigenvalues(h)[0]
    }

    /// `−log₂|λ|` of [`Self::magnon_lambda`].
    pub fn r_mag_fixed(&self) -> f64 {
        -self.magnon_lambda().norm().log2()
    }

    /// Magnon eigenvalue after averaging the dressings over single-qubit
    /// rotations, `‖T‖²_F / 3`.
    pub fn averaged_lambda(&self) -> f64 {
        self.traceless_block().norm_squared() / 3.0
    }

    pub fn report(&self) -> ChannelReport {
        let pair = |z: C64| [z.re, z.im];
        let lambda = self.magnon_lambda();
        ChannelReport {
            side: self.side,
            exact: self.exact,
            eigenvalues: self.eigenvalues().into_iter().map(pair).collect(),
            doubled_eigenvalues: self.doubled_eigenvalues().into_iter().map(pair).collect(),
            selected_lambda: pair(lambda),
            r_mag_fixed: -lambda.norm().log2(),
            averaged_lambda: self.averaged_lambda(),
        }
    }
}

/// Serializable channel summary; complex numbers are `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub side: Side,
    pub exact: bool,
    pub eigenvalues: Vec<[f64; 2]>,
    pub doubled_eigenvalues: Vec<[f64; 2]>,
    pub selected_lambda: [f64; 2],
    pub r_mag_fixed: f64,
    pub averaged_lambda: f64,
}

/// `2^(−L) Tr(a₀(t) b_x)` on an infinite chain of a dual-unitary gate:
/// nonzero only for `x = ±t`, where it is a matrix element of `C^t`.
pub fn two_point_correlator(a: Pauli, b: Pauli, x: i64, t: u32, gate: &TwoQubitGate) -> f64 {
    if t == 0 {
        return if x == 0 && a == b { 1.0 } else { 0.0 };
    }
    let side = if x == t as i64 {
        Side::Right
    } else if x == -(t as i64) {
        Side::Left
    } else {
        return 0.0;
    };
    let c = light_cone_channel(gate, side).single;
    c.pow(t)[(b.index(), a.index())]
}

/// The same correlator read off a finite open chain by exact evolution of
/// `a` from `origin` (even layer first). Right movers start on odd sites,
/// left movers on even ones; keep `t` small enough to avoid the edges.
pub fn chain_correlator(
    gate: &TwoQubitGate,
    schedule: &Schedule,
    origin: usize,
    a: Pauli,
    b: Pauli,
    x: i64,
    t: usize,
) -> Result<f64, Error> {
    check_exact_size(schedule.l)?;
    let target = origin as i64 + x;
    if target < 1 || target > schedule.l as i64 {
        return Err(Error::config(format!("site {target} outside the chain")));
    }
    let r = ptm(gate);
    let mut op = PauliOperator::single_site(schedule.l, origin, a)?;
    for k in 0..t {
        op.apply_layer(schedule.layer(k), &r);
    }
    Ok(op.single_site_coeff(target as usize, b))
}

/// Resummed magnon rate of the exact table at order `L − 1`, the longest
/// series free of the edge reflection, against the channel prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnonConvergence {
    pub resummed: ResummedRate,
    pub channel: ChannelReport,
    pub table: SpaceTimeTable,
}

pub fn magnon_convergence(gate: &TwoQubitGate, schedule: &Schedule, method: Reduction) -> Result<MagnonConvergence, Error> {
    let order = schedule.l - 1;
    let table = magnon_overlap_table(gate, schedule, order)?;
    let resummed = resummed_rate(&table, method, order)?;
    Ok(MagnonConvergence { resummed, channel: light_cone_channel(gate, Side::Right).report(), table })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReverseTransition {
    pub times: Vec<f64>,
    /// `|C(t)|² = Σ_{P} ⟨P₁(t)⟩² / 3`, averaged over product states.
    pub series: Vec<f64>,
    pub fit: RateEstimate,
    pub states: usize,
    pub seed: u64,
}

fn random_product_state(l: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let mut psi = vec![C64::new(1.0, 0.0)];
    for _ in 0..l {
        let mut g = || C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
        let (a, b) = (g(), g());
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (a, b) = (a / n, b / n);
        // site k+1 becomes bit k
        psi = (0..2 * psi.len()).map(|idx| psi[idx % psi.len()] * if idx < psi.len() { a } else { b }).collect();
    }
    psi
}

/// Squared boundary correlator of the Floquet circuit on an open chain.
pub fn reverse_transition_correlator(
    az: f64,
    phi: f64,
    schedule: &Schedule,
    t_max: usize,
    states: usize,
    seed: u64,
) -> Result<ReverseTransition, Error> {
    check_brickwall(schedule, t_max)?;
    if states == 0 {
        return Err(Error::config("at least one initial state is needed"));
    }
    let gate = floquet_gate(1.0, 1.0, az, phi)?;
    let l = schedule.l;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut series = vec![0.0; t_max + 1];
    for _ in 0..states {
        let mut psi = random_product_state(l, &mut rng);
        for (t, acc) in series.iter_mut().enumerate() {
            if t > 0 {
                for &(i, j) in schedule.layer(t - 1) {
                    apply_two_site(&mut psi, i - 1, j - 1, &gate.matrix);
                }
            }
            let (mut xy, mut z) = (C64::new(0.0, 0.0), 0.0);
            for pair in psi.chunks_exact(2) {
                xy += pair[0].conj() * pair[1];
                z += pair[0].norm_sqr() - pair[1].norm_sqr();
            }
            let (x, y) = (2.0 * xy.re, 2.0 * xy.im);
            *acc += (x * x + y * y + z * z) / 3.0;
        }
    }
    let series: Vec<f64> = series.iter().map(|v| v / states as f64).collect();
    let times: Vec<f64> = (0..=t_max).map(|t| t as f64).collect();
    let fit = fit_rate(&times, &series, FitWindow::new(2.0, (l - 1) as f64))?;
    Ok(ReverseTransition { times, series, fit, states, seed })
}
