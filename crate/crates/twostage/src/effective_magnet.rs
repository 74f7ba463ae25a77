//! Effective two-state spins obtained by averaging two copies of a circuit.
//!
//! After averaging, every site carries one of two pairing states, `+` (each
//! copy contracted with its own conjugate) or `-` (copies exchanged). Gates
//! become 4×4 transfer matrices on the two-site basis `(++, +-, -+, --)`.

use serde::{Deserialize, Serialize};

use crate::Error;

/// Tolerance used to decide whether `a_x = a_y = 1`.
pub const DUAL_UNITARY_TOL: f64 = 1e-12;

/// Largest chain length representable by [`SpinConfig`].
pub const MAX_SITES: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Plus,
    Minus,
}

impl Spin {
    pub fn flip(self) -> Spin {
        match self {
            Spin::Plus => Spin::Minus,
            Spin::Minus => Spin::Plus,
        }
    }

    fn bit(self) -> u64 {
        match self {
            Spin::Plus => 0,
            Spin::Minus => 1,
        }
    }
}

/// A configuration of `len` effective spins.
///
/// Site `i` (1-based) is stored in bit `i - 1`; a set bit means `-`. The
/// all-plus configuration therefore encodes to `0` and all-minus to
/// `2^len - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfig {
    bits: u64,
    len: usize,
}

impl SpinConfig {
    pub fn new(bits: u64, len: usize) -> Result<Self, Error> {
        if len == 0 || len > MAX_SITES {
            return Err(Error::config(format!("chain length {len} outside 1..={MAX_SITES}")));
        }
        if bits >> len != 0 {
            return Err(Error::config(format!("code {bits} does not fit in {len} sites")));
        }
        Ok(SpinConfig { bits, len })
    }

    pub fn from_spins(spins: &[Spin]) -> Result<Self, Error> {
        let bits = spins.iter().enumerate().fold(0u64, |acc, (i, s)| acc | (s.bit() << i));
        SpinConfig::new(bits, spins.len())
    }

    pub fn all_plus(len: usize) -> Result<Self, Error> {
        SpinConfig::new(0, len)
    }

    pub fn all_minus(len: usize) -> Result<Self, Error> {
        SpinConfig::new(full_mask(len), len)
    }

    /// `|+···+ -···-⟩` with the first `x` sites plus, `x ∈ 0..=len`.
    pub fn domain_wall(len: usize, x: usize) -> Result<Self, Error> {
        if x > len {
            return Err(Error::config(format!("domain-wall position {x} outside 0..={len}")));
        }
        let mask = full_mask(len);
        SpinConfig::new(mask & !low_mask(x), len)
    }

    /// Single `-` at site `x` (1-based) in a `+` background.
    pub fn magnon(len: usize, x: usize) -> Result<Self, Error> {
        if x == 0 || x > len {
            return Err(Error::config(format!("magnon site {x} outside 1..={len}")));
        }
        SpinConfig::new(1 << (x - 1), len)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Spin at 1-based site `i`.
    pub fn spin(&self, i: usize) -> Spin {
        assert!(i >= 1 && i <= self.len, "site {i} outside 1..={}", self.len);
        if self.bits >> (i - 1) & 1 == 1 {
            Spin::Minus
        } else {
            Spin::Plus
        }
    }

    pub fn spins(&self) -> Vec<Spin> {
        (1..=self.len).map(|i| self.spin(i)).collect()
    }

    pub fn minus_count(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Position `x` if this is `|+^x -^(len-x)⟩`.
    pub fn domain_wall_position(&self) -> Option<usize> {
        let plus = self.bits.trailing_zeros() as usize;
        let plus = plus.min(self.len);
        (self.bits == full_mask(self.len) & !low_mask(plus)).then_some(plus)
    }

    pub fn is_domain_wall(&self) -> bool {
        self.domain_wall_position().is_some()
    }

    pub fn is_absorbing(&self) -> bool {
        self.bits == 0 || self.bits == full_mask(self.len)
    }
}

impl std::fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in self.spins() {
            f.write_str(if s == Spin::Plus { "+" } else { "-" })?;
        }
        Ok(())
    }
}

pub(crate) fn full_mask(len: usize) -> u64 {
    low_mask(len)
}

fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// The microscopic ensemble being simulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GateFamily {
    /// Independent Haar-random two-site gates on qudits of dimension `q`.
    Haar { q: u32 },
    /// `u_sym(a_x, a_y, a_z)` dressed with Haar-random single-qubit gates.
    XyzAveraged { ax: f64, ay: f64, az: f64 },
    /// One fixed gate repeated everywhere (not averaged).
    FixedFloquet { ax: f64, ay: f64, az: f64, phi: f64 },
}

impl GateFamily {
    pub fn haar(q: u32) -> Result<Self, Error> {
        check_q(q)?;
        Ok(GateFamily::Haar { q })
    }

    pub fn xyz(ax: f64, ay: f64, az: f64) -> Result<Self, Error> {
        check_unit_interval(&[ax, ay, az])?;
        Ok(GateFamily::XyzAveraged { ax, ay, az })
    }

    pub fn floquet(ax: f64, ay: f64, az: f64, phi: f64) -> Result<Self, Error> {
        check_unit_interval(&[ax, ay, az])?;
        if !phi.is_finite() {
            return Err(Error::config("phi must be finite"));
        }
        Ok(GateFamily::FixedFloquet { ax, ay, az, phi })
    }

    /// Local dimension of the underlying qudits.
    pub fn q(&self) -> u32 {
        match *self {
            GateFamily::Haar { q } => q,
            _ => 2,
        }
    }

    pub fn is_dual_unitary(&self) -> bool {
        match *self {
            GateFamily::Haar { .. } => false,
            GateFamily::XyzAveraged { ax, ay, .. } | GateFamily::FixedFloquet { ax, ay, .. } => {
                (ax - 1.0).abs() <= DUAL_UNITARY_TOL && (ay - 1.0).abs() <= DUAL_UNITARY_TOL
            }
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match *self {
            GateFamily::Haar { q } => check_q(q),
            GateFamily::XyzAveraged { ax, ay, az } => check_unit_interval(&[ax, ay, az]),
            GateFamily::FixedFloquet { ax, ay, az, phi } => {
                check_unit_interval(&[ax, ay, az])?;
                if phi.is_finite() {
                    Ok(())
                } else {
                    Err(Error::config("phi must be finite"))
                }
            }
        }
    }
}

fn check_q(q: u32) -> Result<(), Error> {
    if q < 2 {
        return Err(Error::config(format!("local dimension q = {q} must be at least 2")));
    }
    Ok(())
}

fn check_unit_interval(params: &[f64]) -> Result<(), Error> {
    for &a in params {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::config(format!("gate parameter {a} outside [0, 1]")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransferWeights {
    /// `k` is the total weight with which a wall leaves its bond under one
    /// gate; it splits evenly between the two directions.
    Haar { q: u32, k: f64 },
    Xyz { h: f64, b_plus: f64, b_minus: f64, u: f64, v: f64 },
}

/// `K = 2q/(q²+1)`.
pub fn haar_weight(q: u32) -> Result<TransferWeights, Error> {
    check_q(q)?;
    let q = q as f64;
    Ok(TransferWeights::Haar { q: q as u32, k: 2.0 * q / (q * q + 1.0) })
}

/// Weights of `u_sym(a_x, a_y, a_z)` averaged over single-qubit rotations.
pub fn xyz_weights(ax: f64, ay: f64, az: f64) -> Result<TransferWeights, Error> {
    check_unit_interval(&[ax, ay, az])?;
    let c = [ax, ay, az].map(|a| (std::f64::consts::PI * a).cos());
    let u = c[0] + c[1] + c[2];
    let v = c[0] * c[1] + c[1] * c[2] + c[2] * c[0];
    Ok(TransferWeights::Xyz {
        h: (3.0 - v) / 9.0,
        b_plus: (3.0 + 6.0 * u + 5.0 * v) / 36.0,
        b_minus: (3.0 - 6.0 * u + 5.0 * v) / 36.0,
        u,
        v,
    })
}

/// Local index of the two-site pair `(s_i, s_j)`: `2·s_i + s_j` with `- = 1`.
pub fn pair_index(si: Spin, sj: Spin) -> usize {
    (2 * si.bit() + sj.bit()) as usize
}

/// Two-site transfer matrix, `m[out][in]`, in the order `(++, +-, -+, --)`.
///
/// Coordinates evolve as `Z' = m Z`, reading the circuit from the top
/// boundary downward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTransfer {
    pub m: [[f64; 4]; 4],
}

impl LocalTransfer {
    pub fn from_weights(w: &TransferWeights) -> Self {
        match *w {
            TransferWeights::Haar { k, .. } => {
                let s = 0.5 * k;
                LocalTransfer {
                    m: [
                        [1.0, s, s, 0.0],
                        [0.0, 0.0, 0.0, 0.0],
                        [0.0, 0.0, 0.0, 0.0],
                        [0.0, s, s, 1.0],
                    ],
                }
            }
            TransferWeights::Xyz { h, b_plus, b_minus, .. } => LocalTransfer {
                m: [
                    [1.0, h, h, 0.0],
                    [0.0, b_plus, b_minus, 0.0],
                    [0.0, b_minus, b_plus, 0.0],
                    [0.0, h, h, 1.0],
                ],
            },
        }
    }

    pub fn entry(&self, out: usize, inp: usize) -> f64 {
        self.m[out][inp]
    }

    pub fn column(&self, inp: usize) -> [f64; 4] {
        [self.m[0][inp], self.m[1][inp], self.m[2][inp], self.m[3][inp]]
    }

    /// Conjugation by the reversal `++ ↔ --`, `+- ↔ -+`.
    pub fn exchanged(&self) -> Self {
        let mut m = [[0.0; 4]; 4];
        for (o, row) in m.iter_mut().enumerate() {
            for (i, v) in row.iter_mut().enumerate() {
                *v = self.m[3 - o][3 - i];
            }
        }
        LocalTransfer { m }
    }

    pub fn matmul(&self, other: &LocalTransfer) -> LocalTransfer {
        let mut m = [[0.0; 4]; 4];
        for (o, row) in m.iter_mut().enumerate() {
            for (i, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| self.m[o][k] * other.m[k][i]).sum();
            }
        }
        LocalTransfer { m }
    }
}

pub fn local_transfer(family: &GateFamily) -> Result<LocalTransfer, Error> {
    let w = match *family {
        GateFamily::Haar { q } => haar_weight(q)?,
        GateFamily::XyzAveraged { ax, ay, az } => xyz_weights(ax, ay, az)?,
        GateFamily::FixedFloquet { .. } => {
            return Err(Error::config(
                "a fixed Floquet gate has no averaged transfer matrix; use the exact circuit module",
            ))
        }
    };
    Ok(LocalTransfer::from_weights(&w))
}

/// Expansion of `|+*⟩` and `|-*⟩` in the `{|+⟩, |-⟩}` basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualBasisCoeffs {
    pub q: u32,
    /// `(c_+, c_-)` with `|+*⟩ = c_+|+⟩ + c_-|-⟩`.
    pub plus: (f64, f64),
    /// `(c_+, c_-)` with `|-*⟩ = c_+|+⟩ + c_-|-⟩`.
    pub minus: (f64, f64),
}

impl DualBasisCoeffs {
    /// Coefficient of the ordinary state `s` inside the dual state `dual`.
    pub fn coeff(&self, dual: Spin, s: Spin) -> f64 {
        let (a, b) = match dual {
            Spin::Plus => self.plus,
            Spin::Minus => self.minus,
        };
        match s {
            Spin::Plus => a,
            Spin::Minus => b,
        }
    }
}

pub fn dual_basis(q: u32) -> Result<DualBasisCoeffs, Error> {
    check_q(q)?;
    let q = q as f64;
    let diag = 1.0 / (q * q - 1.0);
    let off = -1.0 / (q * (q * q - 1.0));
    Ok(DualBasisCoeffs { q: q as u32, plus: (diag, off), minus: (off, diag) })
}

/// Overlap `⟨μ|ν⟩` of pairing states: `q²` on the diagonal, `q` off it.
pub fn gram(q: u32, mu: Spin, nu: Spin) -> f64 {
    let q = q as f64;
    if mu == nu {
        q * q
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-14
    }

    #[test]
    fn encoding_corners() {
        assert_eq!(SpinConfig::all_plus(5).unwrap().bits(), 0);
        assert_eq!(SpinConfig::all_minus(5).unwrap().bits(), 31);
        let dw = SpinConfig::domain_wall(4, 1).unwrap();
        assert_eq!(dw.to_string(), "+---");
        assert_eq!(dw.domain_wall_position(), Some(1));
        assert_eq!(SpinConfig::magnon(4, 1).unwrap().to_string(), "-+++");
        assert!(!SpinConfig::magnon(4, 2).unwrap().is_domain_wall());
        assert!(SpinConfig::new(16, 4).is_err());
    }

    #[test]
    fn domain_walls_are_l_plus_one() {
        let l = 7;
        let n = (0..1u64 << l).filter(|&b| SpinConfig::new(b, l).unwrap().is_domain_wall()).count();
        assert_eq!(n, l + 1);
    }

    #[test]
    fn haar_k_values() {
        let TransferWeights::Haar { k, .. } = haar_weight(2).unwrap() else { panic!() };
        assert!(close(k, 0.8));
        let TransferWeights::Haar { k, .. } = haar_weight(3).unwrap() else { panic!() };
        assert!(close(k, 0.6));
        assert!(haar_weight(1).is_err());
    }

    #[test]
    fn xyz_reference_points() {
        let TransferWeights::Xyz { h, b_plus, b_minus, u, v } = xyz_weights(1.0, 1.0, 0.5).unwrap() else {
            panic!()
        };
        assert!(close(u, -2.0) && close(v, 1.0));
        assert!(close(h, 2.0 / 9.0) && close(b_plus, -1.0 / 9.0) && close(b_minus, 5.0 / 9.0));

        let TransferWeights::Xyz { h, b_plus, b_minus, .. } = xyz_weights(0.0, 0.0, 0.0).unwrap() else {
            panic!()
        };
        assert!(close(h, 0.0) && close(b_plus, 1.0) && close(b_minus, 0.0));

        let TransferWeights::Xyz { h, b_plus, b_minus, .. } = xyz_weights(1.0, 1.0, 1.0).unwrap() else {
            panic!()
        };
        assert!(close(h, 0.0) && close(b_plus, 0.0) && close(b_minus, 1.0));
        assert!(xyz_weights(1.2, 0.0, 0.0).is_err());
    }

    #[test]
    fn transfer_layouts() {
        let swap = local_transfer(&GateFamily::xyz(1.0, 1.0, 1.0).unwrap()).unwrap();
        let perm = [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
        for (a, b) in swap.m.iter().flatten().zip(perm.iter().flatten()) {
            assert!(close(*a, *b));
        }
        let m = local_transfer(&GateFamily::xyz(1.0, 1.0, 0.5).unwrap()).unwrap();
        let col = m.column(pair_index(Spin::Plus, Spin::Minus));
        for (a, b) in col.iter().zip([2.0 / 9.0, -1.0 / 9.0, 5.0 / 9.0, 2.0 / 9.0]) {
            assert!(close(*a, b));
        }
        assert!(local_transfer(&GateFamily::floquet(1.0, 1.0, 0.5, 0.6).unwrap()).is_err());
    }

    #[test]
    fn dual_basis_values() {
        let d = dual_basis(2).unwrap();
        assert!(close(d.plus.0, 1.0 / 3.0) && close(d.plus.1, -1.0 / 6.0));
        let d = dual_basis(3).unwrap();
        assert!(close(d.plus.0, 1.0 / 8.0) && close(d.plus.1, -1.0 / 24.0));
        assert!(close(d.minus.0, -1.0 / 24.0) && close(d.minus.1, 1.0 / 8.0));
    }

    #[test]
    fn dual_unitary_flag() {
        assert!(GateFamily::xyz(1.0, 1.0, 0.3).unwrap().is_dual_unitary());
        assert!(!GateFamily::xyz(0.9, 1.0, 0.3).unwrap().is_dual_unitary());
        assert!(GateFamily::floquet(1.0, 1.0, 0.5, 0.6).unwrap().is_dual_unitary());
        assert!(!GateFamily::haar(2).unwrap().is_dual_unitary());
    }
}
