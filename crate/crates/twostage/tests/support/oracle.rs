// Brute-force magnon table: build V(t) as a dense 2^L matrix, contract the
// doubled network for every bipartition, expand the dual-basis bra.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64 as C64;

fn embed(l: usize, i: usize, j: usize, g: &Matrix4<C64>) -> DMatrix<C64> {
    let n = 1usize << l;
    let (bi, bj) = (i - 1, j - 1);
    DMatrix::from_fn(n, n, |r, c| {
        let rest = !((1 << bi) | (1 << bj));
        if r & rest != c & rest {
            return C64::new(0.0, 0.0);
        }
        let lr = 2 * (r >> bi & 1) + (r >> bj & 1);
        let lc = 2 * (c >> bi & 1) + (c >> bj & 1);
        g[(lr, lc)]
    })
}

/// `Tr ρ²` of `|V⟩/2^(L/2)` on output site 1 plus the input legs in `s`:
/// `4^(−L) Σ G_{c,c'}(a₁,b₁) G_{d,d'}(b₁,a₁)`, with `c', d'` obtained by
/// exchanging the `s` bits of `c` and `d`.
fn purity(v: &DMatrix<C64>, l: usize, s: usize) -> f64 {
    let n = 1usize << l;
    // g[a1][b1][(c, c')] = Σ_ā V[(a1,ā), c] conj V[(b1,ā), c']
    let mut g = vec![vec![DMatrix::<C64>::zeros(n, n); 2]; 2];
    for a1 in 0..2 {
        for b1 in 0..2 {
            for c in 0..n {
                for cp in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for abar in 0..n / 2 {
                        acc += v[(a1 | abar << 1, c)] * v[(b1 | abar << 1, cp)].conj();
                    }
                    g[a1][b1][(c, cp)] = acc;
                }
            }
        }
    }
    let mut total = C64::new(0.0, 0.0);
    for a1 in 0..2 {
        for b1 in 0..2 {
            for c in 0..n {
                for d in 0..n {
                    let cp = (c & !s) | (d & s);
                    let dp = (d & !s) | (c & s);
                    total += g[a1][b1][(c, cp)] * g[b1][a1][(d, dp)];
                }
            }
        }
    }
    total.re / (n * n) as f64
}

pub fn magnon_table(l: usize, gate: &Matrix4<C64>, t_max: usize) -> Vec<Vec<f64>> {
    let n = 1usize << l;
    let even: Vec<(usize, usize)> = (1..l).step_by(2).map(|i| (i, i + 1)).collect();
    let odd: Vec<(usize, usize)> = (2..l).step_by(2).map(|i| (i, i + 1)).collect();
    let mut v = DMatrix::<C64>::identity(n, n);
    let mut rows = Vec::new();
    for t in 0..=t_max {
        if t > 0 {
            let layer = if t % 2 == 1 { &even } else { &odd };
            for &(i, j) in layer {
                v = &v * embed(l, i, j, gate);
            }
        }
        let p: Vec<f64> = (0..n).map(|s| purity(&v, l, s)).collect();
        let row = (1..=l)
            .map(|x| {
                p.iter()
                    .enumerate()
                    .map(|(s, ps)| {
                        let w: f64 = (1..=l)
                            .map(|i| {
                                let same = (s >> (i - 1) & 1 == 1) == (i == x);
                                if same {
                                    4.0 / 3.0
                                } else {
                                    -2.0 / 3.0
                                }
                            })
                            .product();
                        w * ps
                    })
                    .sum()
            })
            .collect();
        rows.push(row);
    }
    rows
}
