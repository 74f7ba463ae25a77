mod support {
    pub mod oracle;
}

use twostage::exact_circuit::*;
use twostage::propagator::{build_schedule, Boundary, Geometry};
use twostage::theory::averaged_channel;

#[test]
fn magnon_table_matches_doubled_contraction() {
    let gate = floquet_gate(1.0, 1.0, 0.5, 0.6).unwrap();
    let sched = build_schedule(Geometry::Brickwall, Boundary::Open, 6).unwrap();
    let table = magnon_overlap_table(&gate, &sched, 6).unwrap();
    let oracle = support::oracle::magnon_table(6, &gate.matrix, 6);
    for (row, orow) in table.values.iter().zip(&oracle) {
        for (a, b) in row.iter().zip(orow) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn non_dual_unitary_table_matches_oracle() {
    let gate = floquet_gate(0.9, 0.8, 0.5, 0.6).unwrap();
    let sched = build_schedule(Geometry::Brickwall, Boundary::Open, 4).unwrap();
    let table = magnon_overlap_table(&gate, &sched, 4).unwrap();
    let oracle = support::oracle::magnon_table(4, &gate.matrix, 4);
    for (row, orow) in table.values.iter().zip(&oracle) {
        for (a, b) in row.iter().zip(orow) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn norm_conserved_over_l_layers() {
    let gate = floquet_gate(1.0, 1.0, 0.5, 0.6).unwrap();
    let sched = build_schedule(Geometry::Brickwall, Boundary::Periodic, 6).unwrap();
    for s in evolve_operator_state(6, &gate, &sched, 6).unwrap() {
        assert!((s.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn identity_state_has_maximal_single_site_purities() {
    let st = EvolutionState::identity(4).unwrap();
    for k in 0..8 {
        assert!((st.operator_purity(1 << k) - 0.5).abs() < 1e-14);
    }
}

#[test]
fn half_cut_purity_decays_as_two_to_minus_t() {
    // Only odd layers put a gate across the middle bond; each such gate
    // contributes the maximal factor 1/4, i.e. 2^(−t) on average.
    let gate = floquet_gate(1.0, 1.0, 0.5, 0.6).unwrap();
    let sched = build_schedule(Geometry::Brickwall, Boundary::Open, 8).unwrap();
    let states = evolve_operator_state(8, &gate, &sched, 6).unwrap();
    let mask = 0b1111 | 0b1111 << 8;
    let p: Vec<f64> = states.iter().map(|s| s.operator_purity(mask)).collect();
    for t in (0..=6).step_by(2) {
        assert!((p[t] - 0.5f64.powi(t as i32)).abs() < 1e-10, "{p:?}");
    }
}

#[test]
fn averaged_channel_matches_rotation_average() {
    for k in 0..=20 {
        let az = k as f64 / 20.0;
        let ch = light_cone_channel(&floquet_gate(1.0, 1.0, az, 0.37).unwrap(), Side::Right);
        let expect = averaged_channel(az).unwrap().lambda_minus;
        assert!((ch.averaged_lambda() - expect).abs() < 1e-12);
    }
}

#[test]
fn correlators_vanish_off_the_light_cone() {
    let sched = build_schedule(Geometry::Brickwall, Boundary::Open, 10).unwrap();
    for az in [0.0, 0.3, 0.5, 1.0] {
        let gate = floquet_gate(1.0, 1.0, az, 0.6).unwrap();
        for t in 0..=4usize {
            for x in -4i64..=4 {
                for (a, b) in [(Pauli::Z, Pauli::Z), (Pauli::X, Pauli::Y)] {
                    let v = chain_correlator(&gate, &sched, 5, a, b, x, t).unwrap();
                    if x != t as i64 {
                        assert!(v.abs() < 1e-12, "az={az} x={x} t={t}: {v}");
                    } else {
                        assert!((v - two_point_correlator(a, b, x, t as u32, &gate)).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn zz_correlator_is_a_sum_of_eigenvalue_powers() {
    // C^t = Σ_k λ_k^t Π_k, so the light-cone sequence satisfies the
    // characteristic recurrence of the 4×4 channel.
    let gate = floquet_gate(1.0, 1.0, 0.5, 0.6).unwrap();
    let c: Vec<f64> = (0..12).map(|t| two_point_correlator(Pauli::Z, Pauli::Z, t, t as u32, &gate)).collect();
    let ch = light_cone_channel(&gate, Side::Right);
    let m = nalgebra::DMatrix::from_column_slice(4, 4, ch.single.as_slice());
    let ev = m.complex_eigenvalues();
    // monic characteristic polynomial coefficients
    let mut poly = vec![num_complex::Complex64::new(1.0, 0.0)];
    for z in ev.iter() {
        let mut next = vec![num_complex::Complex64::new(0.0, 0.0); poly.len() + 1];
        for (k, p) in poly.iter().enumerate() {
            next[k] += p;
            next[k + 1] -= p * z;
        }
        poly = next;
    }
    for t in 4..12 {
        let r: num_complex::Complex64 = (0..=4).map(|k| poly[k] * c[t - k]).sum();
        assert!(r.norm() < 1e-12);
    }
}

#[test]
fn reverse_transition_is_deterministic() {
    let sched = build_schedule(Geometry::Brickwall, Boundary::Open, 6).unwrap();
    let a = reverse_transition_correlator(0.4, 0.6, &sched, 6, 4, 11).unwrap();
    let b = reverse_transition_correlator(0.4, 0.6, &sched, 6, 4, 11).unwrap();
    assert_eq!(a, b);
    assert!((a.series[0] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn exact_limits() {
    let gate = floquet_gate(1.0, 1.0, 0.5, 0.6).unwrap();
    assert!(PauliOperator::single_site(13, 1, Pauli::X).is_err());
    let sched = build_schedule(Geometry::Brickwall, Boundary::Open, 6).unwrap();
    assert!(magnon_overlap_table(&gate, &sched, 7).is_err());
    let stair = build_schedule(Geometry::Staircase, Boundary::Open, 6).unwrap();
    assert!(magnon_overlap_table(&gate, &stair, 3).is_err());
}
