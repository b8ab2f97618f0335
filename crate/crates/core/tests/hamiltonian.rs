mod common;

use cdadapt::molham::{
    build_initial_hamiltonian, hartree_fock_state, jw_map, load_problem, Bitstring, IntegralsFile,
    Schedule, SpinOrdering, INTEGRALS_FORMAT,
};
use cdadapt::pauli::PauliTerm;
use cdadapt::statevector::exact_ground;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn h2_integrals() -> IntegralsFile {
    serde_json::from_str(&std::fs::read_to_string(fixture(H2)).unwrap()).unwrap()
}

#[test]
fn h2_has_fifteen_terms() {
    let p = load_problem(fixture(H2), None).unwrap();
    assert_eq!(p.n_qubits(), 4);
    assert_eq!(p.h_f.len(), 15);
    assert_eq!(p.hf_bits.to_string(), "0101");
    assert!(p.h_f.iter().all(|(_, w)| w.im == 0.0));
}

#[test]
fn h2_matches_fock_space_matrix() {
    let ints = h2_integrals();
    let jw = dense_sum(&jw_map(&ints).unwrap());
    let fock = fock_hamiltonian(&ints).map(|v| c(v, 0.0));
    assert!(max_abs_diff(&jw, &fock) < 1e-12);
}

#[test]
fn h2_exact_ground_energy() {
    let ints = h2_integrals();
    let p = load_problem(fixture(H2), None).unwrap();
    let (e0, psi) = exact_ground(&p.h_f).unwrap();
    let oracle = sorted_eigenvalues_real(fock_hamiltonian(&ints));
    assert!((e0 - oracle[0]).abs() < 1e-12);
    // Independent full-CI reference for H2/STO-3G at 0.735 A.
    assert!((e0 + p.e_offset - (-1.1373060357534004)).abs() < 1e-9);
    // Ground state lives in the two-electron sector.
    for (b, a) in psi.amplitudes().iter().enumerate() {
        if a.norm() > 1e-8 {
            assert_eq!((b as u32).count_ones(), 2);
        }
    }
}

/// Random real integrals with the full eight-fold permutational symmetry
/// of chemists' `(pq|rs)`, stored as `h2[i][j][k][l] = (il|jk)`.
fn random_integrals(rng: &mut ChaCha8Rng, n: usize) -> IntegralsFile {
    let mut h1 = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = rng.gen_range(-1.0..1.0);
            h1[i][j] = v;
            h1[j][i] = v;
        }
    }
    let mut g = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    if g[p][q][r][s] == 0.0 {
                        let v = rng.gen_range(-0.5..0.5);
                        for (a, b, c2, d) in [
                            (p, q, r, s),
                            (q, p, r, s),
                            (p, q, s, r),
                            (q, p, s, r),
                            (r, s, p, q),
                            (s, r, p, q),
                            (r, s, q, p),
                            (s, r, q, p),
                        ] {
                            g[a][b][c2][d] = v;
                        }
                    }
                }
            }
        }
    }
    let mut h2 = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    h2[i][j][k][l] = g[i][l][j][k];
                }
            }
        }
    }
    IntegralsFile {
        format: INTEGRALS_FORMAT.into(),
        n_spin_orbitals: n,
        n_electrons: n / 2,
        e_offset: 0.0,
        h1,
        h2,
        metadata: serde_json::Value::Null,
    }
}

#[test]
fn random_integrals_match_fock_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [2, 4, 6] {
        let ints = random_integrals(&mut rng, n);
        let jw = dense_sum(&jw_map(&ints).unwrap());
        let fock = fock_hamiltonian(&ints).map(|v| c(v, 0.0));
        assert!(max_abs_diff(&jw, &fock) < 1e-10, "n = {n}");
    }
}

/// Diagonal energy of a Z-only Hamiltonian on basis state `b`.
fn z_energy(h: &cdadapt::pauli::PauliSum, b: u64) -> f64 {
    h.iter()
        .map(|(t, w)| {
            let s = t.to_string();
            let n = s.len();
            let parity = s
                .chars()
                .enumerate()
                .filter(|(_, ch)| *ch == 'Z')
                .filter(|(i, _)| b >> (n - 1 - i) & 1 == 1)
                .count();
            w.re * if parity % 2 == 0 { 1.0 } else { -1.0 }
        })
        .sum()
}

#[test]
fn initial_hamiltonian_ground_is_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let n = rng.gen_range(1..=10);
        let bits = Bitstring::new(n, rng.gen_range(0..1u64 << n)).unwrap();
        let h = build_initial_hamiltonian(&bits);
        let mut energies: Vec<(f64, u64)> = (0..1u64 << n).map(|b| (z_energy(&h, b), b)).collect();
        energies.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert_eq!(energies[0], (-(n as f64), bits.bits()));
        if n > 0 {
            assert_eq!(energies[1].0, -(n as f64) + 2.0);
        }
    }
}

#[test]
fn four_qubit_reversed_block_example() {
    let bits = hartree_fock_state(4, 2, SpinOrdering::ReversedBlock).unwrap();
    // Qubits 1 and 3 occupied; read with qubit 0 first this is 0101.
    assert_eq!(bits.bits(), 0b1010);
    let h = build_initial_hamiltonian(&bits);
    for (k, sign) in [(0, -1.0), (1, 1.0), (2, -1.0), (3, 1.0)] {
        let t = PauliTerm::single(4, k, cdadapt::pauli::Pauli::Z);
        assert_eq!(h.weight(&t), c(sign, 0.0));
    }
    assert_eq!(exact_ground(&h).unwrap().0, -4.0);
}

#[test]
fn schedule_closed_form_and_derivative() {
    let s = Schedule::default();
    for t in [0.0, 0.1, 0.33, 0.5, 0.71, 0.9, 1.0] {
        let (l, dl) = s.eval(t).unwrap();
        let inner = (std::f64::consts::PI * t / 2.0).sin().powi(2);
        let direct = (std::f64::consts::FRAC_PI_2 * inner).sin().powi(2);
        assert!((l - direct).abs() < 1e-15, "t = {t}");
        if t > 0.0 && t < 1.0 {
            let h = 1e-6;
            let fd = (s.lambda(t + h).unwrap() - s.lambda(t - h).unwrap()) / (2.0 * h);
            assert!((dl - fd).abs() < 1e-8, "t = {t}");
        }
    }
    assert!(s.eval(1.5).is_err());
}
