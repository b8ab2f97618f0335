//! Reference implementations used to check the library: dense Kronecker
//! products, a Fock-space Hamiltonian built from occupation bit
//! manipulation, and a Runge-Kutta propagator. None of them go through the
//! symplectic Pauli code.
#![allow(dead_code)]

use std::path::PathBuf;

use cdadapt::molham::IntegralsFile;
use cdadapt::pauli::{PauliSum, PauliTerm};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub const H2: &str = "h2_0.735.json";

fn single(ch: char) -> DMatrix<C> {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match ch {
        'I' => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("bad pauli {ch}"),
    }
}

/// Leftmost character is the most significant qubit.
pub fn dense_pauli(s: &str) -> DMatrix<C> {
    let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for ch in s.chars() {
        m = m.kronecker(&single(ch));
    }
    m
}

pub fn dense_sum(s: &PauliSum) -> DMatrix<C> {
    let d = 1 << s.n_qubits();
    let mut m = DMatrix::zeros(d, d);
    for (t, w) in s.iter() {
        m += dense_pauli(&t.to_string()) * *w;
    }
    m
}

pub fn max_abs_diff(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn random_string(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| ['I', 'X', 'Y', 'Z'][rng.gen_range(0..4)]).collect()
}

pub fn random_term(rng: &mut ChaCha8Rng, n: usize) -> PauliTerm {
    random_string(rng, n).parse().unwrap()
}

/// Random sum with complex weights.
pub fn random_sum(rng: &mut ChaCha8Rng, n: usize, terms: usize) -> PauliSum {
    let items: Vec<(C, String)> = (0..terms)
        .map(|_| {
            (
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                random_string(rng, n),
            )
        })
        .collect();
    PauliSum::from_strs(items.iter().map(|(w, s)| (*w, s.as_str()))).unwrap()
}

/// Random Hermitian sum with real weights.
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, terms: usize) -> PauliSum {
    let items: Vec<(C, String)> = (0..terms)
        .map(|_| (c(rng.gen_range(-1.0..1.0), 0.0), random_string(rng, n)))
        .collect();
    PauliSum::from_strs(items.iter().map(|(w, s)| (*w, s.as_str()))).unwrap()
}

/// `a_k |b>` as `(sign, b')`, or `None` when mode `k` is empty.
fn annihilate(b: usize, k: usize) -> Option<(f64, usize)> {
    if b >> k & 1 == 0 {
        return None;
    }
    let sign = if (b & ((1 << k) - 1)).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
    Some((sign, b ^ (1 << k)))
}

fn create(b: usize, k: usize) -> Option<(f64, usize)> {
    if b >> k & 1 == 1 {
        return None;
    }
    let sign = if (b & ((1 << k) - 1)).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
    Some((sign, b | (1 << k)))
}

/// Second-quantized Hamiltonian `sum h1[i][j] a+_j a_i
/// + 1/2 sum h2[i][j][k][l] a+_l a+_k a_j a_i` as a matrix in the
/// occupation-number basis, offset excluded.
pub fn fock_hamiltonian(ints: &IntegralsFile) -> DMatrix<f64> {
    let n = ints.n_spin_orbitals;
    let d = 1usize << n;
    let mut h = DMatrix::zeros(d, d);
    for b in 0..d {
        for i in 0..n {
            for j in 0..n {
                let v = ints.h1[i][j];
                if v == 0.0 {
                    continue;
                }
                let Some((s1, b1)) = annihilate(b, i) else { continue };
                let Some((s2, b2)) = create(b1, j) else { continue };
                h[(b2, b)] += v * s1 * s2;
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = ints.h2[i][j][k][l];
                        if v == 0.0 {
                            continue;
                        }
                        let Some((s1, b1)) = annihilate(b, i) else { continue };
                        let Some((s2, b2)) = annihilate(b1, j) else { continue };
                        let Some((s3, b3)) = create(b2, k) else { continue };
                        let Some((s4, b4)) = create(b3, l) else { continue };
                        h[(b4, b)] += 0.5 * v * s1 * s2 * s3 * s4;
                    }
                }
            }
        }
    }
    h
}

pub fn sorted_eigenvalues_real(m: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

/// Eigenvalues of a Hermitian matrix through its real 2n x 2n embedding
/// `[[A, -B], [B, A]]`, whose spectrum repeats each eigenvalue twice.
pub fn sorted_eigenvalues_hermitian(m: &DMatrix<C>) -> Vec<f64> {
    let d = m.nrows();
    let mut r = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            r[(i, j)] = m[(i, j)].re;
            r[(i + d, j + d)] = m[(i, j)].re;
            r[(i, j + d)] = -m[(i, j)].im;
            r[(i + d, j)] = m[(i, j)].im;
        }
    }
    let all = sorted_eigenvalues_real(r);
    all.into_iter().step_by(2).collect()
}

/// Integrates `i dpsi/dt = H(t) psi` with classic RK4.
pub fn rk4<F: Fn(f64) -> DMatrix<C>>(h: F, psi0: &DVector<C>, t0: f64, t1: f64, steps: usize) -> DVector<C> {
    let dt = (t1 - t0) / steps as f64;
    let mi = c(0.0, -1.0);
    let rhs = |t: f64, v: &DVector<C>| (h(t) * v) * mi;
    let mut psi = psi0.clone();
    for s in 0..steps {
        let t = t0 + s as f64 * dt;
        let k1 = rhs(t, &psi);
        let k2 = rhs(t + dt / 2.0, &(&psi + &k1 * c(dt / 2.0, 0.0)));
        let k3 = rhs(t + dt / 2.0, &(&psi + &k2 * c(dt / 2.0, 0.0)));
        let k4 = rhs(t + dt, &(&psi + &k3 * c(dt, 0.0)));
        psi += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
    }
    psi
}

/// Exact gauge potential of a Hermitian `h` with derivative `dh`:
/// `<m|A|n> = i <m|dh|n> / (E_n - E_m)` in the eigenbasis, zero on the
/// diagonal. Assumes a nondegenerate real symmetric `h`.
pub fn exact_agp(h: &DMatrix<f64>, dh: &DMatrix<f64>) -> DMatrix<C> {
    let eig = h.clone().symmetric_eigen();
    let v = eig.eigenvectors;
    let e = eig.eigenvalues;
    let dh_eig = v.transpose() * dh * &v;
    let d = h.nrows();
    let mut a = DMatrix::<C>::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            if m != n {
                a[(m, n)] = c(0.0, dh_eig[(m, n)] / (e[n] - e[m]));
            }
        }
    }
    let vc = v.map(|x| c(x, 0.0));
    &vc * a * vc.transpose()
}

pub fn amplitudes(v: &[C]) -> DVector<C> {
    DVector::from_column_slice(v)
}

pub fn fidelity(a: &DVector<C>, b: &DVector<C>) -> f64 {
    a.dotc(b).norm_sqr() / (a.norm_squared() * b.norm_squared())
}

/// `exp(-i theta G)` as a dense matrix, term by term (the strings of a
/// generator commute).
pub fn dense_generator_exp(g: &cdadapt::generator::Generator, theta: f64) -> DMatrix<C> {
    let n = g.n_qubits();
    let d = 1 << n;
    let mut u = DMatrix::<C>::identity(d, d);
    for (p, w) in g.pauli_terms() {
        let a = theta * w;
        let r = DMatrix::<C>::identity(d, d) * c(a.cos(), 0.0) - dense_pauli(&p.to_string()) * c(0.0, a.sin());
        u = r * u;
    }
    u
}

/// `exp(-i theta G) v`, one commuting string at a time.
pub fn dense_generator_apply(g: &cdadapt::generator::Generator, theta: f64, v: &DVector<C>) -> DVector<C> {
    let mut out = v.clone();
    for (p, w) in g.pauli_terms() {
        let a = theta * w;
        let pv = dense_pauli(&p.to_string()) * &out;
        out = out * c(a.cos(), 0.0) - pv * c(0.0, a.sin());
    }
    out
}

/// Energy of `... U_2 U_1 |ref>` by dense matrices.
pub fn dense_ansatz_energy(
    h: &DMatrix<C>,
    reference: usize,
    gens: &[cdadapt::generator::Generator],
    thetas: &[f64],
) -> f64 {
    let d = h.nrows();
    let mut psi = DVector::<C>::zeros(d);
    psi[reference] = c(1.0, 0.0);
    for (g, t) in gens.iter().zip(thetas) {
        psi = dense_generator_apply(g, *t, &psi);
    }
    (psi.adjoint() * h * &psi)[(0, 0)].re
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    let v: Vec<C> = (0..1 << n)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}
