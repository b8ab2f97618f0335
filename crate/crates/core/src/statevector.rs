//! Exact statevector backend.
//!
//! Amplitudes are indexed little-endian: basis index `b` has qubit `k` set
//! when bit `k` of `b` is set. Every rotation is `exp(-i theta G)` unless a
//! [`Convention`] says otherwise.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::molham::Bitstring;
use crate::pauli::{check_dense, PauliSum, PauliTerm};

const HERMITIAN_TOL: f64 = 1e-10;
const PAR_MIN_DIM: usize = 1 << 12;

/// Sign convention of a Pauli rotation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Convention {
    /// `exp(-i theta G)`
    #[default]
    MinusI,
    /// `exp(+i theta G)`
    PlusI,
}

impl Convention {
    fn sign(self) -> f64 {
        match self {
            Convention::MinusI => 1.0,
            Convention::PlusI => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(bits: &Bitstring) -> Self {
        let n = bits.n_qubits();
        assert!(n <= 30, "statevector of {n} qubits is too large");
        let mut amps = vec![Complex64::default(); 1 << n];
        amps[bits.bits() as usize] = Complex64::new(1.0, 0.0);
        Self { n_qubits: n, amps }
    }

    /// Normalizes the given amplitudes.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Dimension(format!("{dim} amplitudes is not 2^n")));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Numerical("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            amps: amps.into_iter().map(|a| a / norm).collect(),
        })
    }

    /// Wraps amplitudes as they are; the caller guarantees a unit norm.
    pub(crate) fn from_raw(amps: Vec<Complex64>) -> Self {
        debug_assert!(amps.len().is_power_of_two());
        Self {
            n_qubits: amps.len().trailing_zeros() as usize,
            amps,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        dot(&self.amps, &other.amps)
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn scale_phase(&mut self, phase: Complex64) {
        for a in &mut self.amps {
            *a *= phase;
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n_qubits {
            Err(Error::QubitMismatch(self.n_qubits, n))
        } else {
            Ok(())
        }
    }

    /// `P |psi>` as a raw vector.
    pub fn apply_pauli(&self, p: &PauliTerm) -> Result<Vec<Complex64>> {
        self.check(p.n_qubits())?;
        Ok(apply_pauli_raw(p, &self.amps))
    }

    /// In-place `exp(-i theta P)`, using `P^2 = I`.
    pub fn apply_pauli_exp(&mut self, p: &PauliTerm, theta: f64) -> Result<()> {
        self.apply_pauli_exp_with(p, theta, Convention::MinusI)
    }

    pub fn apply_pauli_exp_with(
        &mut self,
        p: &PauliTerm,
        theta: f64,
        convention: Convention,
    ) -> Result<()> {
        self.check(p.n_qubits())?;
        rotate_raw(&mut self.amps, p, convention.sign() * theta);
        Ok(())
    }

    pub fn expectation(&self, h: &PauliOperator) -> Result<f64> {
        self.check(h.n_qubits)?;
        let z = dot(&self.amps, &h.apply(&self.amps));
        if z.im.abs() > HERMITIAN_TOL * (1.0 + z.re.abs()) {
            return Err(Error::Numerical(format!(
                "expectation value has imaginary part {:e}",
                z.im
            )));
        }
        Ok(z.re)
    }

    /// Writes amplitudes as little-endian `(re, im)` f64 pairs.
    pub fn dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for a in &self.amps {
            f.write_all(&a.re.to_le_bytes())?;
            f.write_all(&a.im.to_le_bytes())?;
        }
        f.flush()?;
        Ok(())
    }
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    if a.len() >= PAR_MIN_DIM {
        a.par_chunks(PAR_MIN_DIM)
            .zip(b.par_chunks(PAR_MIN_DIM))
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u.conj() * v).sum::<Complex64>())
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    } else {
        a.iter().zip(b).map(|(u, v)| u.conj() * v).sum()
    }
}

pub(crate) fn apply_pauli_raw(p: &PauliTerm, amps: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); amps.len()];
    for (b, a) in amps.iter().enumerate() {
        let (ph, target) = p.apply_to_basis(b as u64);
        out[target as usize] = ph * a;
    }
    out
}

/// `<u| P |v>` without materializing `P|v>`.
pub(crate) fn pauli_matrix_element(u: &[Complex64], p: &PauliTerm, v: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::default();
    for (b, a) in v.iter().enumerate() {
        let (ph, target) = p.apply_to_basis(b as u64);
        acc += u[target as usize].conj() * ph * a;
    }
    acc
}

/// In-place `exp(-i angle P)`.
pub(crate) fn rotate_raw(amps: &mut [Complex64], p: &PauliTerm, angle: f64) {
    if angle == 0.0 {
        return;
    }
    let (s, c) = angle.sin_cos();
    let mis = Complex64::new(0.0, -s);
    let x = p.x_mask();
    if x == 0 {
        // Diagonal: P|b> = +-|b> up to the Y phase, which is 1 here.
        let plus = Complex64::new(c, -s);
        let minus = Complex64::new(c, s);
        for (b, a) in amps.iter_mut().enumerate() {
            let (ph, _) = p.apply_to_basis(b as u64);
            *a *= if ph.re > 0.0 { plus } else { minus };
        }
        return;
    }
    let pivot = 63 - x.leading_zeros();
    for b in 0..amps.len() as u64 {
        if b >> pivot & 1 == 1 {
            continue;
        }
        let partner = b ^ x;
        let (ph_b, _) = p.apply_to_basis(b);
        let (ph_p, _) = p.apply_to_basis(partner);
        let a0 = amps[b as usize];
        let a1 = amps[partner as usize];
        amps[b as usize] = c * a0 + mis * ph_p * a1;
        amps[partner as usize] = c * a1 + mis * ph_b * a0;
    }
}

/// A Hermitian Pauli sum compiled for repeated application: terms sharing
/// an X mask are fused into one diagonal table.
#[derive(Clone, Debug)]
pub struct PauliOperator {
    n_qubits: usize,
    groups: Vec<(u64, Vec<Complex64>)>,
    source: PauliSum,
}

impl PauliOperator {
    pub fn new(h: &PauliSum) -> Result<Self> {
        if !h.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NonHermitian("operator weights are not real".into()));
        }
        let n = h.n_qubits();
        if n > 30 {
            return Err(Error::Dimension(format!("{n} qubits is too many to simulate")));
        }
        let dim = 1usize << n;
        let mut groups: Vec<(u64, Vec<Complex64>)> = Vec::new();
        for (t, w) in h.iter() {
            let idx = match groups.iter().position(|(x, _)| *x == t.x_mask()) {
                Some(i) => i,
                None => {
                    groups.push((t.x_mask(), vec![Complex64::default(); dim]));
                    groups.len() - 1
                }
            };
            let table = &mut groups[idx].1;
            for (b, entry) in table.iter_mut().enumerate() {
                let (ph, _) = t.apply_to_basis(b as u64);
                *entry += w * ph;
            }
        }
        Ok(Self {
            n_qubits: n,
            groups,
            source: h.clone(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn pauli_sum(&self) -> &PauliSum {
        &self.source
    }

    /// `H v`
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let dim = v.len();
        let apply_range = |lo: usize, out: &mut [Complex64]| {
            for (x, table) in &self.groups {
                for (i, o) in out.iter_mut().enumerate() {
                    let target = lo + i;
                    let src = target ^ *x as usize;
                    *o += table[src] * v[src];
                }
            }
        };
        let mut out = vec![Complex64::default(); dim];
        if dim >= PAR_MIN_DIM {
            out.par_chunks_mut(PAR_MIN_DIM)
                .enumerate()
                .for_each(|(ci, chunk)| apply_range(ci * PAR_MIN_DIM, chunk));
        } else {
            apply_range(0, &mut out);
        }
        out
    }
}

/// `dE/dtheta` at `theta = 0` for `psi -> exp(-i theta G) psi`, i.e.
/// `i <psi|[G, H]|psi> = 2 Im <H psi | G psi>`. `Convention::PlusI` flips
/// the sign.
pub fn adapt_gradient(
    psi: &StateVector,
    h: &PauliOperator,
    g: &PauliTerm,
    convention: Convention,
) -> Result<f64> {
    psi.check(h.n_qubits)?;
    psi.check(g.n_qubits())?;
    let h_psi = h.apply(&psi.amps);
    Ok(convention.sign() * gradient_from_h_psi(&h_psi, g, &psi.amps))
}

pub(crate) fn gradient_from_h_psi(h_psi: &[Complex64], g: &PauliTerm, psi: &[Complex64]) -> f64 {
    2.0 * pauli_matrix_element(h_psi, g, psi).im
}

/// Lowest eigenpair of a Hermitian Pauli sum by dense diagonalization.
pub fn exact_ground(h: &PauliSum) -> Result<(f64, StateVector)> {
    check_dense(h.n_qubits())?;
    if !h.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NonHermitian("exact_ground needs real weights".into()));
    }
    let n = h.n_qubits();
    let dim = 1usize << n;
    let real = h.iter().all(|(t, _)| t.y_count() % 2 == 0);
    if real {
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for (t, w) in h.iter() {
            for b in 0..dim as u64 {
                let (ph, out) = t.apply_to_basis(b);
                m[(out as usize, b as usize)] += w.re * ph.re;
            }
        }
        let eig = SymmetricEigen::new(m);
        let (idx, e0) = argmin(eig.eigenvalues.iter().copied());
        let v: Vec<Complex64> = eig
            .eigenvectors
            .column(idx)
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        Ok((e0, StateVector::from_amplitudes(v)?))
    } else {
        let m = h.to_dense()?;
        let eig = SymmetricEigen::new(m);
        let (idx, e0) = argmin(eig.eigenvalues.iter().copied());
        let v: Vec<Complex64> = eig.eigenvectors.column(idx).iter().copied().collect();
        Ok((e0, StateVector::from_amplitudes(v)?))
    }
}

fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
}
