//! Problem construction: molecular input files, Jordan-Wigner mapping, the
//! Hartree-Fock reference, the local initial Hamiltonian, the adiabatic
//! interpolation and the schedule function.
//!
//! Integral files carry spin-orbital integrals. The one-body part is
//! `sum_ij h1[i][j] a+_j a_i` and the two-body part is
//! `1/2 sum_ijkl h2[i][j][k][l] a+_l a+_k a_j a_i`, where for real orbitals
//! `h2[i][j][k][l] = (il|jk)` in chemists' notation. Spin-orbital `k` is
//! encoded on qubit `k`; the `ordering` metadata field says which spatial
//! orbital and spin each index carries.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{check_range, Error, Result};
use crate::pauli::{Pauli, PauliEntry, PauliSum, PauliTerm, DEFAULT_ALGEBRA_THRESHOLD};

pub const INTEGRALS_FORMAT: &str = "integrals.v1";
pub const PAULI_FORMAT: &str = "pauli.v1";

const SYMMETRY_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;

/// Computational-basis bitstring; bit `k` is qubit `k`. Renders with qubit
/// `n - 1` leftmost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bitstring {
    n_qubits: usize,
    bits: u64,
}

impl Bitstring {
    pub fn new(n_qubits: usize, bits: u64) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 64 || (n_qubits < 64 && bits >> n_qubits != 0) {
            return Err(Error::InvalidArgument(format!(
                "bits {bits:#b} do not fit {n_qubits} qubits"
            )));
        }
        Ok(Self { n_qubits, bits })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, k: usize) -> bool {
        self.bits >> k & 1 == 1
    }

    pub fn popcount(&self) -> usize {
        self.bits.count_ones() as usize
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in (0..self.n_qubits).rev() {
            f.write_str(if self.get(k) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let n = s.len();
        let mut bits = 0u64;
        for (pos, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << (n - 1 - pos),
                _ => return Err(Error::Schema(format!("bad bitstring {s:?}"))),
            }
        }
        Bitstring::new(n, bits)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spin {
    Alpha,
    Beta,
}

/// How spin-orbitals `(spatial p, spin)` are laid out on qubits, with `m`
/// spatial orbitals and `n = 2m` qubits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinOrdering {
    /// alpha_p on qubit p, beta_p on qubit m + p.
    #[default]
    Block,
    /// alpha_p on qubit 2p, beta_p on qubit 2p + 1.
    Interleaved,
    /// alpha_p on qubit m - 1 - p, beta_p on qubit 2m - 1 - p. A ket written
    /// `|a_{m-1}..a_0 b_{m-1}..b_0>` and read left to right as qubits
    /// 0, 1, ... uses this layout.
    ReversedBlock,
}

impl SpinOrdering {
    pub fn qubit(self, n_qubits: usize, spatial: usize, spin: Spin) -> usize {
        let m = n_qubits / 2;
        match (self, spin) {
            (SpinOrdering::Block, Spin::Alpha) => spatial,
            (SpinOrdering::Block, Spin::Beta) => m + spatial,
            (SpinOrdering::Interleaved, Spin::Alpha) => 2 * spatial,
            (SpinOrdering::Interleaved, Spin::Beta) => 2 * spatial + 1,
            (SpinOrdering::ReversedBlock, Spin::Alpha) => m - 1 - spatial,
            (SpinOrdering::ReversedBlock, Spin::Beta) => 2 * m - 1 - spatial,
        }
    }

    /// Inverse of [`SpinOrdering::qubit`].
    pub fn spin_orbital(self, n_qubits: usize, qubit: usize) -> (usize, Spin) {
        let m = n_qubits / 2;
        match self {
            SpinOrdering::Block if qubit < m => (qubit, Spin::Alpha),
            SpinOrdering::Block => (qubit - m, Spin::Beta),
            SpinOrdering::Interleaved if qubit.is_multiple_of(2) => (qubit / 2, Spin::Alpha),
            SpinOrdering::Interleaved => (qubit / 2, Spin::Beta),
            SpinOrdering::ReversedBlock if qubit < m => (m - 1 - qubit, Spin::Alpha),
            SpinOrdering::ReversedBlock => (2 * m - 1 - qubit, Spin::Beta),
        }
    }
}

impl FromStr for SpinOrdering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "block" => Ok(SpinOrdering::Block),
            "interleaved" => Ok(SpinOrdering::Interleaved),
            "reversed-block" | "reversed_block" => Ok(SpinOrdering::ReversedBlock),
            other => Err(Error::InvalidOrdering(other.to_string())),
        }
    }
}

impl fmt::Display for SpinOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpinOrdering::Block => "block",
            SpinOrdering::Interleaved => "interleaved",
            SpinOrdering::ReversedBlock => "reversed-block",
        })
    }
}

/// `integrals.v1` file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralsFile {
    pub format: String,
    pub n_spin_orbitals: usize,
    pub n_electrons: usize,
    pub e_offset: f64,
    pub h1: Vec<Vec<f64>>,
    pub h2: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    pub metadata: Value,
}

impl IntegralsFile {
    pub fn validate(&self) -> Result<()> {
        if self.format != INTEGRALS_FORMAT {
            return Err(Error::Schema(format!(
                "format {:?}, expected {INTEGRALS_FORMAT:?}",
                self.format
            )));
        }
        let n = self.n_spin_orbitals;
        if n == 0 || n > 64 {
            return Err(Error::Schema(format!("n_spin_orbitals = {n}")));
        }
        if self.n_electrons > n {
            return Err(Error::Schema(format!(
                "{} electrons in {n} spin-orbitals",
                self.n_electrons
            )));
        }
        if self.h1.len() != n || self.h1.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!("h1 must be {n}x{n}")));
        }
        let h2_ok = self.h2.len() == n
            && self.h2.iter().all(|a| {
                a.len() == n && a.iter().all(|b| b.len() == n && b.iter().all(|c| c.len() == n))
            });
        if !h2_ok {
            return Err(Error::Dimension(format!("h2 must be {n}x{n}x{n}x{n}")));
        }
        for i in 0..n {
            for j in 0..i {
                if (self.h1[i][j] - self.h1[j][i]).abs() > SYMMETRY_TOL {
                    return Err(Error::NonHermitian(format!(
                        "h1[{i}][{j}] = {} but h1[{j}][{i}] = {}",
                        self.h1[i][j], self.h1[j][i]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn ordering(&self) -> Result<SpinOrdering> {
        match self.metadata.get("ordering").and_then(Value::as_str) {
            Some(s) => s.parse(),
            None => Ok(SpinOrdering::Block),
        }
    }
}

/// `pauli.v1` file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliFile {
    pub format: String,
    pub n_qubits: usize,
    pub e_offset: f64,
    pub hf_bits: String,
    pub terms: Vec<PauliEntry>,
    #[serde(default)]
    pub metadata: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemFormat {
    Integrals,
    Pauli,
}

/// A qubit Hamiltonian ready for the solvers.
#[derive(Clone, Debug)]
pub struct MolecularProblem {
    /// Final Hamiltonian without the constant offset.
    pub h_f: PauliSum,
    pub hf_bits: Bitstring,
    pub n_electrons: usize,
    /// Core plus nuclear-repulsion energy, added to reported energies only.
    pub e_offset: f64,
    pub ordering: SpinOrdering,
    pub metadata: Value,
}

impl MolecularProblem {
    pub fn n_qubits(&self) -> usize {
        self.h_f.n_qubits()
    }

    pub fn label(&self) -> String {
        self.metadata
            .get("molecule")
            .and_then(Value::as_str)
            .unwrap_or("unknown")
            .to_string()
    }

    pub fn distance(&self) -> Option<f64> {
        self.metadata.get("distance_angstrom").and_then(Value::as_f64)
    }

    pub fn initial_hamiltonian(&self) -> PauliSum {
        build_initial_hamiltonian(&self.hf_bits)
    }

    pub fn from_integrals(ints: &IntegralsFile) -> Result<Self> {
        ints.validate()?;
        let ordering = ints.ordering()?;
        let h_f = jw_map(ints)?;
        let hf_bits = hartree_fock_state(ints.n_spin_orbitals, ints.n_electrons, ordering)?;
        let mut metadata = ints.metadata.clone();
        if let Value::Object(m) = &mut metadata {
            m.entry("n_electrons")
                .or_insert_with(|| Value::from(ints.n_electrons));
        }
        Ok(Self {
            h_f,
            hf_bits,
            n_electrons: ints.n_electrons,
            e_offset: ints.e_offset,
            ordering,
            metadata,
        })
    }

    pub fn from_pauli_file(file: &PauliFile) -> Result<Self> {
        if file.format != PAULI_FORMAT {
            return Err(Error::Schema(format!(
                "format {:?}, expected {PAULI_FORMAT:?}",
                file.format
            )));
        }
        let h_f = PauliSum::from_entries(file.n_qubits, &file.terms)?;
        if !h_f.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NonHermitian("pauli.v1 weights have imaginary parts".into()));
        }
        let hf_bits: Bitstring = file.hf_bits.parse()?;
        if hf_bits.n_qubits() != file.n_qubits {
            return Err(Error::Dimension(format!(
                "hf_bits has {} bits for {} qubits",
                hf_bits.n_qubits(),
                file.n_qubits
            )));
        }
        let n_electrons = match file.metadata.get("n_electrons").and_then(Value::as_u64) {
            Some(ne) if ne as usize != hf_bits.popcount() => {
                return Err(Error::Schema(format!(
                    "hf_bits {} has {} ones but metadata says {ne} electrons",
                    hf_bits,
                    hf_bits.popcount()
                )))
            }
            Some(ne) => ne as usize,
            None => hf_bits.popcount(),
        };
        let ordering = match file.metadata.get("ordering").and_then(Value::as_str) {
            Some(s) => s.parse()?,
            None => SpinOrdering::Block,
        };
        Ok(Self {
            h_f,
            hf_bits,
            n_electrons,
            e_offset: file.e_offset,
            ordering,
            metadata: file.metadata.clone(),
        })
    }

    pub fn to_pauli_file(&self) -> PauliFile {
        PauliFile {
            format: PAULI_FORMAT.to_string(),
            n_qubits: self.n_qubits(),
            e_offset: self.e_offset,
            hf_bits: self.hf_bits.to_string(),
            terms: self.h_f.to_entries(),
            metadata: self.metadata.clone(),
        }
    }
}

/// Loads a problem file. With `format = None` the file's own `format`
/// field decides.
pub fn load_problem(path: impl AsRef<Path>, format: Option<ProblemFormat>) -> Result<MolecularProblem> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let value: Value = serde_json::from_str(&text)?;
    let format = match format {
        Some(f) => f,
        None => match value.get("format").and_then(Value::as_str) {
            Some(INTEGRALS_FORMAT) => ProblemFormat::Integrals,
            Some(PAULI_FORMAT) => ProblemFormat::Pauli,
            other => return Err(Error::Schema(format!("unknown format {other:?}"))),
        },
    };
    match format {
        ProblemFormat::Integrals => {
            let ints: IntegralsFile = serde_json::from_value(value)
                .map_err(|e| Error::Schema(e.to_string()))?;
            MolecularProblem::from_integrals(&ints)
        }
        ProblemFormat::Pauli => {
            let file: PauliFile = serde_json::from_value(value)
                .map_err(|e| Error::Schema(e.to_string()))?;
            MolecularProblem::from_pauli_file(&file)
        }
    }
}

pub fn save_pauli_problem(problem: &MolecularProblem, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&problem.to_pauli_file())?;
    std::fs::write(path, text)?;
    Ok(())
}

/// `a+_k = (X_k - i Y_k)/2 * Z_{k-1} ... Z_0`.
pub fn creation(n_qubits: usize, k: usize) -> PauliSum {
    ladder(n_qubits, k, -1.0)
}

/// `a_k = (X_k + i Y_k)/2 * Z_{k-1} ... Z_0`.
pub fn annihilation(n_qubits: usize, k: usize) -> PauliSum {
    ladder(n_qubits, k, 1.0)
}

fn ladder(n_qubits: usize, k: usize, y_sign: f64) -> PauliSum {
    let tail = (1u64 << k) - 1;
    let x = PauliTerm::new(n_qubits, 1 << k, tail).expect("ladder operator in range");
    let y = PauliTerm::new(n_qubits, 1 << k, tail | 1 << k).expect("ladder operator in range");
    let mut s = PauliSum::from_term(x, Complex64::new(0.5, 0.0));
    s.add_term(y, Complex64::new(0.0, 0.5 * y_sign))
        .expect("same qubit count");
    s
}

/// Jordan-Wigner image of the second-quantized Hamiltonian (without the
/// constant offset).
pub fn jw_map(ints: &IntegralsFile) -> Result<PauliSum> {
    ints.validate()?;
    let n = ints.n_spin_orbitals;
    let create: Vec<PauliSum> = (0..n).map(|k| creation(n, k)).collect();
    let annihilate: Vec<PauliSum> = (0..n).map(|k| annihilation(n, k)).collect();
    let mut acc: HashMap<PauliTerm, Complex64> = HashMap::new();
    let mut push = |op: &PauliSum, c: f64| {
        for (t, w) in op.iter() {
            *acc.entry(*t).or_default() += w * c;
        }
    };

    for i in 0..n {
        for j in 0..n {
            let h = ints.h1[i][j];
            if h != 0.0 {
                push(&create[j].mul(&annihilate[i], 0.0)?, h);
            }
        }
    }

    let mut cc: HashMap<(usize, usize), PauliSum> = HashMap::new();
    let mut aa: HashMap<(usize, usize), PauliSum> = HashMap::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let h = ints.h2[i][j][k][l];
                    if h == 0.0 || i == j || k == l {
                        continue;
                    }
                    if let std::collections::hash_map::Entry::Vacant(e) = cc.entry((l, k)) {
                        e.insert(create[l].mul(&create[k], 0.0)?);
                    }
                    if let std::collections::hash_map::Entry::Vacant(e) = aa.entry((j, i)) {
                        e.insert(annihilate[j].mul(&annihilate[i], 0.0)?);
                    }
                    let op = cc[&(l, k)].mul(&aa[&(j, i)], 0.0)?;
                    push(&op, 0.5 * h);
                }
            }
        }
    }

    let mut out = PauliSum::zero(n);
    let mut entries: Vec<_> = acc.into_iter().collect();
    entries.sort_unstable_by_key(|a| a.0);
    for (t, w) in entries {
        out.add_term(t, w)?;
    }
    let out = out.simplify(DEFAULT_ALGEBRA_THRESHOLD);
    if !out.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NonHermitian(
            "mapped Hamiltonian has complex weights; check h2 symmetry".into(),
        ));
    }
    Ok(real_part(&out))
}

fn real_part(s: &PauliSum) -> PauliSum {
    let mut out = PauliSum::zero(s.n_qubits());
    for (t, w) in s.iter() {
        out.add_term(*t, Complex64::new(w.re, 0.0)).expect("same size");
    }
    out
}

/// Occupation bitstring of the closed-shell reference: the lowest
/// `ceil(N/2)` alpha and `floor(N/2)` beta spatial orbitals, laid out by
/// `ordering`. Under Jordan-Wigner the qubit bits equal the occupations.
pub fn hartree_fock_state(
    n_qubits: usize,
    n_electrons: usize,
    ordering: SpinOrdering,
) -> Result<Bitstring> {
    if n_electrons > n_qubits {
        return Err(Error::InvalidArgument(format!(
            "{n_electrons} electrons in {n_qubits} spin-orbitals"
        )));
    }
    if !n_qubits.is_multiple_of(2) {
        return Err(Error::InvalidOrdering(format!(
            "{ordering} needs an even number of spin-orbitals, got {n_qubits}"
        )));
    }
    let n_alpha = n_electrons.div_ceil(2);
    let n_beta = n_electrons / 2;
    let mut bits = 0u64;
    for p in 0..n_alpha {
        bits |= 1 << ordering.qubit(n_qubits, p, Spin::Alpha);
    }
    for p in 0..n_beta {
        bits |= 1 << ordering.qubit(n_qubits, p, Spin::Beta);
    }
    Bitstring::new(n_qubits, bits)
}

/// Local Hamiltonian whose unique ground state is `bits`, with energy `-n`:
/// `+Z_k` on occupied qubits and `-Z_k` on empty ones.
pub fn build_initial_hamiltonian(bits: &Bitstring) -> PauliSum {
    let n = bits.n_qubits();
    let mut h = PauliSum::zero(n);
    for k in 0..n {
        let c = if bits.get(k) { 1.0 } else { -1.0 };
        h.add_term(PauliTerm::single(n, k, Pauli::Z), Complex64::new(c, 0.0))
            .expect("same size");
    }
    h
}

/// `(1 - lambda) h_i + lambda h_f`.
pub fn build_adiabatic(h_i: &PauliSum, h_f: &PauliSum, lambda: f64) -> Result<PauliSum> {
    check_range("lambda", lambda, 0.0, 1.0)?;
    Ok(h_i
        .scale_real(1.0 - lambda)
        .add_scaled(h_f, Complex64::new(lambda, 0.0))?
        .simplify(0.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleForm {
    /// `sin^2( (pi/2) sin^2( pi t / 2T ) )`
    #[default]
    NestedSine,
    /// `sin^2( pi t / 2T )`
    SinSquared,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub total_time: f64,
    pub form: ScheduleForm,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            total_time: 1.0,
            form: ScheduleForm::NestedSine,
        }
    }
}

impl Schedule {
    pub fn new(total_time: f64) -> Result<Self> {
        if !(total_time > 0.0 && total_time.is_finite()) {
            return Err(Error::InvalidArgument(format!("total time {total_time} must be > 0")));
        }
        Ok(Self {
            total_time,
            form: ScheduleForm::NestedSine,
        })
    }

    /// `(lambda(t), d lambda / dt)`.
    ///
    /// Written through `c = cos(pi t / T)`, evaluated as
    /// `sin(pi (1/2 - t/T))` so that `t = 0, T/2, T` give exactly
    /// `lambda = 0, 1/2, 1`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let big_t = self.total_time;
        check_range("t", t, 0.0, big_t)?;
        let s = t / big_t;
        let c = (PI * (0.5 - s)).sin();
        let sin_pi_s = if s <= 0.5 {
            (PI * s).sin()
        } else {
            (PI * (1.0 - s)).sin()
        };
        Ok(match self.form {
            ScheduleForm::NestedSine => {
                let lambda = 0.5 * (1.0 - (0.5 * PI * c).sin());
                let dlambda = PI * PI / (4.0 * big_t) * (0.5 * PI * c).cos() * sin_pi_s;
                (lambda, dlambda)
            }
            ScheduleForm::SinSquared => {
                let lambda = 0.5 * (1.0 - c);
                let dlambda = PI / (2.0 * big_t) * sin_pi_s;
                (lambda, dlambda)
            }
        })
    }

    pub fn lambda(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?.0)
    }
}
