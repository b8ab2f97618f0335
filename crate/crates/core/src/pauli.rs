//! Symbolic algebra over n-qubit Pauli strings.
//!
//! A [`PauliTerm`] is a phase-free string stored as a pair of bit masks
//! (`x`, `z`). Bit `k` of each mask describes qubit `k`; the pair encodes
//! `I = (0,0)`, `X = (1,0)`, `Z = (0,1)` and `Y = (1,1)`, with the operator
//! defined as `P = i^{|x & z|} X^x Z^z` so that `Y` is the usual Hermitian
//! Pauli matrix. Phases never live on a term; they are folded into the
//! complex weights of a [`PauliSum`].
//!
//! Text rendering places qubit `n - 1` leftmost, so `"XI"` is `X` on qubit 1.
//! Basis states are little-endian: qubit 0 is the least significant bit of a
//! computational-basis index.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cleanup threshold used for algebraic simplification.
pub const DEFAULT_ALGEBRA_THRESHOLD: f64 = 1e-10;

/// Default cap on qubits for anything that forms a `2^n x 2^n` matrix.
pub const DEFAULT_DENSE_LIMIT: usize = 14;

pub const MAX_QUBITS: usize = 64;

/// Dense-matrix qubit cap, overridable through `CDADAPT_DENSE_LIMIT`.
pub fn dense_limit() -> usize {
    std::env::var("CDADAPT_DENSE_LIMIT")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DENSE_LIMIT)
}

pub(crate) fn check_dense(n: usize) -> Result<()> {
    let limit = dense_limit();
    if n > limit {
        Err(Error::DenseLimit { n, limit })
    } else {
        Ok(())
    }
}

/// A power of `i`: one of `1, i, -1, -i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn power(self) -> u32 {
        self.0 as u32
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    // I < X < Y < Z, the order of the rendered alphabet.
    fn rank(self) -> u128 {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliTerm {
    n_qubits: usize,
    x: u64,
    z: u64,
}

fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliTerm {
    pub fn new(n_qubits: usize, x: u64, z: u64) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        let m = low_mask(n_qubits);
        if x & !m != 0 || z & !m != 0 {
            return Err(Error::InvalidArgument(format!(
                "masks x={x:#x} z={z:#x} exceed {n_qubits} qubits"
            )));
        }
        Ok(Self { n_qubits, x, z })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::new(n_qubits, 0, 0).expect("identity with invalid qubit count")
    }

    /// A single-qubit Pauli `p` on qubit `k`.
    pub fn single(n_qubits: usize, k: usize, p: Pauli) -> Self {
        assert!(k < n_qubits, "qubit {k} out of range for {n_qubits} qubits");
        let (xb, zb) = p.bits();
        Self {
            n_qubits,
            x: (xb as u64) << k,
            z: (zb as u64) << k,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    /// Number of non-identity tensor factors.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    /// Number of `Y` factors; `P = i^{y_count} X^x Z^z`.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn get(&self, k: usize) -> Pauli {
        Pauli::from_bits(self.x >> k & 1 == 1, self.z >> k & 1 == 1)
    }

    pub fn commutes_with(&self, other: &PauliTerm) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Product `self * other = phase * term`.
    pub fn mul(&self, other: &PauliTerm) -> Result<(Phase, PauliTerm)> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, other.n_qubits));
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &PauliTerm) -> (Phase, PauliTerm) {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // i^{ya} X^xa Z^za i^{yb} X^xb Z^zb, commute Z^za past X^xb, then
        // absorb i^{-yc} into the product string.
        let ya = self.y_count();
        let yb = other.y_count();
        let yc = (x & z).count_ones();
        let swaps = (self.z & other.x).count_ones();
        let power = (ya + yb + 2 * swaps + 4 - yc % 4) % 4;
        (
            Phase::from_power(power),
            PauliTerm {
                n_qubits: self.n_qubits,
                x,
                z,
            },
        )
    }

    /// Action on a computational basis state: `P|b> = phase(b) |b ^ x>`.
    #[inline]
    pub fn apply_to_basis(&self, b: u64) -> (Complex64, u64) {
        let sign = (b & self.z).count_ones() % 2;
        let ph = Phase::from_power(self.y_count() + 2 * sign);
        (ph.to_complex(), b ^ self.x)
    }

    /// Key ordering the terms like their rendered strings (I < X < Y < Z,
    /// qubit `n - 1` most significant).
    fn sort_key(&self) -> u128 {
        let mut key = 0u128;
        for k in (0..self.n_qubits).rev() {
            key = (key << 2) | self.get(k).rank();
        }
        key
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        check_dense(self.n_qubits)?;
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim as u64 {
            let (ph, out) = self.apply_to_basis(b);
            m[(out as usize, b as usize)] = ph;
        }
        Ok(m)
    }
}

impl Ord for PauliTerm {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n_qubits
            .cmp(&other.n_qubits)
            .then_with(|| self.sort_key().cmp(&other.sort_key()))
    }
}

impl PartialOrd for PauliTerm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in (0..self.n_qubits).rev() {
            write!(f, "{}", self.get(k).symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let n = s.chars().count();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::ParsePauli(s.to_string()));
        }
        let mut x = 0u64;
        let mut z = 0u64;
        for (pos, c) in s.chars().enumerate() {
            let k = n - 1 - pos;
            let p = match c.to_ascii_uppercase() {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => return Err(Error::ParsePauli(s.to_string())),
            };
            let (xb, zb) = p.bits();
            x |= (xb as u64) << k;
            z |= (zb as u64) << k;
        }
        PauliTerm::new(n, x, z)
    }
}

impl Serialize for PauliTerm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliTerm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One JSON record of a Pauli sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliEntry {
    pub pauli: String,
    pub re: f64,
    pub im: f64,
}

/// Linear combination of Pauli strings with complex weights.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliTerm, Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_term(term: PauliTerm, weight: Complex64) -> Self {
        let mut s = Self::zero(term.n_qubits);
        s.terms.insert(term, weight);
        s
    }

    /// Builds a sum from `(weight, string)` pairs, merging duplicates.
    /// No truncation is applied.
    pub fn from_strs<'a, I>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Complex64, &'a str)>,
    {
        let mut out: Option<PauliSum> = None;
        for (w, s) in items {
            let t: PauliTerm = s.parse()?;
            let sum = out.get_or_insert_with(|| PauliSum::zero(t.n_qubits));
            sum.add_term(t, w)?;
        }
        out.ok_or_else(|| Error::InvalidArgument("empty term list".into()))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliTerm, &Complex64)> {
        self.terms.iter()
    }

    pub fn terms(&self) -> impl Iterator<Item = &PauliTerm> {
        self.terms.keys()
    }

    pub fn weight(&self, t: &PauliTerm) -> Complex64 {
        self.terms.get(t).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, t: PauliTerm, w: Complex64) -> Result<()> {
        if t.n_qubits != self.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, t.n_qubits));
        }
        *self.terms.entry(t).or_default() += w;
        Ok(())
    }

    fn check_same(&self, other: &PauliSum) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            Err(Error::QubitMismatch(self.n_qubits, other.n_qubits))
        } else {
            Ok(())
        }
    }

    pub fn scale(&self, c: Complex64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(t, w)| (*t, w * c)).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> PauliSum {
        self.scale(Complex64::new(c, 0.0))
    }

    /// `self + c * other`, without truncation.
    pub fn add_scaled(&self, other: &PauliSum, c: Complex64) -> Result<PauliSum> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (t, w) in &other.terms {
            *out.terms.entry(*t).or_default() += w * c;
        }
        Ok(out)
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.add_scaled(other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.add_scaled(other, Complex64::new(-1.0, 0.0))
    }

    /// Operator product `self * other`, truncated at `threshold`.
    pub fn mul(&self, other: &PauliSum, threshold: f64) -> Result<PauliSum> {
        self.check_same(other)?;
        let mut acc: HashMap<PauliTerm, Complex64> = HashMap::new();
        for (a, wa) in &self.terms {
            for (b, wb) in &other.terms {
                let (ph, t) = a.mul_unchecked(b);
                *acc.entry(t).or_default() += wa * wb * ph.to_complex();
            }
        }
        Ok(Self::collect(self.n_qubits, acc, threshold))
    }

    fn collect(n_qubits: usize, acc: HashMap<PauliTerm, Complex64>, threshold: f64) -> PauliSum {
        PauliSum {
            n_qubits,
            terms: acc
                .into_iter()
                .filter(|(_, w)| w.norm() > threshold)
                .collect(),
        }
    }

    /// `[self, other] = self*other - other*self`. Terms with
    /// `|weight| <= threshold` are dropped.
    pub fn commutator(&self, other: &PauliSum, threshold: f64) -> Result<PauliSum> {
        self.check_same(other)?;
        if threshold < 0.0 || threshold.is_nan() {
            return Err(Error::InvalidArgument(format!("threshold {threshold} < 0")));
        }
        const CHUNK: usize = 64;
        let lhs: Vec<(&PauliTerm, &Complex64)> = self.terms.iter().collect();
        let rhs: Vec<(&PauliTerm, &Complex64)> = other.terms.iter().collect();
        let partial = |chunk: &[(&PauliTerm, &Complex64)]| {
            let mut acc: HashMap<PauliTerm, Complex64> = HashMap::new();
            for (a, wa) in chunk {
                for (b, wb) in &rhs {
                    if a.commutes_with(b) {
                        continue;
                    }
                    let (ph, t) = a.mul_unchecked(b);
                    *acc.entry(t).or_default() += 2.0 * *wa * *wb * ph.to_complex();
                }
            }
            acc
        };
        // Chunk boundaries do not depend on the thread count, and partial
        // results are merged in chunk order, so the output is deterministic.
        let partials: Vec<HashMap<PauliTerm, Complex64>> = if lhs.len() * rhs.len() > 1 << 14 {
            lhs.par_chunks(CHUNK).map(partial).collect()
        } else {
            lhs.chunks(CHUNK).map(partial).collect()
        };
        let mut merged: BTreeMap<PauliTerm, Complex64> = BTreeMap::new();
        for p in partials {
            let mut sorted: Vec<_> = p.into_iter().collect();
            sorted.sort_unstable_by_key(|a| a.0);
            for (t, w) in sorted {
                *merged.entry(t).or_default() += w;
            }
        }
        merged.retain(|_, w| w.norm() > threshold);
        Ok(PauliSum {
            n_qubits: self.n_qubits,
            terms: merged,
        })
    }

    /// Normalized Hilbert-Schmidt inner product `Tr[A^dag B] / 2^n`.
    pub fn hs_inner(&self, other: &PauliSum) -> Result<Complex64> {
        self.check_same(other)?;
        let mut acc = Complex64::default();
        for (t, wa) in &self.terms {
            if let Some(wb) = other.terms.get(t) {
                acc += wa.conj() * wb;
            }
        }
        Ok(acc)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|w| w.norm_sqr()).sum()
    }

    /// Drops exact zeros and every weight with magnitude below `threshold`.
    pub fn simplify(&self, threshold: f64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .filter(|(_, w)| {
                    let m = w.norm();
                    m != 0.0 && m >= threshold
                })
                .map(|(t, w)| (*t, *w))
                .collect(),
        }
    }

    pub fn dagger(&self) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(t, w)| (*t, w.conj())).collect(),
        }
    }

    /// All weights real to within `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|w| w.im.abs() <= tol)
    }

    /// All weights imaginary to within `tol`.
    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|w| w.re.abs() <= tol)
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        check_dense(self.n_qubits)?;
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for (t, w) in &self.terms {
            for b in 0..dim as u64 {
                let (ph, out) = t.apply_to_basis(b);
                m[(out as usize, b as usize)] += w * ph;
            }
        }
        Ok(m)
    }

    /// One line per term: `(re,im) PAULI`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (t, w) in &self.terms {
            s.push_str(&format!("({:?},{:?}) {}\n", w.re, w.im, t));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<PauliSum> {
        let mut out: Option<PauliSum> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Schema(format!("line {}: {line:?}", lineno + 1));
            let (w, p) = line.rsplit_once(char::is_whitespace).ok_or_else(bad)?;
            let w = w.trim();
            let inner = w
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(bad)?;
            let (re, im) = inner.split_once(',').ok_or_else(bad)?;
            let re: f64 = re.trim().parse().map_err(|_| bad())?;
            let im: f64 = im.trim().parse().map_err(|_| bad())?;
            let t: PauliTerm = p.parse()?;
            out.get_or_insert_with(|| PauliSum::zero(t.n_qubits))
                .add_term(t, Complex64::new(re, im))?;
        }
        out.ok_or_else(|| Error::Schema("no terms".into()))
    }

    pub fn to_entries(&self) -> Vec<PauliEntry> {
        self.terms
            .iter()
            .map(|(t, w)| PauliEntry {
                pauli: t.to_string(),
                re: w.re,
                im: w.im,
            })
            .collect()
    }

    /// Parses JSON records; `n_qubits` is required so an empty list is valid.
    pub fn from_entries(n_qubits: usize, entries: &[PauliEntry]) -> Result<PauliSum> {
        let mut out = PauliSum::zero(n_qubits);
        for e in entries {
            let t: PauliTerm = e.pauli.parse()?;
            out.add_term(t, Complex64::new(e.re, e.im))?;
        }
        Ok(out)
    }
}
