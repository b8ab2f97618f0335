//! Approximate adiabatic gauge potentials and the operator pools built
//! from them.
//!
//! For `H_ad = (1 - lambda) H_i + lambda H_f` the nested commutators are
//! `O_1 = [H_ad, dH]` with `dH = H_f - H_i`, and `O_{k+1} = [H_ad, O_k]`.
//! Because `O_1 = [H_i, H_f]` exactly, every `O_k` expands into commutator
//! words `[H_{w_1}, [H_{w_2}, ... [H_i, H_f]]]` over the letters `i` and `f`,
//! each weighted by `(1 - lambda)^p lambda^q` where `p` and `q` count the
//! letters. The basis keeps the words separately so a single build serves
//! the static pool (union over words) and every evaluated pool.
//!
//! The order-`l` potential is `A = i sum_{k<=l} alpha_k O_{2k-1}`; the
//! coefficients minimize `|dH - i[H_ad, A]|^2` in the normalized
//! Hilbert-Schmidt norm.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::generator::Generator;
use crate::molham::{build_adiabatic, creation, annihilation, hartree_fock_state, Schedule, Spin, SpinOrdering};
use crate::pauli::{PauliSum, PauliTerm};

pub const DEFAULT_POOL_THRESHOLD: f64 = 1e-6;
pub const POOL_FORMAT: &str = "pool.v1";

/// One commutator word and its lambda weight `(1 - lambda)^p lambda^q`.
#[derive(Clone, Debug)]
pub struct CommutatorWord {
    /// Outer letters, outermost first; `"fi"` is `[H_f, [H_i, [H_i, H_f]]]`.
    pub letters: String,
    pub p: u32,
    pub q: u32,
    pub op: PauliSum,
}

impl CommutatorWord {
    /// Level `k` of `O_k` this word contributes to.
    pub fn level(&self) -> usize {
        self.letters.len() + 1
    }

    pub fn lambda_weight(&self, lambda: f64) -> f64 {
        (1.0 - lambda).powi(self.p as i32) * lambda.powi(self.q as i32)
    }

    pub fn display(&self) -> String {
        let mut s = String::new();
        for c in self.letters.chars() {
            s.push_str(if c == 'i' { "[Hi," } else { "[Hf," });
        }
        s.push_str("[Hi,Hf]");
        for _ in self.letters.chars() {
            s.push(']');
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct NestedCommutatorBasis {
    order: usize,
    threshold: f64,
    h_i: PauliSum,
    h_f: PauliSum,
    /// `levels[k - 1]` holds the words of `O_k`, `k = 1 ..= 2l - 1`.
    levels: Vec<Vec<CommutatorWord>>,
}

impl NestedCommutatorBasis {
    pub fn build(h_i: &PauliSum, h_f: &PauliSum, order: usize, threshold: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("order l must be >= 1".into()));
        }
        if !(threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!("threshold {threshold} < 0")));
        }
        if h_i.is_empty() || h_f.is_empty() {
            return Err(Error::InvalidArgument("empty Hamiltonian".into()));
        }
        if h_i.n_qubits() != h_f.n_qubits() {
            return Err(Error::QubitMismatch(h_i.n_qubits(), h_f.n_qubits()));
        }
        let base = CommutatorWord {
            letters: String::new(),
            p: 0,
            q: 0,
            op: h_i.commutator(h_f, threshold)?,
        };
        let mut levels = vec![vec![base]];
        for _ in 1..(2 * order - 1) {
            let prev = levels.last().expect("nonempty");
            let next: Vec<CommutatorWord> = prev
                .par_iter()
                .flat_map_iter(|w| {
                    [('i', h_i), ('f', h_f)].into_iter().map(move |(letter, h)| {
                        let op = h.commutator(&w.op, threshold)?;
                        let (p, q) = if letter == 'i' { (w.p + 1, w.q) } else { (w.p, w.q + 1) };
                        Ok(CommutatorWord {
                            letters: format!("{letter}{}", w.letters),
                            p,
                            q,
                            op,
                        })
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            levels.push(next);
        }
        Ok(Self {
            order,
            threshold,
            h_i: h_i.clone(),
            h_f: h_f.clone(),
            levels,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_qubits(&self) -> usize {
        self.h_i.n_qubits()
    }

    pub fn h_i(&self) -> &PauliSum {
        &self.h_i
    }

    pub fn h_f(&self) -> &PauliSum {
        &self.h_f
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Words of `O_{2k-1}`, `k = 1 ..= order`.
    pub fn odd_words(&self, k: usize) -> &[CommutatorWord] {
        &self.levels[2 * k - 2]
    }

    /// Words of `O_level`.
    pub fn words(&self, level: usize) -> &[CommutatorWord] {
        &self.levels[level - 1]
    }

    /// `O_{2k-1}` merged by `(p, q)`: the triples `(p, q, sum)`.
    pub fn odd_triples(&self, k: usize) -> Result<Vec<(u32, u32, PauliSum)>> {
        let mut merged: BTreeMap<(u32, u32), PauliSum> = BTreeMap::new();
        for w in self.odd_words(k) {
            let e = merged
                .entry((w.p, w.q))
                .or_insert_with(|| PauliSum::zero(self.n_qubits()));
            *e = e.add(&w.op)?;
        }
        Ok(merged
            .into_iter()
            .map(|((p, q), s)| (p, q, s.simplify(self.threshold)))
            .collect())
    }

    /// `O_{2k-1}` evaluated at `lambda`.
    pub fn odd_op(&self, k: usize, lambda: f64) -> Result<PauliSum> {
        let mut acc = PauliSum::zero(self.n_qubits());
        for w in self.odd_words(k) {
            let c = w.lambda_weight(lambda);
            if c != 0.0 {
                acc = acc.add_scaled(&w.op, Complex64::new(c, 0.0))?;
            }
        }
        Ok(acc.simplify(self.threshold))
    }

    pub fn adiabatic(&self, lambda: f64) -> Result<PauliSum> {
        build_adiabatic(&self.h_i, &self.h_f, lambda)
    }

    pub fn d_lambda_h(&self) -> Result<PauliSum> {
        self.h_f.sub(&self.h_i)
    }

    /// `A^(l)(lambda) = i sum_k alpha_k O_{2k-1}` for the given
    /// coefficients; Hermitian, so weights are real.
    pub fn gauge_potential(&self, lambda: f64, alpha: &[f64]) -> Result<PauliSum> {
        let mut acc = PauliSum::zero(self.n_qubits());
        for (k, a) in alpha.iter().enumerate() {
            if *a != 0.0 {
                let o = self.odd_op(k + 1, lambda)?;
                acc = acc.add_scaled(&o, Complex64::new(0.0, *a))?;
            }
        }
        Ok(acc.simplify(self.threshold))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaStatus {
    Solved,
    Ridge,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSolution {
    pub lambda: f64,
    pub alpha: Vec<f64>,
    /// `|dH + sum_k alpha_k O_{2k}|^2` normalized by `2^n`.
    pub action: f64,
    /// `|M alpha - b| / |b|`.
    pub stationarity: f64,
    pub status: AlphaStatus,
}

/// Solves the normal equations `M alpha = b` with
/// `M_kj = <O_2k, O_2j>` and `b_k = -<O_2k, dH>` at this `lambda`.
pub fn solve_alpha(basis: &NestedCommutatorBasis, lambda: f64) -> Result<AlphaSolution> {
    solve_alpha_order(basis, basis.order(), lambda)
}

/// Like [`solve_alpha`] but truncated to `order <= basis.order()`.
pub fn solve_alpha_order(
    basis: &NestedCommutatorBasis,
    order: usize,
    lambda: f64,
) -> Result<AlphaSolution> {
    check_range("lambda", lambda, 0.0, 1.0)?;
    if order == 0 || order > basis.order() {
        return Err(Error::InvalidArgument(format!(
            "order {order} not in 1..={}",
            basis.order()
        )));
    }
    let h_ad = basis.adiabatic(lambda)?;
    let dh = basis.d_lambda_h()?;
    let evens: Vec<PauliSum> = (1..=order)
        .map(|k| {
            let odd = basis.odd_op(k, lambda)?;
            h_ad.commutator(&odd, basis.threshold())
        })
        .collect::<Result<_>>()?;
    let l = order;
    let mut m = DMatrix::<f64>::zeros(l, l);
    let mut b = DVector::<f64>::zeros(l);
    for i in 0..l {
        for j in i..l {
            let v = evens[i].hs_inner(&evens[j])?.re;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        b[i] = -evens[i].hs_inner(&dh)?.re;
    }
    let action_of = |alpha: &[f64]| -> Result<f64> {
        let mut g = dh.clone();
        for (a, e) in alpha.iter().zip(&evens) {
            g = g.add_scaled(e, Complex64::new(*a, 0.0))?;
        }
        Ok(g.norm_sqr())
    };

    let active: Vec<usize> = (0..l).filter(|&i| m[(i, i)] > 0.0).collect();
    let b_norm = b.norm();
    if active.is_empty() || b_norm == 0.0 {
        log::warn!("degenerate gauge-potential solve at lambda = {lambda}");
        let alpha = vec![0.0; l];
        return Ok(AlphaSolution {
            lambda,
            action: action_of(&alpha)?,
            alpha,
            stationarity: 0.0,
            status: AlphaStatus::Degenerate,
        });
    }

    // Jacobi scaling: the O_2k norms grow geometrically with k.
    let na = active.len();
    let scale: Vec<f64> = active.iter().map(|&i| 1.0 / m[(i, i)].sqrt()).collect();
    let ms = DMatrix::from_fn(na, na, |r, c| m[(active[r], active[c])] * scale[r] * scale[c]);
    let bs = DVector::from_fn(na, |r, _| b[active[r]] * scale[r]);

    let stationarity = |alpha: &[f64]| {
        let a = DVector::from_column_slice(alpha);
        (&m * a - &b).norm() / b_norm
    };
    let expand = |y: &DVector<f64>| {
        let mut alpha = vec![0.0; l];
        for (r, &i) in active.iter().enumerate() {
            alpha[i] = y[r] * scale[r];
        }
        alpha
    };

    let mut status = AlphaStatus::Solved;
    let mut alpha = match ms.clone().cholesky() {
        Some(ch) => expand(&ch.solve(&bs)),
        None => vec![f64::NAN; l],
    };
    let mut ridge = 1e-14;
    while !(stationarity(&alpha) <= 1e-8) {
        if ridge > 1e-4 {
            log::warn!("gauge-potential Gram matrix singular at lambda = {lambda}");
            let zero = vec![0.0; l];
            return Ok(AlphaSolution {
                lambda,
                action: action_of(&zero)?,
                alpha: zero,
                stationarity: 1.0,
                status: AlphaStatus::Degenerate,
            });
        }
        status = AlphaStatus::Ridge;
        let reg = &ms + DMatrix::<f64>::identity(na, na) * ridge;
        alpha = match reg.cholesky() {
            Some(ch) => expand(&ch.solve(&bs)),
            None => vec![f64::NAN; l],
        };
        // A ridge solution of a rank-deficient system is still stationary
        // when b lies in the range of M.
        if status == AlphaStatus::Ridge && stationarity(&alpha) <= 1e-8 {
            break;
        }
        ridge *= 100.0;
    }
    Ok(AlphaSolution {
        lambda,
        action: action_of(&alpha)?,
        stationarity: stationarity(&alpha),
        alpha,
        status,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolKind {
    CdStatic,
    CdTime,
    Fermionic,
}

impl fmt::Display for PoolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoolKind::CdStatic => "cd_static",
            PoolKind::CdTime => "cd_time",
            PoolKind::Fermionic => "fermionic",
        })
    }
}

/// Where a cd-pool generator came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub word: String,
    pub level: usize,
    pub p: u32,
    pub q: u32,
}

#[derive(Clone, Debug)]
pub struct OperatorPool {
    pub kind: PoolKind,
    pub generators: Vec<Generator>,
    /// Parallel to `generators`; empty for fermionic pools.
    pub provenance: Vec<Vec<Source>>,
    pub order: Option<usize>,
    pub t_prime: Option<f64>,
    pub threshold: f64,
}

impl OperatorPool {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn n_qubits(&self) -> Option<usize> {
        self.generators.first().map(Generator::n_qubits)
    }

    pub fn to_file(&self) -> PoolFile {
        PoolFile {
            format: POOL_FORMAT.to_string(),
            kind: self.kind,
            l: self.order,
            t_prime: self.t_prime,
            threshold: self.threshold,
            generators: self.generators.clone(),
        }
    }

    pub fn from_file(file: PoolFile) -> Result<Self> {
        if file.format != POOL_FORMAT {
            return Err(Error::Schema(format!(
                "format {:?}, expected {POOL_FORMAT:?}",
                file.format
            )));
        }
        let n = file.generators.first().map(Generator::n_qubits);
        let mut seen = BTreeSet::new();
        for g in &file.generators {
            if Some(g.n_qubits()) != n {
                return Err(Error::Schema("generators have mixed qubit counts".into()));
            }
            if let Generator::Pauli(p) = g {
                if p.is_identity() {
                    return Err(Error::Schema("identity generator in pool".into()));
                }
                if !seen.insert(*p) {
                    return Err(Error::Schema(format!("duplicate generator {p}")));
                }
            }
        }
        Ok(Self {
            kind: file.kind,
            provenance: Vec::new(),
            generators: file.generators,
            order: file.l,
            t_prime: file.t_prime,
            threshold: file.threshold,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_file())?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: PoolFile =
            serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))?;
        Self::from_file(file)
    }
}

/// `pool.v1` file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolFile {
    pub format: String,
    pub kind: PoolKind,
    pub l: Option<usize>,
    pub t_prime: Option<f64>,
    pub threshold: f64,
    pub generators: Vec<Generator>,
}

fn pool_from_map(
    kind: PoolKind,
    map: BTreeMap<PauliTerm, Vec<Source>>,
    order: usize,
    t_prime: Option<f64>,
    threshold: f64,
) -> OperatorPool {
    let (generators, provenance) = map
        .into_iter()
        .filter(|(t, _)| !t.is_identity())
        .map(|(t, s)| (Generator::Pauli(t), s))
        .unzip();
    OperatorPool {
        kind,
        generators,
        provenance,
        order: Some(order),
        t_prime,
        threshold,
    }
}

fn source_of(w: &CommutatorWord) -> Source {
    Source {
        word: w.display(),
        level: w.level(),
        p: w.p,
        q: w.q,
    }
}

/// Union of the Pauli strings with `|weight| >= pool_threshold` in any word
/// of `O_1, O_3, ..., O_{2l-1}`; lambda weights are not evaluated.
pub fn extract_pool_static(
    basis: &NestedCommutatorBasis,
    order: usize,
    pool_threshold: f64,
) -> Result<OperatorPool> {
    if order == 0 || order > basis.order() {
        return Err(Error::InvalidArgument(format!(
            "order {order} not in 1..={}",
            basis.order()
        )));
    }
    let mut map: BTreeMap<PauliTerm, Vec<Source>> = BTreeMap::new();
    for k in 1..=order {
        for w in basis.odd_words(k) {
            let src = source_of(w);
            for (t, c) in w.op.iter() {
                if c.norm() >= pool_threshold {
                    map.entry(*t).or_default().push(src.clone());
                }
            }
        }
    }
    Ok(pool_from_map(PoolKind::CdStatic, map, order, None, pool_threshold))
}

/// Pool from the odd commutators evaluated at `lambda(t_prime)`: each
/// `O_{2k-1}` is summed over its words first, then pruned.
pub fn extract_pool_time(
    basis: &NestedCommutatorBasis,
    order: usize,
    t_prime: f64,
    schedule: &Schedule,
    pool_threshold: f64,
) -> Result<OperatorPool> {
    if order == 0 || order > basis.order() {
        return Err(Error::InvalidArgument(format!(
            "order {order} not in 1..={}",
            basis.order()
        )));
    }
    let lambda = schedule.lambda(t_prime)?;
    let mut map: BTreeMap<PauliTerm, Vec<Source>> = BTreeMap::new();
    for k in 1..=order {
        let op = basis.odd_op(k, lambda)?;
        for (t, c) in op.iter() {
            if c.norm() >= pool_threshold {
                let sources = basis
                    .odd_words(k)
                    .iter()
                    .filter(|w| w.lambda_weight(lambda) != 0.0 && w.op.weight(t).norm() > 0.0)
                    .map(source_of);
                map.entry(*t).or_default().extend(sources);
            }
        }
    }
    Ok(pool_from_map(
        PoolKind::CdTime,
        map,
        order,
        Some(t_prime),
        pool_threshold,
    ))
}

/// Static pool sizes for `l = 1 ..= basis.order()`.
pub fn pool_sizes_by_order(basis: &NestedCommutatorBasis, pool_threshold: f64) -> Result<Vec<usize>> {
    (1..=basis.order())
        .map(|l| Ok(extract_pool_static(basis, l, pool_threshold)?.len()))
        .collect()
}

/// Spin-conserving singles and doubles relative to the Hartree-Fock
/// reference, as Hermitian generators `i (T - T^dag)` under Jordan-Wigner.
/// `grouped` keeps one generator per excitation; otherwise the distinct
/// Pauli strings become individual generators.
pub fn build_fermionic_pool(
    n_qubits: usize,
    n_electrons: usize,
    ordering: SpinOrdering,
    grouped: bool,
) -> Result<OperatorPool> {
    let hf = hartree_fock_state(n_qubits, n_electrons, ordering)?;
    let spin = |q: usize| ordering.spin_orbital(n_qubits, q).1;
    let occ: Vec<usize> = (0..n_qubits).filter(|&q| hf.get(q)).collect();
    let vir: Vec<usize> = (0..n_qubits).filter(|&q| !hf.get(q)).collect();

    let mut excitations: Vec<(String, PauliSum)> = Vec::new();
    for &i in &occ {
        for &a in &vir {
            if spin(i) == spin(a) {
                let t = creation(n_qubits, a).mul(&annihilation(n_qubits, i), 0.0)?;
                excitations.push((format!("a{a}^ a{i}"), t));
            }
        }
    }
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            for (y, &a) in vir.iter().enumerate() {
                for &b in &vir[y + 1..] {
                    let same = |s: Spin| [i, j].iter().filter(|&&q| spin(q) == s).count()
                        == [a, b].iter().filter(|&&q| spin(q) == s).count();
                    if !same(Spin::Alpha) {
                        continue;
                    }
                    let t = creation(n_qubits, a)
                        .mul(&creation(n_qubits, b), 0.0)?
                        .mul(&annihilation(n_qubits, j), 0.0)?
                        .mul(&annihilation(n_qubits, i), 0.0)?;
                    excitations.push((format!("a{a}^ a{b}^ a{j} a{i}"), t));
                }
            }
        }
    }

    let mut generators = Vec::new();
    let mut strings = BTreeSet::new();
    for (label, t) in excitations {
        // i (T - T^dag)
        let g = t
            .sub(&t.dagger())?
            .scale(Complex64::new(0.0, 1.0))
            .simplify(1e-12);
        if g.is_empty() {
            continue;
        }
        if grouped {
            generators.push(Generator::grouped(format!("{label} - h.c."), &g)?);
        } else {
            strings.extend(g.terms().copied());
        }
    }
    if !grouped {
        generators = strings.into_iter().map(Generator::Pauli).collect();
    }
    Ok(OperatorPool {
        kind: PoolKind::Fermionic,
        generators,
        provenance: Vec::new(),
        order: None,
        t_prime: None,
        threshold: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sum(items: &[(f64, &str)]) -> PauliSum {
        PauliSum::from_strs(items.iter().map(|(w, p)| (c(*w), *p))).unwrap()
    }

    #[test]
    fn word_structure() {
        let h_i = sum(&[(1.0, "IZ"), (-1.0, "ZI")]);
        let h_f = sum(&[(0.4, "XX"), (0.3, "ZI"), (0.2, "YY")]);
        let b = NestedCommutatorBasis::build(&h_i, &h_f, 2, 1e-12).unwrap();
        assert_eq!(b.odd_words(1).len(), 1);
        let w2: Vec<String> = b.odd_words(2).iter().map(|w| w.display()).collect();
        assert_eq!(
            w2,
            [
                "[Hi,[Hi,[Hi,Hf]]]",
                "[Hf,[Hi,[Hi,Hf]]]",
                "[Hi,[Hf,[Hi,Hf]]]",
                "[Hf,[Hf,[Hi,Hf]]]"
            ]
        );
        let pq: Vec<(u32, u32)> = b.odd_words(2).iter().map(|w| (w.p, w.q)).collect();
        assert_eq!(pq, [(2, 0), (1, 1), (1, 1), (0, 2)]);
        assert_eq!(b.odd_triples(2).unwrap().len(), 3);
    }

    #[test]
    fn commuting_inputs_give_nothing() {
        let h = sum(&[(1.0, "ZI"), (0.5, "ZZ")]);
        let b = NestedCommutatorBasis::build(&h, &h, 1, 0.0).unwrap();
        assert!(b.odd_words(1)[0].op.is_empty());
        let sol = solve_alpha(&b, 0.3).unwrap();
        assert_eq!(sol.status, AlphaStatus::Degenerate);
        assert_eq!(sol.alpha, vec![0.0]);
        assert!(extract_pool_static(&b, 1, 1e-6).unwrap().is_empty());
    }

    #[test]
    fn diagonal_problem_has_empty_pool() {
        let h_i = sum(&[(1.0, "IZ"), (-1.0, "ZI")]);
        let h_f = sum(&[(0.7, "ZZ"), (0.1, "IZ")]);
        let b = NestedCommutatorBasis::build(&h_i, &h_f, 3, 1e-10).unwrap();
        assert!(extract_pool_static(&b, 3, 1e-6).unwrap().is_empty());
    }

    #[test]
    fn build_rejects_bad_input() {
        let h = sum(&[(1.0, "Z")]);
        assert!(NestedCommutatorBasis::build(&h, &h, 0, 0.0).is_err());
        assert!(NestedCommutatorBasis::build(&h, &h, 1, -1.0).is_err());
        assert!(NestedCommutatorBasis::build(&PauliSum::zero(1), &h, 1, 0.0).is_err());
    }

    #[test]
    fn two_level_alpha_closed_form() {
        let b = NestedCommutatorBasis::build(&sum(&[(1.0, "Z")]), &sum(&[(1.0, "X")]), 1, 0.0)
            .unwrap();
        for lambda in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let sol = solve_alpha(&b, lambda).unwrap();
            let expect = -1.0 / (4.0 * ((1.0 - lambda).powi(2) + lambda * lambda));
            assert!((sol.alpha[0] - expect).abs() < 1e-14);
            // Only the part of dH along H_ad survives.
            let r = (2.0 * lambda - 1.0).powi(2) / ((1.0 - lambda).powi(2) + lambda * lambda);
            assert!((sol.action - r).abs() < 1e-14);
        }
    }

    #[test]
    fn time_pool_at_lambda_zero() {
        let h_i = sum(&[(1.0, "IZ"), (-1.0, "ZI")]);
        let h_f = sum(&[(0.4, "XX"), (0.3, "ZI"), (0.2, "YZ")]);
        let b = NestedCommutatorBasis::build(&h_i, &h_f, 2, 1e-12).unwrap();
        let pool = extract_pool_time(&b, 2, 0.0, &Schedule::default(), 1e-9).unwrap();
        for src in pool.provenance.iter().flatten() {
            assert_eq!(src.q, 0, "{src:?}");
        }
        assert_eq!(pool.kind, PoolKind::CdTime);
    }

    #[test]
    fn single_excitation_two_orbitals() {
        // Two spin-orbitals with one electron: only a single fits, so use
        // the raw ladder algebra instead of a spin-resolved pool.
        let t = creation(2, 1).mul(&annihilation(2, 0), 0.0).unwrap();
        let g = t.sub(&t.dagger()).unwrap().scale(Complex64::new(0.0, 1.0)).simplify(1e-14);
        let expect = sum(&[(0.5, "YX"), (-0.5, "XY")]);
        assert_eq!(g.len(), 2);
        for (p, w) in expect.iter() {
            assert!((g.weight(p) - w).norm() < 1e-15);
        }
    }

    #[test]
    fn fermionic_pool_edge_cases() {
        assert!(build_fermionic_pool(4, 0, SpinOrdering::Block, true).unwrap().is_empty());
        assert!(build_fermionic_pool(4, 4, SpinOrdering::Block, true).unwrap().is_empty());
        let p = build_fermionic_pool(4, 2, SpinOrdering::Block, true).unwrap();
        let labels: Vec<String> = p.generators.iter().map(|g| g.to_string()).collect();
        assert_eq!(labels, ["a1^ a0 - h.c.", "a3^ a2 - h.c.", "a1^ a3^ a2 a0 - h.c."]);
        assert_eq!(p.generators[2].pauli_terms().len(), 8);
        let flat = build_fermionic_pool(4, 2, SpinOrdering::Block, false).unwrap();
        assert_eq!(flat.len(), 12);
    }

    #[test]
    fn pool_file_validation() {
        let file = PoolFile {
            format: POOL_FORMAT.into(),
            kind: PoolKind::CdStatic,
            l: Some(1),
            t_prime: None,
            threshold: 1e-6,
            generators: vec![Generator::Pauli("XY".parse().unwrap()); 2],
        };
        assert!(OperatorPool::from_file(file.clone()).is_err());
        let mut ok = file;
        ok.generators.pop();
        let pool = OperatorPool::from_file(ok.clone()).unwrap();
        assert_eq!(pool.to_file(), ok);
    }
}
