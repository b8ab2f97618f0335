//! ADAPT-VQE: gradient screening over a pool, greedy operator growth, and
//! full re-optimization of the ansatz after every addition.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::molham::{Bitstring, MolecularProblem};
use crate::optimize::{minimize, Bounds, LbfgsConfig, OptStatus};
use crate::statevector::{dot, PauliOperator, StateVector};

/// Gradients whose magnitudes agree to this relative tolerance tie.
const TIE_RTOL: f64 = 1e-12;
const STAGNATION_THETA: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Lowest canonical generator order.
    #[default]
    Canonical,
    /// Lowest pool index.
    PoolOrder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub optimizer: LbfgsConfig,
    /// Starting value of each newly appended parameter.
    pub initial_theta: f64,
    pub tie_break: TieBreak,
    /// Compare analytic parameter gradients with central differences on
    /// the first few iterations.
    pub check_gradients: bool,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-2,
            max_iterations: 200,
            optimizer: LbfgsConfig::default(),
            initial_theta: 0.0,
            tie_break: TieBreak::Canonical,
            check_gradients: false,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("epsilon {} must be > 0", self.epsilon)));
        }
        Ok(())
    }
}

/// Ordered generators with their parameters, applied to a reference
/// basis state as `... exp(-i theta_2 G_2) exp(-i theta_1 G_1) |ref>`.
#[derive(Clone, Debug)]
pub struct AnsatzState {
    reference: Bitstring,
    generators: Vec<Generator>,
    thetas: Vec<f64>,
    state: StateVector,
}

impl AnsatzState {
    pub fn new(reference: Bitstring) -> Self {
        Self {
            state: StateVector::basis(&reference),
            reference,
            generators: Vec::new(),
            thetas: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn reference(&self) -> &Bitstring {
        &self.reference
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn parameters(&self) -> &[f64] {
        &self.thetas
    }

    /// Cached state for the current parameters.
    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn push(&mut self, g: Generator, theta: f64) -> Result<()> {
        if g.n_qubits() != self.reference.n_qubits() {
            return Err(Error::QubitMismatch(g.n_qubits(), self.reference.n_qubits()));
        }
        self.generators.push(g);
        self.thetas.push(theta);
        self.state = self.prepare(&self.thetas)?;
        Ok(())
    }

    pub fn set_parameters(&mut self, thetas: &[f64]) -> Result<()> {
        self.state = self.prepare(thetas)?;
        self.thetas = thetas.to_vec();
        Ok(())
    }

    /// Replays the exponentials from the reference.
    pub fn prepare(&self, thetas: &[f64]) -> Result<StateVector> {
        Ok(StateVector::from_raw(self.prepare_raw(thetas)?))
    }

    fn prepare_raw(&self, thetas: &[f64]) -> Result<Vec<Complex64>> {
        if thetas.len() != self.generators.len() {
            return Err(Error::Dimension(format!(
                "{} parameters for {} generators",
                thetas.len(),
                self.generators.len()
            )));
        }
        let mut amps = StateVector::basis(&self.reference).amplitudes().to_vec();
        for (g, t) in self.generators.iter().zip(thetas) {
            g.apply_exp(&mut amps, *t);
        }
        Ok(amps)
    }

    /// Energy and its parameter gradient by one forward and one reverse
    /// sweep.
    pub fn energy_and_gradient(&self, h: &PauliOperator, thetas: &[f64]) -> Result<(f64, Vec<f64>)> {
        if h.n_qubits() != self.reference.n_qubits() {
            return Err(Error::QubitMismatch(h.n_qubits(), self.reference.n_qubits()));
        }
        let mut phi = self.prepare_raw(thetas)?;
        let mut lam = h.apply(&phi);
        let energy = dot(&phi, &lam).re;
        let mut grad = vec![0.0; thetas.len()];
        for j in (0..thetas.len()).rev() {
            let g = &self.generators[j];
            grad[j] = 2.0 * g.matrix_element(&lam, &phi).im;
            if j > 0 {
                g.apply_exp(&mut phi, -thetas[j]);
                g.apply_exp(&mut lam, -thetas[j]);
            }
        }
        Ok((energy, grad))
    }

    pub fn energy(&self, h: &PauliOperator, thetas: &[f64]) -> Result<f64> {
        let phi = self.prepare_raw(thetas)?;
        Ok(dot(&phi, &h.apply(&phi)).re)
    }

    pub fn bounds(&self) -> Bounds {
        let mut b = Bounds::unbounded(self.len());
        for (i, g) in self.generators.iter().enumerate() {
            if g.is_periodic() {
                b.lower[i] = -PI;
                b.upper[i] = PI;
            }
        }
        b
    }
}

/// `dE/dtheta` at `theta = 0` for appending each generator to `psi`.
pub fn screen_pool(psi: &StateVector, h: &PauliOperator, pool: &[Generator]) -> Result<Vec<f64>> {
    if h.n_qubits() != psi.n_qubits() {
        return Err(Error::QubitMismatch(h.n_qubits(), psi.n_qubits()));
    }
    if let Some(g) = pool.iter().find(|g| g.n_qubits() != psi.n_qubits()) {
        return Err(Error::QubitMismatch(g.n_qubits(), psi.n_qubits()));
    }
    let amps = psi.amplitudes();
    let h_psi = h.apply(amps);
    Ok(pool
        .par_iter()
        .map(|g| 2.0 * g.matrix_element(&h_psi, amps).im)
        .collect())
}

pub fn gradient_norm(g: &[f64]) -> f64 {
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn canonical_cmp(a: &Generator, b: &Generator) -> Ordering {
    let ka: Vec<_> = a.pauli_terms().into_iter().map(|(p, _)| p).collect();
    let kb: Vec<_> = b.pauli_terms().into_iter().map(|(p, _)| p).collect();
    ka.cmp(&kb).then_with(|| a.to_string().cmp(&b.to_string()))
}

/// Index of the largest `|g_j|`, `None` for an empty vector.
pub fn select_operator(g: &[f64], pool: &[Generator], rule: TieBreak) -> Option<usize> {
    let max = g.iter().map(|v| v.abs()).fold(f64::NEG_INFINITY, f64::max);
    if g.is_empty() || max.is_nan() {
        return None;
    }
    let cut = max * (1.0 - TIE_RTOL);
    let mut tied = (0..g.len()).filter(|&j| g[j].abs() >= cut);
    let first = tied.next()?;
    Some(match rule {
        TieBreak::PoolOrder => first,
        TieBreak::Canonical => tied.fold(first, |best, j| {
            if canonical_cmp(&pool[j], &pool[best]) == Ordering::Less {
                j
            } else {
                best
            }
        }),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub energy: f64,
    pub status: OptStatus,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Re-optimizes every parameter of `ansatz`, starting from the current
/// values. The ansatz is updated in place; the returned energy excludes
/// any constant offset.
pub fn vqe_minimize(ansatz: &mut AnsatzState, h: &PauliOperator, cfg: &LbfgsConfig) -> Result<VqeResult> {
    if ansatz.is_empty() {
        return Err(Error::InvalidArgument("vqe on an empty ansatz".into()));
    }
    let start = ansatz.parameters().to_vec();
    let e_start = ansatz.energy(h, &start)?;
    let mut failure = None;
    let res = minimize(
        |x| match ansatz.energy_and_gradient(h, x) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                (f64::NAN, vec![0.0; x.len()])
            }
        },
        &start,
        &ansatz.bounds(),
        cfg,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if !res.f.is_finite() {
        return Err(Error::Numerical("non-finite energy during optimization".into()));
    }
    match res.status {
        OptStatus::GradientTolerance | OptStatus::EnergyTolerance => {}
        other => {
            let pg = res.grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
            if pg > 1e-6 {
                log::warn!("optimizer stopped with {other:?}, |grad|_inf = {pg:.3e}");
            } else {
                log::debug!("optimizer stopped with {other:?} at |grad|_inf = {pg:.3e}");
            }
        }
    }
    let (x, energy) = if res.f <= e_start { (res.x, res.f) } else { (start, e_start) };
    ansatz.set_parameters(&x)?;
    Ok(VqeResult {
        energy,
        status: res.status,
        iterations: res.iterations,
        evaluations: res.evaluations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptStatus {
    Converged,
    MaxIterations,
    Stagnated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `|g|_2` over the pool before the selection.
    pub gradient_norm: f64,
    pub max_gradient: f64,
    pub generator: String,
    pub pool_index: usize,
    pub n_params: usize,
    /// Total energy after re-optimization, offset included.
    pub energy: f64,
    pub optimizer_status: OptStatus,
    pub optimizer_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct AdaptRun {
    pub ansatz: AnsatzState,
    pub status: AdaptStatus,
    /// Reference energy, offset included.
    pub hf_energy: f64,
    /// Final energy, offset included.
    pub energy: f64,
    pub final_gradient_norm: f64,
    pub iterations: Vec<IterationRecord>,
    /// Largest analytic-vs-central-difference gap seen, when checked.
    pub gradient_check: Option<f64>,
}

/// Central-difference parameter gradient with step `h`.
pub fn finite_difference_gradient(
    ansatz: &AnsatzState,
    op: &PauliOperator,
    thetas: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(thetas.len());
    let mut x = thetas.to_vec();
    for j in 0..thetas.len() {
        x[j] = thetas[j] + h;
        let ep = ansatz.energy(op, &x)?;
        x[j] = thetas[j] - h;
        let em = ansatz.energy(op, &x)?;
        x[j] = thetas[j];
        out.push((ep - em) / (2.0 * h));
    }
    Ok(out)
}

const GRADIENT_CHECKS: usize = 3;

pub fn run_adapt(problem: &MolecularProblem, pool: &[Generator], cfg: &AdaptConfig) -> Result<AdaptRun> {
    cfg.validate()?;
    let n = problem.n_qubits();
    if let Some(g) = pool.iter().find(|g| g.n_qubits() != n) {
        return Err(Error::QubitMismatch(g.n_qubits(), n));
    }
    let h = PauliOperator::new(&problem.h_f)?;
    let offset = problem.e_offset;
    let mut ansatz = AnsatzState::new(problem.hf_bits);
    let hf_energy = ansatz.state().expectation(&h)? + offset;
    let mut energy = hf_energy;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut gradient_check: Option<f64> = None;
    let mut last: Option<(usize, f64)> = None;

    let mut status = AdaptStatus::MaxIterations;
    let mut final_norm = f64::NAN;
    for iteration in 1..=cfg.max_iterations + 1 {
        let g = screen_pool(ansatz.state(), &h, pool)?;
        let norm = gradient_norm(&g);
        final_norm = norm;
        if norm <= cfg.epsilon {
            status = AdaptStatus::Converged;
            break;
        }
        if iteration > cfg.max_iterations {
            break;
        }
        let k = select_operator(&g, pool, cfg.tie_break).expect("nonempty gradient");
        if let Some((prev, moved)) = last {
            if prev == k && moved < STAGNATION_THETA {
                log::warn!(
                    "generator {} selected twice without moving its parameter; stopping",
                    pool[k]
                );
                status = AdaptStatus::Stagnated;
                break;
            }
        }
        ansatz.push(pool[k].clone(), cfg.initial_theta)?;
        let vqe = vqe_minimize(&mut ansatz, &h, &cfg.optimizer)?;
        let new_energy = vqe.energy + offset;
        if new_energy > energy + 1e-10 {
            return Err(Error::Numerical(format!(
                "energy rose from {energy} to {new_energy} at iteration {iteration}"
            )));
        }
        energy = new_energy;
        let moved = (ansatz.parameters()[ansatz.len() - 1] - cfg.initial_theta).abs();
        last = Some((k, moved));

        if cfg.check_gradients && iteration <= GRADIENT_CHECKS {
            let x = ansatz.parameters().to_vec();
            let (_, analytic) = ansatz.energy_and_gradient(&h, &x)?;
            let fd = finite_difference_gradient(&ansatz, &h, &x, 1e-5)?;
            let gap = analytic
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            gradient_check = Some(gradient_check.unwrap_or(0.0).max(gap));
        }

        log::info!(
            "iter {iteration}: |g| = {norm:.3e}, added {}, E = {energy:.12}",
            pool[k]
        );
        records.push(IterationRecord {
            iteration,
            gradient_norm: norm,
            max_gradient: g[k].abs(),
            generator: pool[k].to_string(),
            pool_index: k,
            n_params: ansatz.len(),
            energy,
            optimizer_status: vqe.status,
            optimizer_iterations: vqe.iterations,
        });
    }
    Ok(AdaptRun {
        ansatz,
        status,
        hf_energy,
        energy,
        final_gradient_norm: final_norm,
        iterations: records,
        gradient_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{PauliSum, PauliTerm};

    fn op(items: &[(f64, &str)]) -> PauliOperator {
        let s = PauliSum::from_strs(items.iter().map(|(w, p)| (Complex64::new(*w, 0.0), *p))).unwrap();
        PauliOperator::new(&s).unwrap()
    }

    fn pg(s: &str) -> Generator {
        Generator::Pauli(s.parse::<PauliTerm>().unwrap())
    }

    #[test]
    fn select_largest_magnitude() {
        let pool = [pg("X"), pg("Y"), pg("Z")];
        assert_eq!(select_operator(&[0.1, -0.5, 0.2], &pool, TieBreak::Canonical), Some(1));
        assert_eq!(select_operator(&[], &[], TieBreak::Canonical), None);
    }

    #[test]
    fn ties_follow_the_rule() {
        let pool = [pg("ZY"), pg("XY"), pg("YX")];
        let g = [0.3, -0.3, 0.3];
        assert_eq!(select_operator(&g, &pool, TieBreak::Canonical), Some(1));
        assert_eq!(select_operator(&g, &pool, TieBreak::PoolOrder), Some(0));
    }

    #[test]
    fn single_generator_vqe() {
        let h = op(&[(1.0, "Z")]);
        let mut a = AnsatzState::new("0".parse().unwrap());
        a.push(pg("Y"), 0.0).unwrap();
        // theta = 0 is a stationary point of cos(2 theta); nudge it.
        a.set_parameters(&[1e-3]).unwrap();
        let r = vqe_minimize(&mut a, &h, &LbfgsConfig::default()).unwrap();
        assert!((r.energy + 1.0).abs() < 1e-12);
        assert!((a.parameters()[0].abs() - PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn reoptimizing_never_raises_energy() {
        let h = op(&[(0.7, "ZI"), (0.3, "XX"), (-0.2, "YZ")]);
        let mut a = AnsatzState::new("01".parse().unwrap());
        a.push(pg("XY"), 0.2).unwrap();
        a.push(pg("YI"), -0.1).unwrap();
        let cfg = LbfgsConfig::default();
        let e1 = vqe_minimize(&mut a, &h, &cfg).unwrap().energy;
        let e2 = vqe_minimize(&mut a, &h, &cfg).unwrap().energy;
        assert!(e2 <= e1);
    }

    #[test]
    fn commuting_pool_screens_to_zero() {
        let h = op(&[(1.0, "ZI"), (0.4, "ZZ")]);
        let psi = StateVector::basis(&"10".parse().unwrap());
        let g = screen_pool(&psi, &h, &[pg("ZI"), pg("IZ"), pg("ZZ")]).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn gradient_norm_is_euclidean() {
        assert_eq!(gradient_norm(&[3.0, -4.0, 0.0]), 5.0);
    }

    #[test]
    fn adjoint_gradient_matches_differences() {
        let h = op(&[(0.7, "ZIX"), (0.3, "XXI"), (-0.2, "YZY"), (0.5, "IIZ")]);
        let mut a = AnsatzState::new("011".parse().unwrap());
        for s in ["XYI", "IYZ", "YXX"] {
            a.push(pg(s), 0.0).unwrap();
        }
        let x = [0.3, -1.1, 0.45];
        let (_, g) = a.energy_and_gradient(&h, &x).unwrap();
        let fd = finite_difference_gradient(&a, &h, &x, 1e-5).unwrap();
        for (u, v) in g.iter().zip(&fd) {
            assert!((u - v).abs() < 1e-8, "{g:?} vs {fd:?}");
        }
    }
}
