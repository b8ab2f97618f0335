//! Digitized counterdiabatic evolution in the impulse regime, where the
//! dynamics is dominated by `lambda_dot A_lambda`, and the CNOT cost model
//! used to compare circuits.
//!
//! Step `k` of `N_t` applies `exp(-i lambda_dot(k dt) a_j(k dt) dt P_j)` for
//! every string `P_j` of the gauge potential, in canonical order. The grid
//! is `t = k dt`, `k = 1..=N_t`, so the last step sits at `lambda_dot(T) = 0`
//! and rotates by zero.

use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::agp::{solve_alpha_order, AlphaStatus, NestedCommutatorBasis};
use crate::engine::AnsatzState;
use crate::error::{Error, Result};
use crate::molham::Schedule;
use crate::pauli::PauliTerm;
use crate::statevector::{rotate_raw, StateVector};

pub const CNOT_MODEL: &str = "staircase-2(w-1)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub pauli: PauliTerm,
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrotterStep {
    pub step: usize,
    pub t: f64,
    pub lambda: f64,
    pub lambda_dot: f64,
    pub alpha: Vec<f64>,
    pub alpha_status: AlphaStatus,
    pub rotations: Vec<Rotation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrotterPlan {
    pub total_time: f64,
    pub n_steps: usize,
    pub dt: f64,
    pub order: usize,
    pub n_qubits: usize,
    pub steps: Vec<TrotterStep>,
}

/// One row of the flat plan dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub step: usize,
    pub pauli: PauliTerm,
    pub angle: f64,
}

impl TrotterPlan {
    pub fn entries(&self) -> Vec<PlanEntry> {
        self.steps
            .iter()
            .flat_map(|s| {
                s.rotations.iter().map(move |r| PlanEntry {
                    step: s.step,
                    pauli: r.pauli,
                    angle: r.angle,
                })
            })
            .collect()
    }

    pub fn n_rotations(&self) -> usize {
        self.steps.iter().map(|s| s.rotations.len()).sum()
    }
}

/// Rotations `(P_j, lambda_dot a_j dt)` for `A = sum_j a_j P_j` at one
/// grid point, dropping `|a_j| < pool_threshold`.
pub fn step_rotations(
    basis: &NestedCommutatorBasis,
    lambda: f64,
    lambda_dot: f64,
    alpha: &[f64],
    dt: f64,
    pool_threshold: f64,
) -> Result<Vec<Rotation>> {
    let a = basis.gauge_potential(lambda, alpha)?;
    let mut out = Vec::with_capacity(a.len());
    for (p, w) in a.iter() {
        if p.is_identity() || w.re.abs() < pool_threshold {
            continue;
        }
        if w.im.abs() > 1e-9 * w.re.abs().max(1.0) {
            return Err(Error::NonHermitian(format!("gauge potential weight {w} on {p}")));
        }
        let angle = lambda_dot * w.re * dt;
        if !angle.is_finite() {
            return Err(Error::Numerical(format!("non-finite angle on {p}")));
        }
        out.push(Rotation { pauli: *p, angle });
    }
    Ok(out)
}

pub fn plan_dcqo(
    basis: &NestedCommutatorBasis,
    order: usize,
    schedule: &Schedule,
    n_steps: usize,
    pool_threshold: f64,
) -> Result<TrotterPlan> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("N_t must be >= 1".into()));
    }
    let total = schedule.total_time;
    let dt = total / n_steps as f64;
    let mut steps = Vec::with_capacity(n_steps);
    for k in 1..=n_steps {
        // Hit T exactly on the last step.
        let t = if k == n_steps { total } else { k as f64 * dt };
        let (lambda, lambda_dot) = schedule.eval(t)?;
        let sol = solve_alpha_order(basis, order, lambda)?;
        if sol.status == AlphaStatus::Degenerate {
            log::warn!("step {k}: degenerate gauge potential, zero angles");
        }
        let rotations = step_rotations(basis, lambda, lambda_dot, &sol.alpha, dt, pool_threshold)?;
        steps.push(TrotterStep {
            step: k,
            t,
            lambda,
            lambda_dot,
            alpha: sol.alpha,
            alpha_status: sol.status,
            rotations,
        });
    }
    Ok(TrotterPlan {
        total_time: total,
        n_steps,
        dt,
        order,
        n_qubits: basis.n_qubits(),
        steps,
    })
}

pub fn execute_plan(plan: &TrotterPlan, psi0: &StateVector) -> Result<StateVector> {
    if plan.n_qubits != psi0.n_qubits() {
        return Err(Error::QubitMismatch(plan.n_qubits, psi0.n_qubits()));
    }
    let mut amps = psi0.amplitudes().to_vec();
    for s in &plan.steps {
        for r in &s.rotations {
            rotate_raw(&mut amps, &r.pauli, r.angle);
        }
    }
    Ok(StateVector::from_raw(amps))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub cnot_count: usize,
    pub single_qubit_count: usize,
    pub parameter_count: usize,
    pub n_exponentials: usize,
    pub model: String,
}

impl Add for ResourceEstimate {
    type Output = ResourceEstimate;

    fn add(self, rhs: Self) -> Self {
        ResourceEstimate {
            cnot_count: self.cnot_count + rhs.cnot_count,
            single_qubit_count: self.single_qubit_count + rhs.single_qubit_count,
            parameter_count: self.parameter_count + rhs.parameter_count,
            n_exponentials: self.n_exponentials + rhs.n_exponentials,
            model: CNOT_MODEL.to_string(),
        }
    }
}

/// A circuit of Pauli exponentials.
pub trait Circuit {
    fn exponentials(&self) -> Vec<PauliTerm>;
    fn parameter_count(&self) -> usize;
}

impl Circuit for TrotterPlan {
    fn exponentials(&self) -> Vec<PauliTerm> {
        self.steps
            .iter()
            .flat_map(|s| s.rotations.iter().map(|r| r.pauli))
            .collect()
    }

    fn parameter_count(&self) -> usize {
        0
    }
}

impl Circuit for AnsatzState {
    fn exponentials(&self) -> Vec<PauliTerm> {
        self.generators()
            .iter()
            .flat_map(|g| g.pauli_terms().into_iter().map(|(p, _)| p))
            .collect()
    }

    fn parameter_count(&self) -> usize {
        self.len()
    }
}

/// CNOTs of one exponential under the staircase construction.
pub fn cnots_for(p: &PauliTerm) -> usize {
    2 * p.weight().saturating_sub(1)
}

/// Basis changes on both sides of every X or Y factor, plus one Rz.
pub fn single_qubit_gates_for(p: &PauliTerm) -> usize {
    if p.is_identity() {
        return 0;
    }
    let non_z = p.weight() - (p.z_mask() & !p.x_mask()).count_ones() as usize;
    2 * non_z + 1
}

pub fn estimate_resources<C: Circuit + ?Sized>(circuit: &C) -> ResourceEstimate {
    let mut est = ResourceEstimate {
        parameter_count: circuit.parameter_count(),
        model: CNOT_MODEL.to_string(),
        ..Default::default()
    };
    for p in circuit.exponentials() {
        if p.is_identity() {
            continue;
        }
        est.cnot_count += cnots_for(&p);
        est.single_qubit_count += single_qubit_gates_for(&p);
        est.n_exponentials += 1;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliSum;
    use num_complex::Complex64;

    fn t(s: &str) -> PauliTerm {
        s.parse().unwrap()
    }

    fn toy() -> NestedCommutatorBasis {
        let z = PauliSum::from_term(t("Z"), Complex64::new(1.0, 0.0));
        let x = PauliSum::from_term(t("X"), Complex64::new(1.0, 0.0));
        NestedCommutatorBasis::build(&z, &x, 1, 0.0).unwrap()
    }

    #[test]
    fn staircase_counts() {
        assert_eq!(cnots_for(&t("IZZ")), 2);
        assert_eq!(cnots_for(&t("IYI")), 0);
        assert_eq!(cnots_for(&t("XYZX")), 6);
        assert_eq!(single_qubit_gates_for(&t("XYZI")), 5);
        assert_eq!(single_qubit_gates_for(&t("III")), 0);
    }

    #[test]
    fn one_step_is_inert() {
        let plan = plan_dcqo(&toy(), 1, &Schedule::default(), 1, 1e-6).unwrap();
        assert_eq!(plan.steps.len(), 1);
        assert!(plan.steps[0].rotations.iter().all(|r| r.angle == 0.0));
        let psi = StateVector::basis(&"1".parse().unwrap());
        assert_eq!(execute_plan(&plan, &psi).unwrap(), psi);
    }

    #[test]
    fn angles_scale_with_dt() {
        let b = toy();
        let one = step_rotations(&b, 0.3, 1.2, &[-0.4], 0.1, 0.0).unwrap();
        let two = step_rotations(&b, 0.3, 1.2, &[-0.4], 0.2, 0.0).unwrap();
        for (a, c) in one.iter().zip(&two) {
            assert_eq!(a.pauli, c.pauli);
            assert!((2.0 * a.angle - c.angle).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_step_count_rejected() {
        assert!(plan_dcqo(&toy(), 1, &Schedule::default(), 0, 1e-6).is_err());
    }
}
