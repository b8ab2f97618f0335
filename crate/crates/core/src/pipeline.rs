//! End-to-end runs: build the pool or plan a method needs, execute it on a
//! problem, and package the outcome as a [`RunReport`].

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::agp::{
    build_fermionic_pool, extract_pool_static, extract_pool_time, NestedCommutatorBasis,
    OperatorPool, DEFAULT_POOL_THRESHOLD,
};
use crate::digitize::{estimate_resources, execute_plan, plan_dcqo, ResourceEstimate, CNOT_MODEL};
use crate::engine::{run_adapt, AdaptConfig, AdaptStatus};
use crate::error::{Error, Result};
use crate::molham::{MolecularProblem, Schedule, ScheduleForm};
use crate::pauli::DEFAULT_ALGEBRA_THRESHOLD;
use crate::report::{Method, RunReport};
use crate::statevector::{exact_ground, PauliOperator, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolChoice {
    Cd,
    Fermionic,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    pub method: Method,
    pub pool_kind: PoolChoice,
    /// Pool file used instead of building one.
    pub pool_file: Option<String>,
    pub l: usize,
    /// Evaluate the cd pool at this time instead of taking the static union.
    pub t_prime: Option<f64>,
    pub pool_threshold: f64,
    pub algebra_threshold: f64,
    pub grouped_fermionic: bool,
    pub epsilon: f64,
    pub max_iter: usize,
    pub trotter: usize,
    pub total_time: f64,
    pub schedule: ScheduleForm,
    pub seed: u64,
    pub check_gradients: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        let adapt = AdaptConfig::default();
        Self {
            method: Method::CdAdapt,
            pool_kind: PoolChoice::Cd,
            pool_file: None,
            l: 1,
            t_prime: None,
            pool_threshold: DEFAULT_POOL_THRESHOLD,
            algebra_threshold: DEFAULT_ALGEBRA_THRESHOLD,
            grouped_fermionic: true,
            epsilon: adapt.epsilon,
            max_iter: adapt.max_iterations,
            trotter: 2,
            total_time: 1.0,
            schedule: ScheduleForm::NestedSine,
            seed: 0,
            check_gradients: false,
        }
    }
}

impl RunSettings {
    pub fn schedule(&self) -> Result<Schedule> {
        let mut s = Schedule::new(self.total_time)?;
        s.form = self.schedule;
        Ok(s)
    }

    pub fn adapt_config(&self) -> AdaptConfig {
        AdaptConfig {
            epsilon: self.epsilon,
            max_iterations: self.max_iter,
            check_gradients: self.check_gradients,
            ..AdaptConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::InvalidArgument("l must be >= 1".into()));
        }
        if !(self.pool_threshold >= 0.0) {
            return Err(Error::InvalidArgument("pool threshold must be >= 0".into()));
        }
        if self.trotter == 0 {
            return Err(Error::InvalidArgument("trotter steps must be >= 1".into()));
        }
        if let Some(t) = self.t_prime {
            if !(0.0..=self.total_time).contains(&t) {
                return Err(Error::OutOfRange {
                    name: "t_prime",
                    value: t,
                    lo: 0.0,
                    hi: self.total_time,
                });
            }
        }
        self.schedule()?;
        self.adapt_config().validate()
    }
}

pub fn build_basis(problem: &MolecularProblem, l: usize, algebra_threshold: f64) -> Result<NestedCommutatorBasis> {
    NestedCommutatorBasis::build(&problem.initial_hamiltonian(), &problem.h_f, l, algebra_threshold)
}

/// The pool a setting asks for, built from the problem.
pub fn build_pool(problem: &MolecularProblem, s: &RunSettings) -> Result<OperatorPool> {
    match s.pool_kind {
        PoolChoice::Fermionic => build_fermionic_pool(
            problem.n_qubits(),
            problem.n_electrons,
            problem.ordering,
            s.grouped_fermionic,
        ),
        PoolChoice::Cd => {
            let basis = build_basis(problem, s.l, s.algebra_threshold)?;
            match s.t_prime {
                None => extract_pool_static(&basis, s.l, s.pool_threshold),
                Some(t) => extract_pool_time(&basis, s.l, t, &s.schedule()?, s.pool_threshold),
            }
        }
    }
}

/// Lowest energy of the problem with the offset, or `None` past the dense
/// limit.
pub fn fci_energy(problem: &MolecularProblem) -> Result<Option<f64>> {
    match exact_ground(&problem.h_f) {
        Ok((e, _)) => Ok(Some(e + problem.e_offset)),
        Err(Error::DenseLimit { n, limit }) => {
            log::warn!("{n} qubits exceeds the dense limit {limit}; no FCI reference");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Runs `settings.method` on `problem`. `pool` overrides the pool the
/// settings would build.
pub fn execute(problem: &MolecularProblem, settings: &RunSettings, pool: Option<OperatorPool>) -> Result<RunReport> {
    settings.validate()?;
    let start = Instant::now();
    let fci = fci_energy(problem)?;
    let h = PauliOperator::new(&problem.h_f)?;
    let hf_state = StateVector::basis(&problem.hf_bits);
    let hf_energy = hf_state.expectation(&h)? + problem.e_offset;

    let mut report = RunReport {
        method: settings.method,
        molecule: problem.label(),
        distance: problem.distance(),
        n_qubits: problem.n_qubits(),
        n_electrons: problem.n_electrons,
        settings: settings.clone(),
        status: String::new(),
        energy: f64::NAN,
        hf_energy,
        fci_energy: fci,
        error: None,
        pool_size: None,
        iterations: Vec::new(),
        resources: ResourceEstimate {
            model: CNOT_MODEL.into(),
            ..Default::default()
        },
        ansatz: Vec::new(),
        parameters: Vec::new(),
        gradient_check: None,
        wall_time_s: 0.0,
        finished_at: 0.0,
    };

    match settings.method {
        Method::Fci => {
            report.energy = fci.ok_or(Error::DenseLimit {
                n: problem.n_qubits(),
                limit: crate::pauli::dense_limit(),
            })?;
            report.status = "exact".into();
        }
        Method::CdAdapt | Method::AdaptFermionic => {
            let pool = match pool {
                Some(p) => p,
                None => build_pool(problem, settings)?,
            };
            if let Some(n) = pool.n_qubits() {
                if n != problem.n_qubits() {
                    return Err(Error::QubitMismatch(n, problem.n_qubits()));
                }
            }
            report.pool_size = Some(pool.len());
            let run = run_adapt(problem, &pool.generators, &settings.adapt_config())?;
            report.status = match run.status {
                AdaptStatus::Converged => "converged",
                AdaptStatus::MaxIterations => "max_iterations",
                AdaptStatus::Stagnated => "stagnated",
            }
            .into();
            report.energy = run.energy;
            report.resources = estimate_resources(&run.ansatz);
            report.ansatz = run.ansatz.generators().iter().map(|g| g.to_string()).collect();
            report.parameters = run.ansatz.parameters().to_vec();
            report.iterations = run.iterations;
            report.gradient_check = run.gradient_check;
        }
        Method::Dcqo => {
            let basis = build_basis(problem, settings.l, settings.algebra_threshold)?;
            let plan = plan_dcqo(
                &basis,
                settings.l,
                &settings.schedule()?,
                settings.trotter,
                settings.pool_threshold,
            )?;
            let psi = execute_plan(&plan, &hf_state)?;
            report.energy = psi.expectation(&h)? + problem.e_offset;
            report.resources = estimate_resources(&plan);
            report.status = "done".into();
        }
    }
    if !report.energy.is_finite() {
        return Err(Error::Numerical("non-finite final energy".into()));
    }
    report.error = fci.map(|e| (report.energy - e).abs());
    report.wall_time_s = start.elapsed().as_secs_f64();
    report.finished_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    Ok(report)
}

/// Method tag implied by a pool kind for the ADAPT family.
pub fn adapt_method(kind: PoolChoice) -> Method {
    match kind {
        PoolChoice::Cd => Method::CdAdapt,
        PoolChoice::Fermionic => Method::AdaptFermionic,
    }
}
