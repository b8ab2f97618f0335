//! Counterdiabatic ADAPT-VQE on exactly simulated qubit Hamiltonians.
//!
//! The operator pool is the set of Pauli strings appearing in nested
//! commutator approximations of the adiabatic gauge potential for the
//! interpolation `(1 - lambda) H_i + lambda H_f`, where `H_i` is a local
//! Hamiltonian whose ground state is the Hartree-Fock reference. ADAPT-VQE
//! then grows an ansatz from that pool. Fermionic ADAPT-VQE and digitized
//! counterdiabatic evolution are provided as baselines.

pub mod agp;
pub mod digitize;
pub mod error;
pub mod generator;
pub mod engine;
pub mod molham;
pub mod optimize;
pub mod pauli;
pub mod pipeline;
pub mod report;
pub mod statevector;

pub use error::{Error, Result};
