//! Hermitian ansatz generators: a single Pauli string, or a fermionic
//! excitation expanded into mutually commuting Pauli strings with real
//! weights.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, PauliTerm};
use crate::statevector::{pauli_matrix_element, rotate_raw};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedPauli {
    pub pauli: PauliTerm,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupedGenerator {
    pub label: String,
    pub terms: Vec<WeightedPauli>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Generator {
    Pauli(PauliTerm),
    Grouped(GroupedGenerator),
}

impl Generator {
    /// Builds a grouped generator from a Hermitian sum whose strings
    /// pairwise commute, so `exp(-i theta G)` factorizes exactly.
    pub fn grouped(label: impl Into<String>, g: &PauliSum) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::InvalidArgument("empty generator".into()));
        }
        if !g.is_hermitian(1e-12) {
            return Err(Error::NonHermitian("generator weights are not real".into()));
        }
        let terms: Vec<WeightedPauli> = g
            .iter()
            .map(|(t, w)| WeightedPauli {
                pauli: *t,
                weight: w.re,
            })
            .collect();
        for (i, a) in terms.iter().enumerate() {
            for b in &terms[i + 1..] {
                if !a.pauli.commutes_with(&b.pauli) {
                    return Err(Error::InvalidArgument(format!(
                        "generator strings {} and {} anticommute",
                        a.pauli, b.pauli
                    )));
                }
            }
        }
        Ok(Generator::Grouped(GroupedGenerator {
            label: label.into(),
            terms,
        }))
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Generator::Pauli(p) => p.n_qubits(),
            Generator::Grouped(g) => g.terms[0].pauli.n_qubits(),
        }
    }

    /// `(string, weight)` pairs making up the generator.
    pub fn pauli_terms(&self) -> Vec<(PauliTerm, f64)> {
        match self {
            Generator::Pauli(p) => vec![(*p, 1.0)],
            Generator::Grouped(g) => g.terms.iter().map(|t| (t.pauli, t.weight)).collect(),
        }
    }

    pub fn to_pauli_sum(&self) -> PauliSum {
        let terms = self.pauli_terms();
        let mut s = PauliSum::zero(self.n_qubits());
        for (p, w) in terms {
            s.add_term(p, Complex64::new(w, 0.0)).expect("same size");
        }
        s
    }

    /// Single Pauli strings have period `2 pi` in `theta` (energy period `pi`).
    pub fn is_periodic(&self) -> bool {
        matches!(self, Generator::Pauli(_))
    }

    /// In-place `exp(-i theta G)`.
    pub(crate) fn apply_exp(&self, amps: &mut [Complex64], theta: f64) {
        match self {
            Generator::Pauli(p) => rotate_raw(amps, p, theta),
            Generator::Grouped(g) => {
                for t in &g.terms {
                    rotate_raw(amps, &t.pauli, theta * t.weight);
                }
            }
        }
    }

    /// `<u| G |v>`
    pub(crate) fn matrix_element(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        match self {
            Generator::Pauli(p) => pauli_matrix_element(u, p, v),
            Generator::Grouped(g) => g
                .terms
                .iter()
                .map(|t| t.weight * pauli_matrix_element(u, &t.pauli, v))
                .sum(),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Pauli(p) => write!(f, "{p}"),
            Generator::Grouped(g) => f.write_str(&g.label),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouped_requires_commuting_strings() {
        let ok = PauliSum::from_strs([
            (Complex64::new(0.5, 0.0), "YX"),
            (Complex64::new(-0.5, 0.0), "XY"),
        ])
        .unwrap();
        assert!(Generator::grouped("s", &ok).is_ok());
        let bad = PauliSum::from_strs([
            (Complex64::new(1.0, 0.0), "XI"),
            (Complex64::new(1.0, 0.0), "ZI"),
        ])
        .unwrap();
        assert!(Generator::grouped("b", &bad).is_err());
    }

    #[test]
    fn serde_shapes() {
        let g = Generator::Pauli("XYZ".parse().unwrap());
        assert_eq!(serde_json::to_string(&g).unwrap(), "\"XYZ\"");
        let back: Generator = serde_json::from_str("\"XYZ\"").unwrap();
        assert_eq!(back, g);
    }
}
