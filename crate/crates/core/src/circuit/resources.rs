//! CNOT resource formula and per-circuit gate reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Circuit, Gate};

/// Closed-form CNOT count with its validity flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnotCount {
    pub count: usize,
    /// `r·N_I ≥ N_q/2 − 1`; below it the pruning assumption of the formula fails.
    pub valid: bool,
}

/// `2N_I² + 2Λ² + 6N_IΛ + 4N_I + 4Λ + r(6N_I² + 4N_I(Λ−1))`.
pub fn cnot_count(n_imp: usize, lambda: usize, r: usize) -> CnotCount {
    let (ni, l) = (n_imp as i64, lambda as i64);
    let per_step = 6 * ni * ni + 4 * ni * (l - 1);
    let fixed = 2 * ni * ni + 2 * l * l + 6 * ni * l + 4 * ni + 4 * l;
    let count = (fixed + r as i64 * per_step).max(0) as usize;
    CnotCount { count, valid: r * n_imp + 1 >= n_imp + lambda }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub n_qubits: usize,
    pub gates: BTreeMap<String, usize>,
    pub matchgates: usize,
    pub single_qubit: usize,
    pub cnot_actual: usize,
    pub cnot_formula: Option<CnotCount>,
}

impl ResourceReport {
    pub fn of(circuit: &Circuit, formula: Option<CnotCount>) -> Self {
        let mut gates = BTreeMap::new();
        for g in &circuit.gates {
            *gates.entry(g.name().to_string()).or_default() += 1;
        }
        ResourceReport {
            n_qubits: circuit.n_qubits,
            matchgates: circuit.matchgate_count(),
            single_qubit: circuit.gates.iter().filter(|g| g.qubits().len() == 1).count(),
            gates,
            cnot_actual: circuit.cnot_tally(),
            cnot_formula: formula,
        }
    }
}

/// Number of single-qubit gates, as seen by the noise model.
pub fn single_qubit_gates(circuit: &Circuit) -> usize {
    circuit.gates.iter().filter(|g| !matches!(g, Gate::Match(_) | Gate::Zz { .. } | Gate::Controlled { .. })).count()
}
