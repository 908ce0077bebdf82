//! Second-order Trotter circuits for the impurity Hamiltonian.
//!
//! One step is `e^{−iH₂Δt/2} e^{−iH₄Δt} e^{−iH₂Δt/2}`, where `H₄` is the
//! (diagonal) interaction written as `Z` and `ZZ` rotations on impurity qubits.
//! Compression pushes the bath-only part of every free-fermion block to the
//! left through the interaction layer, leaving one ladder per step.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::synth::{hopping_generator, ladder, rotation_from_generator, triangle, ChainGate};
use super::{Circuit, Gate};
use crate::error::{invalid, Result};
use crate::linalg::RMat;
use crate::model::{quadratic_matrix, ImpurityModel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrotterPlan {
    pub dt: f64,
    pub steps: usize,
}

impl TrotterPlan {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || steps == 0 {
            return invalid(format!("Trotter plan needs dt > 0 and r ≥ 1 (got dt={dt}, r={steps})"));
        }
        Ok(Self { dt, steps })
    }

    pub fn time(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

/// `e^{−iH₄Δt}` up to global phase as single-qubit `Rz` and pairwise `ZZ` rotations.
pub fn interaction_layer(model: &ImpurityModel, dt: f64, layout: &Circuit) -> Vec<Gate> {
    let n = model.n_orbitals();
    let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 0..model.n_imp {
        *pairs.entry((i, n + i)).or_default() += model.u_intra;
        for j in 0..model.n_imp {
            if i == j {
                continue;
            }
            for si in [0, n] {
                for sj in [0, n] {
                    let (a, b) = (si + i, sj + j);
                    *pairs.entry((a.min(b), a.max(b))).or_default() += model.u_inter;
                }
            }
        }
    }
    let qubit = |m: usize| if m < n { layout.chain_qubit(0, m) } else { layout.chain_qubit(1, m - n) };
    // n_a n_b = (1 − Z_a − Z_b + Z_a Z_b)/4.
    let mut z = vec![0.0; 2 * n];
    let mut gates = Vec::new();
    let mut zz = Vec::new();
    for (&(a, b), &w) in &pairs {
        if w == 0.0 {
            continue;
        }
        z[a] -= w / 4.0;
        z[b] -= w / 4.0;
        zz.push(Gate::Zz { a: qubit(a), b: qubit(b), theta: dt * w / 2.0 });
    }
    for (m, &c) in z.iter().enumerate() {
        if c != 0.0 {
            gates.push(Gate::Rz { q: qubit(m), theta: 2.0 * dt * c });
        }
    }
    gates.extend(zz);
    gates
}

/// Free-fermion rotation of `e^{−iH₂τ}` on one register.
pub fn free_rotation(model: &ImpurityModel, tau: f64) -> Result<RMat> {
    rotation_from_generator(&hopping_generator(&quadratic_matrix(model)?), tau)
}

/// Compressed form: a leading rotation, then per step (interaction, ladder).
#[derive(Clone, Debug)]
pub struct CompressedEvolution {
    pub head: RMat,
    pub ladders: Vec<Vec<ChainGate>>,
}

pub fn compress(model: &ImpurityModel, plan: &TrotterPlan) -> Result<CompressedEvolution> {
    let half = free_rotation(model, plan.dt / 2.0)?;
    let full = free_rotation(model, plan.dt)?;
    let r = plan.steps;
    let mut blocks: Vec<RMat> = (0..=r).map(|k| if k == 0 || k == r { half.clone() } else { full.clone() }).collect();
    let mut ladders = vec![Vec::new(); r];
    for k in (1..=r).rev() {
        let (lad, bath) = ladder(&blocks[k], model.n_imp)?;
        blocks[k - 1] = bath * &blocks[k - 1];
        ladders[k - 1] = lad;
    }
    Ok(CompressedEvolution { head: blocks.swap_remove(0), ladders })
}

/// Appends the evolution `e^{−iH r Δt}` (Trotterized) to `circuit`.
pub(crate) fn push_evolution(circuit: &mut Circuit, model: &ImpurityModel, plan: &TrotterPlan, compressed: bool) -> Result<()> {
    let layer = interaction_layer(model, plan.dt, circuit);
    if compressed {
        let ev = compress(model, plan)?;
        let head = triangle(&ev.head)?;
        for spin in 0..2 {
            circuit.push_chain(spin, &head);
        }
        for lad in &ev.ladders {
            circuit.gates.extend(layer.iter().cloned());
            for spin in 0..2 {
                circuit.push_chain(spin, lad);
            }
        }
    } else {
        let half = triangle(&free_rotation(model, plan.dt / 2.0)?)?;
        for _ in 0..plan.steps {
            for spin in 0..2 {
                circuit.push_chain(spin, &half);
            }
            circuit.gates.extend(layer.iter().cloned());
            for spin in 0..2 {
                circuit.push_chain(spin, &half);
            }
        }
    }
    Ok(())
}

/// Second-order Trotter circuit for `exp(−i r Δt H_imp)` on the full layout
/// (the ancilla stays idle).
pub fn build_trotter_circuit(model: &ImpurityModel, plan: &TrotterPlan, compressed: bool) -> Result<Circuit> {
    model.validate()?;
    let mut c = Circuit::for_orbitals(model.n_orbitals());
    push_evolution(&mut c, model, plan, compressed)?;
    Ok(c)
}
