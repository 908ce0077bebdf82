//! Hadamard-test circuits for `C_ij(t) = ⟨φ_i| e^{iHt} γ_a e^{−iHt} γ_b |φ_j⟩`.
//!
//! The ancilla starts in `|+⟩`; branch `|0⟩` prepares `φ_i`, branch `|1⟩`
//! prepares `φ_j`. The evolution is uncontrolled (its control cancels between
//! branches), only `γ_b` and `γ_a` are controlled, and the ancilla is read out
//! along `X` (real part) or `Y` (imaginary part).
//!
//! State preparation uses the principal angles between the occupied subspaces
//! of `φ_i` and `φ_j` on each spin: a shared orbital rotation `V` plus one
//! controlled two-mode excitation per nonzero angle.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::synth::{ladder, triangle};
use super::trotter::{compress, interaction_layer, push_evolution, TrotterPlan};
use super::{Circuit, Gate, Pauli};
use crate::error::{invalid, Error, Result};
use crate::fgs::GaussianState;
use crate::linalg::{complete_orthonormal, RMat};
use crate::model::ImpurityModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HadamardOptions {
    /// Use the compressed Trotter layout.
    pub compressed: bool,
    /// Move the leading free-fermion block through `γ_b` into the preparation.
    pub absorb: bool,
    /// Drop gates outside the light cone of the ancilla readout.
    pub prune: bool,
}

impl Default for HadamardOptions {
    fn default() -> Self {
        Self { compressed: true, absorb: true, prune: true }
    }
}

/// A Hadamard-test circuit. The correlator equals `sign · ⟨Z_anc⟩` at the end
/// of `circuit` (real part for `Axis::X`, imaginary part for `Axis::Y`).
#[derive(Clone, Debug)]
pub struct HadamardCircuit {
    pub circuit: Circuit,
    pub sign: f64,
    pub axis: Axis,
}

struct RegisterPrep {
    /// Single-particle rotation taking reference modes to the prepared orbitals.
    v: RMat,
    occupied: Vec<usize>,
    /// Chain position `p` (occupied) and angle: branch 1 moves weight to `p+1`.
    pairs: Vec<(usize, f64)>,
    sign: f64,
}

fn register_prep(phi_i: &RMat, phi_j: &RMat) -> Result<RegisterPrep> {
    let (n_modes, n) = phi_i.shape();
    if phi_j.shape() != (n_modes, n) {
        return Err(Error::Dimension("states differ in particle content".into()));
    }
    if n == 0 {
        return Ok(RegisterPrep { v: RMat::identity(n_modes, n_modes), occupied: vec![], pairs: vec![], sign: 1.0 });
    }
    let svd = (phi_i.transpose() * phi_j).svd(true, true);
    let (p, qt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let a = phi_i * p;
    let b = phi_j * qt.transpose();
    // θ from the residual norm (acos is ill-conditioned near 1); the partner
    // direction w is re-orthonormalized against every orbital already used.
    let mut paired = Vec::new();
    let mut unpaired = Vec::new();
    let mut used: Vec<nalgebra::DVector<f64>> = (0..n).map(|k| a.column(k).into_owned()).collect();
    for k in 0..n {
        let cos = a.column(k).dot(&b.column(k));
        let resid = b.column(k) - a.column(k) * cos;
        let sin = resid.norm();
        if sin > 1e-13 {
            let mut w = resid / sin;
            for _ in 0..2 {
                for u in &used {
                    w -= u * u.dot(&w);
                }
            }
            w /= w.norm();
            used.push(w.clone());
            paired.push((k, sin.atan2(cos), w));
        } else {
            unpaired.push(k);
        }
    }
    let m = paired.len();
    let mut cols = RMat::zeros(n_modes, n + m);
    let mut a_cols = RMat::zeros(n_modes, n);
    let mut b_cols = RMat::zeros(n_modes, n);
    let mut occupied = Vec::with_capacity(n);
    let mut pairs = Vec::with_capacity(m);
    for (slot, (k, theta, w)) in paired.iter().enumerate() {
        let (k, theta) = (*k, *theta);
        cols.set_column(2 * slot, &a.column(k));
        cols.set_column(2 * slot + 1, w);
        a_cols.set_column(slot, &a.column(k));
        b_cols.set_column(slot, &b.column(k));
        occupied.push(2 * slot);
        pairs.push((2 * slot, theta));
    }
    for (extra, &k) in unpaired.iter().enumerate() {
        cols.set_column(2 * m + extra, &a.column(k));
        a_cols.set_column(m + extra, &a.column(k));
        b_cols.set_column(m + extra, &b.column(k));
        occupied.push(2 * m + extra);
    }
    let v = complete_orthonormal(&cols);
    let sign = (phi_i.transpose() * a_cols).determinant().signum() * (phi_j.transpose() * b_cols).determinant().signum();
    Ok(RegisterPrep { v, occupied, pairs, sign })
}

/// Majorana rotation of the number-conserving orbital rotation `v`.
fn orbital_rotation(v: &RMat) -> RMat {
    let n = v.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| if r % 2 == c % 2 { v[(r / 2, c / 2)] } else { 0.0 })
}

fn cnot(control: usize, target: usize) -> Gate {
    Gate::Controlled { control, anti: false, string: vec![(target, Pauli::X)] }
}

/// Builds the Hadamard test for global Majorana indices `gamma_a`, `gamma_b`
/// (index `2m + s` on mode `m`; both on the same spin). `plan = None` means
/// `t = 0`.
#[allow(clippy::too_many_arguments)]
pub fn build_hadamard_test(
    model: &ImpurityModel,
    basis_i: &GaussianState,
    basis_j: &GaussianState,
    gamma_a: usize,
    gamma_b: usize,
    plan: Option<&TrotterPlan>,
    axis: Axis,
    opts: HadamardOptions,
) -> Result<HadamardCircuit> {
    model.validate()?;
    let n = model.n_orbitals();
    if basis_i.n_orbitals() != n || basis_j.n_orbitals() != n {
        return Err(Error::Dimension(format!("states have {} / {} orbitals, model has {n}", basis_i.n_orbitals(), basis_j.n_orbitals())));
    }
    if gamma_a >= 4 * n || gamma_b >= 4 * n {
        return invalid(format!("Majorana index out of range (4N = {})", 4 * n));
    }
    let split = |g: usize| (g / 2 / n, 2 * (g / 2 % n) + g % 2);
    let (spin_a, ka) = split(gamma_a);
    let (spin_b, kb) = split(gamma_b);
    if spin_a != spin_b {
        return invalid("γ_a and γ_b must act on the same spin");
    }
    let mut circuit = Circuit::for_orbitals(n);
    let anc = circuit.ancilla;
    let preps = [register_prep(&basis_i.orbitals[0], &basis_j.orbitals[0])?, register_prep(&basis_i.orbitals[1], &basis_j.orbitals[1])?];

    // Leading free-fermion rotations folded into V.
    let evolution = plan.map(|p| compress(model, p)).transpose()?;
    let mut rot = [orbital_rotation(&preps[0].v), orbital_rotation(&preps[1].v)];
    let mut lead_ladder = Vec::new();
    if let (Some(ev), true, true) = (&evolution, opts.absorb, opts.compressed) {
        for (spin, r) in rot.iter_mut().enumerate() {
            if spin == spin_b && kb / 2 + 1 >= n {
                // γ_b on the last chain mode: nothing commutes past it.
                lead_ladder = triangle(&ev.head)?;
            } else if spin == spin_b {
                let (lad, bath) = ladder(&ev.head, kb / 2 + 1)?;
                *r = bath * &*r;
                lead_ladder = lad;
            } else {
                *r = &ev.head * &*r;
            }
        }
    }

    circuit.gates.push(Gate::H(anc));
    for (spin, prep) in preps.iter().enumerate() {
        let q = |c: usize| circuit.chain_qubit(spin, c);
        let mut gates = Vec::new();
        for &c in &prep.occupied {
            gates.push(Gate::X(q(c)));
        }
        for &(c, theta) in &prep.pairs {
            gates.push(Gate::Ry { q: q(c), theta: -theta });
            gates.push(cnot(anc, q(c)));
            gates.push(Gate::Ry { q: q(c), theta });
            gates.push(cnot(anc, q(c)));
            gates.push(Gate::X(q(c + 1)));
            gates.push(cnot(q(c), q(c + 1)));
        }
        circuit.gates.extend(gates);
        let tri = triangle(&rot[spin])?;
        circuit.push_chain(spin, &tri);
    }
    let string_b = circuit.majorana_string(spin_b, kb);
    circuit.gates.push(Gate::Controlled { control: anc, anti: false, string: string_b });

    if let (Some(plan), Some(ev)) = (plan, &evolution) {
        if opts.absorb && opts.compressed {
            circuit.push_chain(spin_b, &lead_ladder);
            let layer = interaction_layer(model, plan.dt, &circuit);
            for lad in &ev.ladders {
                circuit.gates.extend(layer.iter().cloned());
                for spin in 0..2 {
                    circuit.push_chain(spin, lad);
                }
            }
        } else {
            push_evolution(&mut circuit, model, plan, opts.compressed)?;
        }
    }

    let string_a = circuit.majorana_string(spin_a, ka);
    circuit.gates.push(Gate::Controlled { control: anc, anti: false, string: string_a });
    if opts.prune {
        prune_light_cone(&mut circuit.gates);
    }
    if axis == Axis::Y {
        circuit.gates.push(Gate::Sdg(anc));
    }
    circuit.gates.push(Gate::H(anc));
    circuit.validate()?;
    Ok(HadamardCircuit { circuit, sign: preps[0].sign * preps[1].sign, axis })
}

/// Removes gates that cannot influence the last gate's qubits: walking
/// backwards, a gate disjoint from the growing cone commutes with everything
/// after it that is kept, so it drops out of the expectation value.
pub fn prune_light_cone(gates: &mut Vec<Gate>) {
    let Some(last) = gates.last() else { return };
    let mut cone: Vec<usize> = last.qubits();
    let mut keep = vec![true; gates.len()];
    for (i, g) in gates.iter().enumerate().rev().skip(1) {
        let qs = g.qubits();
        if qs.iter().any(|q| cone.contains(q)) {
            for q in qs {
                if !cone.contains(&q) {
                    cone.push(q);
                }
            }
        } else {
            keep[i] = false;
        }
    }
    let mut it = keep.into_iter();
    gates.retain(|_| it.next().unwrap_or(true));
}
