//! Dense statevector execution, ancilla readout, noisy shot sampling,
//! post-selection and rescaling.
//!
//! Noise is a per-gate depolarizing channel sampled as trajectories of the
//! global kind: a shot survives every gate with probability
//! `Π(1−ε_g)`, otherwise it is replaced by a uniformly random bitstring.
//! The rescaling formula inverts this attenuation exactly.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::resources::single_qubit_gates;
use crate::circuit::{Axis, Circuit, Gate, Pauli};
use crate::error::{invalid, Error, Result};
use crate::linalg::C64;

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 24;

pub const DEFAULT_SHOTS: u64 = 40_000;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub n_qubits: usize,
    pub amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return invalid(format!("{n_qubits} qubits exceed the dense cap of {MAX_QUBITS}"));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(n_qubits)?;
        s.amplitudes[0] = C64::new(0.0, 0.0);
        s.amplitudes[index] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply(&mut self, gate: &Gate) {
        let psi = &mut self.amplitudes;
        let i = C64::new(0.0, 1.0);
        match gate {
            Gate::Match(m) => {
                let u = m.unitary();
                let (lo, hi) = (1usize << m.q, 1usize << (m.q + 1));
                for base in 0..psi.len() {
                    if base & (lo | hi) != 0 {
                        continue;
                    }
                    let idx = [base, base | lo, base | hi, base | lo | hi];
                    let v = idx.map(|k| psi[k]);
                    for (r, &k) in idx.iter().enumerate() {
                        psi[k] = (0..4).map(|c| u[(r, c)] * v[c]).sum();
                    }
                }
            }
            Gate::Zz { a, b, theta } => {
                let (p, m) = (C64::new(0.0, -theta / 2.0).exp(), C64::new(0.0, theta / 2.0).exp());
                for (k, amp) in psi.iter_mut().enumerate() {
                    *amp *= if ((k >> a) ^ (k >> b)) & 1 == 0 { p } else { m };
                }
            }
            Gate::Rz { q, theta } => {
                let (p, m) = (C64::new(0.0, -theta / 2.0).exp(), C64::new(0.0, theta / 2.0).exp());
                for (k, amp) in psi.iter_mut().enumerate() {
                    *amp *= if (k >> q) & 1 == 0 { p } else { m };
                }
            }
            Gate::Ry { q, theta } => {
                let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
                self.single(*q, [[c.into(), (-s).into()], [s.into(), c.into()]]);
            }
            Gate::H(q) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                self.single(*q, [[h.into(), h.into()], [h.into(), (-h).into()]]);
            }
            Gate::S(q) => self.single(*q, [[1.0.into(), 0.0.into()], [0.0.into(), i]]),
            Gate::Sdg(q) => self.single(*q, [[1.0.into(), 0.0.into()], [0.0.into(), -i]]),
            Gate::X(q) => self.single(*q, [[0.0.into(), 1.0.into()], [1.0.into(), 0.0.into()]]),
            Gate::Controlled { control, anti, string } => {
                let flip: usize = string.iter().filter(|(_, p)| *p != Pauli::Z).map(|(q, _)| 1 << q).sum();
                let active = |k: usize| ((k >> control) & 1 == 1) != *anti;
                let old = psi.clone();
                for (k, &amp) in old.iter().enumerate() {
                    if !active(k) {
                        continue;
                    }
                    let mut phase = C64::new(1.0, 0.0);
                    for &(q, p) in string {
                        let bit = (k >> q) & 1;
                        match p {
                            Pauli::X => {}
                            Pauli::Y => phase *= if bit == 0 { i } else { -i },
                            Pauli::Z => {
                                if bit == 1 {
                                    phase = -phase;
                                }
                            }
                        }
                    }
                    psi[k ^ flip] = phase * amp;
                }
            }
        }
    }

    fn single(&mut self, q: usize, u: [[C64; 2]; 2]) {
        let bit = 1usize << q;
        for k in 0..self.amplitudes.len() {
            if k & bit == 0 {
                let (a, b) = (self.amplitudes[k], self.amplitudes[k | bit]);
                self.amplitudes[k] = u[0][0] * a + u[0][1] * b;
                self.amplitudes[k | bit] = u[1][0] * a + u[1][1] * b;
            }
        }
    }

    /// `⟨Z⟩` of qubit `q`.
    pub fn z_expectation(&self, q: usize) -> f64 {
        self.amplitudes.iter().enumerate().map(|(k, a)| if (k >> q) & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() }).sum()
    }
}

/// Executes `circuit` on `|0…0⟩`.
pub fn run(circuit: &Circuit) -> Result<StateVector> {
    run_from(circuit, StateVector::zero(circuit.n_qubits)?)
}

pub fn run_from(circuit: &Circuit, mut state: StateVector) -> Result<StateVector> {
    if state.n_qubits != circuit.n_qubits {
        return Err(Error::Dimension(format!("state has {} qubits, circuit {}", state.n_qubits, circuit.n_qubits)));
    }
    circuit.validate()?;
    for g in &circuit.gates {
        state.apply(g);
    }
    Ok(state)
}

/// `⟨X⟩` or `⟨Y⟩` of the ancilla in `state` (no readout rotation applied).
pub fn ancilla_expectation(state: &StateVector, ancilla: usize, axis: Axis) -> f64 {
    let bit = 1usize << ancilla;
    let mut acc = C64::new(0.0, 0.0);
    for (k, a) in state.amplitudes.iter().enumerate() {
        if k & bit == 0 {
            acc += a.conj() * state.amplitudes[k | bit];
        }
    }
    match axis {
        Axis::X => 2.0 * acc.re,
        Axis::Y => 2.0 * acc.im,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub eps_1q: f64,
    pub eps_2q: f64,
    pub shots: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { eps_1q: 0.0, eps_2q: 0.0, shots: DEFAULT_SHOTS }
    }
}

impl NoiseSpec {
    /// Probabilities may reach 1 (fully depolarizing) for sampling; rescaling
    /// rejects that separately.
    pub fn validate(&self) -> Result<()> {
        for e in [self.eps_1q, self.eps_2q] {
            if !(0.0..=1.0).contains(&e) {
                return invalid(format!("depolarizing probability {e} outside [0, 1]"));
            }
        }
        if self.shots == 0 {
            return invalid("shots must be at least 1");
        }
        Ok(())
    }

    /// Probability that a shot passes every gate unharmed.
    pub fn survival(&self, n_1q: usize, n_2q: usize) -> f64 {
        (1.0 - self.eps_2q).powi(n_2q as i32) * (1.0 - self.eps_1q).powi(n_1q as i32)
    }
}

/// Histogram keyed by bitstrings, most significant qubit first.
pub type Counts = BTreeMap<String, u64>;

pub fn bitstring(index: usize, n_qubits: usize) -> String {
    (0..n_qubits).rev().map(|q| if (index >> q) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Samples computational-basis outcomes of `circuit` under the noise model.
/// Two-qubit gates count as their CNOT cost.
pub fn sample(circuit: &Circuit, noise: &NoiseSpec, seed: u64) -> Result<Counts> {
    noise.validate()?;
    let probs = run(circuit)?.probabilities();
    let p_ok = noise.survival(single_qubit_gates(circuit), circuit.cnot_tally());
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::Numerical(format!("bad output distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Counts::new();
    let dim = probs.len();
    for _ in 0..noise.shots {
        let k = if rng.random::<f64>() < p_ok { dist.sample(&mut rng) } else { rng.random_range(0..dim) };
        *counts.entry(bitstring(k, circuit.n_qubits)).or_default() += 1;
    }
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PostSelected {
    pub counts: Counts,
    pub total: u64,
    pub acceptance: f64,
}

/// Keeps bitstrings whose spin registers hold `n_up` and `n_dn` particles
/// (layout: ↑ register below the middle ancilla, ↓ register above it).
pub fn post_select(counts: &Counts, n_up: usize, n_dn: usize) -> Result<PostSelected> {
    let total: u64 = counts.values().sum();
    let mut kept = Counts::new();
    for (bits, &c) in counts {
        let nq = bits.len();
        let anc = nq / 2;
        // Character position p holds qubit nq−1−p.
        let ones = |range: std::ops::Range<usize>| range.filter(|&q| bits.as_bytes()[nq - 1 - q] == b'1').count();
        if ones(0..anc) == n_up && ones(anc + 1..nq) == n_dn {
            kept.insert(bits.clone(), c);
        }
    }
    let accepted: u64 = kept.values().sum();
    if accepted == 0 {
        return Err(Error::EmptyPostSelection);
    }
    Ok(PostSelected { counts: kept, total, acceptance: accepted as f64 / total as f64 })
}

/// Ancilla `⟨Z⟩` estimate from (post-selected) counts, normalized by `total`
/// shots so rejected noise shots count as zero signal.
pub fn ancilla_z_estimate(counts: &Counts, total: u64) -> f64 {
    let mut acc = 0i64;
    for (bits, &c) in counts {
        let anc = bits.len() / 2;
        let b = bits.as_bytes()[bits.len() - 1 - anc];
        acc += if b == b'0' { c as i64 } else { -(c as i64) };
    }
    acc as f64 / total as f64
}

/// `value / ((1−ε₂)^{n₂} (1−ε₁)^{n₁})`.
pub fn rescale(value: f64, n_1q: usize, n_2q: usize, eps_1q: f64, eps_2q: f64) -> Result<f64> {
    let spec = NoiseSpec { eps_1q, eps_2q, shots: 1 };
    if !(0.0..1.0).contains(&eps_1q) || !(0.0..1.0).contains(&eps_2q) {
        return invalid("rescaling needs depolarizing probabilities in [0, 1)");
    }
    Ok(value / spec.survival(n_1q, n_2q))
}

/// Maps a Fock-space vector (bits `up | dn << N`, global Jordan–Wigner order)
/// onto the register layout with the ancilla in `|0⟩`. The per-register
/// encoding differs by `(−1)^{n↑ n↓}`, which is applied here.
pub fn embed_fock(n_orbitals: usize, fock: &[C64]) -> Result<StateVector> {
    let n = n_orbitals;
    if fock.len() != 1 << (2 * n) {
        return Err(Error::Dimension(format!("Fock vector of length {} for {n} orbitals", fock.len())));
    }
    let mut s = StateVector::zero(2 * n + 1)?;
    s.amplitudes[0] = C64::new(0.0, 0.0);
    for (bits, &a) in fock.iter().enumerate() {
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        let mut k = 0usize;
        for c in 0..n {
            k |= (bits >> c & 1) << (n - 1 - c);
            k |= (bits >> (n + c) & 1) << (n + 1 + c);
        }
        let (nu, nd) = ((bits & ((1 << n) - 1)).count_ones(), (bits >> n).count_ones());
        s.amplitudes[k] = if (nu * nd) % 2 == 0 { a } else { -a };
    }
    Ok(s)
}

pub fn counts_to_json(counts: &Counts) -> Result<String> {
    serde_json::to_string_pretty(counts).map_err(|e| Error::Parse(e.to_string()))
}
