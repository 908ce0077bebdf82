//! Gate-level circuits: matchgate algebra, Trotter synthesis with partial
//! compression, Hadamard-test assembly and resource accounting.
//!
//! Qubit layout for `N` orbitals per spin: spin-↑ chain position `c` sits on
//! qubit `N−1−c`, the ancilla on qubit `N`, spin-↓ chain position `c` on qubit
//! `N+1+c`. Each register carries its own Jordan–Wigner string, so strings
//! never cross the ancilla.

pub mod hadamard;
pub mod matchgate;
pub mod resources;
pub mod synth;
pub mod trotter;

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

pub use hadamard::{build_hadamard_test, Axis, HadamardCircuit, HadamardOptions};
pub use matchgate::Matchgate;
pub use resources::{cnot_count, CnotCount, ResourceReport};
pub use trotter::{build_trotter_circuit, TrotterPlan};

use crate::error::{invalid, Error, Result};
use synth::ChainGate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn letter(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// Matchgate on physical qubits `(q, q+1)`.
    Match(Matchgate),
    /// `exp(−iθ/2 · Z_a Z_b)`.
    Zz { a: usize, b: usize, theta: f64 },
    /// `exp(−iθ/2 · Z)`.
    Rz { q: usize, theta: f64 },
    /// `exp(−iθ/2 · Y)`.
    Ry { q: usize, theta: f64 },
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    /// Pauli string applied when the control reads `|1⟩` (`|0⟩` if `anti`).
    Controlled { control: usize, anti: bool, string: Vec<(usize, Pauli)> },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Match(m) => vec![m.q, m.q + 1],
            Gate::Zz { a, b, .. } => vec![*a, *b],
            Gate::Rz { q, .. } | Gate::Ry { q, .. } => vec![*q],
            Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::X(q) => vec![*q],
            Gate::Controlled { control, string, .. } => {
                std::iter::once(*control).chain(string.iter().map(|(q, _)| *q)).collect()
            }
        }
    }

    /// CNOTs in a standard decomposition: 2 per matchgate and per `ZZ`
    /// rotation, `2w−1` for a controlled Pauli string of weight `w`.
    pub fn cnots(&self) -> usize {
        match self {
            Gate::Match(_) | Gate::Zz { .. } => 2,
            Gate::Controlled { string, .. } => (2 * string.len()).saturating_sub(1),
            _ => 0,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Gate::Match(_) => "MG",
            Gate::Zz { .. } => "ZZ",
            Gate::Rz { .. } => "RZ",
            Gate::Ry { .. } => "RY",
            Gate::H(_) => "H",
            Gate::S(_) => "S",
            Gate::Sdg(_) => "SDG",
            Gate::X(_) => "X",
            Gate::Controlled { anti: false, .. } => "CP",
            Gate::Controlled { anti: true, .. } => "ACP",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub ancilla: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    /// Empty circuit for `n_orbitals` per spin (two registers plus ancilla).
    pub fn for_orbitals(n_orbitals: usize) -> Self {
        Circuit { n_qubits: 2 * n_orbitals + 1, ancilla: n_orbitals, gates: Vec::new() }
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_qubits / 2
    }

    /// Physical qubit of chain position `c` in register `spin` (0 = ↑, 1 = ↓).
    pub fn chain_qubit(&self, spin: usize, c: usize) -> usize {
        let n = self.n_orbitals();
        if spin == 0 { n - 1 - c } else { n + 1 + c }
    }

    /// Appends chain-coordinate gates of one register.
    pub fn push_chain(&mut self, spin: usize, gates: &[ChainGate]) {
        for g in gates {
            let gate = match *g {
                ChainGate::Rz(c, theta) => Gate::Rz { q: self.chain_qubit(spin, c), theta },
                ChainGate::Match(m) if spin == 0 => Gate::Match(Matchgate { q: self.chain_qubit(0, m.q + 1), ..m.mirrored() }),
                ChainGate::Match(m) => Gate::Match(Matchgate { q: self.chain_qubit(1, m.q), ..m }),
            };
            self.gates.push(gate);
        }
    }

    /// Controlled Jordan–Wigner image of Majorana `k` of register `spin`.
    pub fn majorana_string(&self, spin: usize, k: usize) -> Vec<(usize, Pauli)> {
        let c = k / 2;
        let mut s: Vec<_> = (0..c).map(|j| (self.chain_qubit(spin, j), Pauli::Z)).collect();
        s.push((self.chain_qubit(spin, c), if k % 2 == 0 { Pauli::X } else { Pauli::Y }));
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits % 2 == 0 || self.ancilla != self.n_qubits / 2 {
            return invalid("ancilla must be the middle qubit of an odd register");
        }
        for (i, g) in self.gates.iter().enumerate() {
            let qs = g.qubits();
            if qs.iter().any(|&q| q >= self.n_qubits) {
                return invalid(format!("gate {i} ({}) out of range", g.name()));
            }
            let mut sorted = qs.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return invalid(format!("gate {i} ({}) repeats a qubit", g.name()));
            }
            if let Gate::Match(m) = g {
                if m.q + 1 == self.ancilla || m.q == self.ancilla {
                    return invalid(format!("matchgate {i} straddles the ancilla"));
                }
            }
        }
        Ok(())
    }

    pub fn cnot_tally(&self) -> usize {
        self.gates.iter().map(Gate::cnots).sum()
    }

    pub fn matchgate_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Match(_))).count()
    }

    /// Plain-text gate list: header `QUBITS n ANCILLA a`, then one gate per line.
    pub fn to_gatelist(&self) -> String {
        let mut out = format!("QUBITS {} ANCILLA {}\n", self.n_qubits, self.ancilla);
        for g in &self.gates {
            out.push_str(g.name());
            match g {
                Gate::Match(m) => {
                    let _ = write!(out, " {} {}", m.q, m.q + 1);
                    for a in m.angles {
                        let _ = write!(out, " {a:?}");
                    }
                }
                Gate::Zz { a, b, theta } => {
                    let _ = write!(out, " {a} {b} {theta:?}");
                }
                Gate::Rz { q, theta } | Gate::Ry { q, theta } => {
                    let _ = write!(out, " {q} {theta:?}");
                }
                Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::X(q) => {
                    let _ = write!(out, " {q}");
                }
                Gate::Controlled { control, string, .. } => {
                    let _ = write!(out, " {control}");
                    for (q, p) in string {
                        let _ = write!(out, " {}{q}", p.letter());
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn export_gatelist(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_gatelist())?)
    }

    pub fn import_gatelist(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse(format!("gate list line {}: {msg}", line + 1));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| bad(0, "missing header"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "QUBITS" || h[2] != "ANCILLA" {
            return Err(bad(0, "expected `QUBITS n ANCILLA a`"));
        }
        let n_qubits = h[1].parse().map_err(|_| bad(0, "qubit count"))?;
        let ancilla = h[3].parse().map_err(|_| bad(0, "ancilla index"))?;
        let mut gates = Vec::new();
        for (ln, line) in lines {
            let tok: Vec<&str> = line.split_whitespace().collect();
            let uint = |i: usize| -> Result<usize> {
                tok.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| bad(ln, "bad qubit index"))
            };
            let real = |i: usize| -> Result<f64> {
                tok.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| bad(ln, "bad angle"))
            };
            let arity = |n: usize| if tok.len() == n { Ok(()) } else { Err(bad(ln, "wrong field count")) };
            let gate = match tok[0] {
                "MG" => {
                    arity(9)?;
                    if uint(2)? != uint(1)? + 1 {
                        return Err(bad(ln, "matchgate qubits must be adjacent"));
                    }
                    let mut angles = [0.0; 6];
                    for (k, a) in angles.iter_mut().enumerate() {
                        *a = real(3 + k)?;
                    }
                    Gate::Match(Matchgate::new(uint(1)?, angles))
                }
                "ZZ" => {
                    arity(4)?;
                    Gate::Zz { a: uint(1)?, b: uint(2)?, theta: real(3)? }
                }
                "RZ" | "RY" => {
                    arity(3)?;
                    let (q, theta) = (uint(1)?, real(2)?);
                    if tok[0] == "RZ" { Gate::Rz { q, theta } } else { Gate::Ry { q, theta } }
                }
                "H" | "S" | "SDG" | "X" => {
                    arity(2)?;
                    let q = uint(1)?;
                    match tok[0] {
                        "H" => Gate::H(q),
                        "S" => Gate::S(q),
                        "SDG" => Gate::Sdg(q),
                        _ => Gate::X(q),
                    }
                }
                "CP" | "ACP" => {
                    if tok.len() < 3 {
                        return Err(bad(ln, "controlled string needs a target"));
                    }
                    let string = tok[2..]
                        .iter()
                        .map(|t| {
                            let p = match t.chars().next() {
                                Some('X') => Pauli::X,
                                Some('Y') => Pauli::Y,
                                Some('Z') => Pauli::Z,
                                _ => return Err(bad(ln, "bad Pauli letter")),
                            };
                            t[1..].parse().map(|q| (q, p)).map_err(|_| bad(ln, "bad Pauli qubit"))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Gate::Controlled { control: uint(1)?, anti: tok[0] == "ACP", string }
                }
                other => return Err(bad(ln, &format!("unknown gate `{other}`"))),
            };
            gates.push(gate);
        }
        let c = Circuit { n_qubits, ancilla, gates };
        c.validate()?;
        Ok(c)
    }
}
