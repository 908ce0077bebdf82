//! Exact diagonalization in fixed-(n↑, n↓) sectors and Lehmann-representation
//! Green's functions. This is the oracle every other module is checked against.
//!
//! Modes: up orbitals `0..N`, down orbitals `N..2N`. A configuration `bits`
//! denotes `c†_{m1}…c†_{mk}|0⟩` with ascending modes, so `c_m` picks up
//! `(−1)^{#occupied modes below m}`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{sym_eigen, C64, I};
use crate::model::{quadratic_matrix, ImpurityModel};
use crate::par;

/// Dense diagonalization up to this dimension, Lanczos above.
pub const DENSE_LIMIT: usize = 5000;

/// Annihilates mode `m`; returns the new configuration and its sign.
#[inline]
pub fn annihilate(bits: u64, m: usize) -> Option<(u64, f64)> {
    if bits >> m & 1 == 0 {
        return None;
    }
    let below = (bits & ((1u64 << m) - 1)).count_ones();
    Some((bits & !(1u64 << m), if below % 2 == 0 { 1.0 } else { -1.0 }))
}

#[inline]
pub fn create(bits: u64, m: usize) -> Option<(u64, f64)> {
    if bits >> m & 1 == 1 {
        return None;
    }
    let below = (bits & ((1u64 << m) - 1)).count_ones();
    Some((bits | (1u64 << m), if below % 2 == 0 { 1.0 } else { -1.0 }))
}

/// All `n`-bit words with exactly `k` bits set, ascending.
pub fn combinations(n: usize, k: usize) -> Vec<u64> {
    (0u64..(1u64 << n)).filter(|b| b.count_ones() as usize == k).collect()
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Spin channel of an impurity Green's function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
    /// Average of both channels; removes the spin-degeneracy ambiguity of
    /// odd-N half filling.
    Averaged,
}

/// Fixed particle-number sector.
#[derive(Clone, Debug)]
pub struct FockSector {
    pub n_orbitals: usize,
    pub n_up: usize,
    pub n_dn: usize,
    pub up: Vec<u64>,
    pub dn: Vec<u64>,
    up_index: HashMap<u64, usize>,
    dn_index: HashMap<u64, usize>,
}

impl FockSector {
    pub fn new(n_orbitals: usize, n_up: usize, n_dn: usize) -> Result<Self> {
        if n_up > n_orbitals || n_dn > n_orbitals {
            return invalid(format!("sector ({n_up},{n_dn}) empty for {n_orbitals} orbitals"));
        }
        if 2 * n_orbitals > 62 {
            return invalid("too many modes for bit-packed Fock configurations");
        }
        let up = combinations(n_orbitals, n_up);
        let dn = combinations(n_orbitals, n_dn);
        let up_index = up.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        let dn_index = dn.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        Ok(Self { n_orbitals, n_up, n_dn, up, dn, up_index, dn_index })
    }

    /// Half-filled sector with `n↑ = ⌈N/2⌉`, `n↓ = ⌊N/2⌋`.
    pub fn half_filling(n_orbitals: usize) -> Result<Self> {
        Self::new(n_orbitals, n_orbitals.div_ceil(2), n_orbitals / 2)
    }

    pub fn dim(&self) -> usize {
        self.up.len() * self.dn.len()
    }

    /// Full configuration (up bits low, down bits shifted by `N`) of basis index `k`.
    pub fn config(&self, k: usize) -> u64 {
        let nd = self.dn.len();
        self.up[k / nd] | (self.dn[k % nd] << self.n_orbitals)
    }

    pub fn index(&self, bits: u64) -> Option<usize> {
        let mask = (1u64 << self.n_orbitals) - 1;
        let iu = self.up_index.get(&(bits & mask))?;
        let id = self.dn_index.get(&(bits >> self.n_orbitals))?;
        Some(iu * self.dn.len() + id)
    }

    pub fn expected_dim(&self) -> usize {
        binomial(self.n_orbitals, self.n_up) * binomial(self.n_orbitals, self.n_dn)
    }
}

/// Sparse real Hamiltonian restricted to a sector (rows of `(col, value)`).
pub struct SectorHamiltonian {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SectorHamiltonian {
    pub fn build(model: &ImpurityModel, sector: &FockSector) -> Result<Self> {
        let h = quadratic_matrix(model)?;
        let n = model.n_orbitals();
        if sector.n_orbitals != n {
            return Err(Error::Dimension(format!("sector has {} orbitals, model {}", sector.n_orbitals, n)));
        }
        let rows = par::map_indexed(sector.dim(), |k| {
            let bits = sector.config(k);
            let mut row: Vec<(usize, f64)> = Vec::new();
            let mut diag = interaction_energy(model, bits);
            for s in 0..2 {
                let off = s * n;
                for q in 0..n {
                    let Some((b1, s1)) = annihilate(bits, off + q) else { continue };
                    for p in 0..n {
                        let hpq = h[(p, q)];
                        if hpq == 0.0 {
                            continue;
                        }
                        if p == q {
                            diag += hpq;
                            continue;
                        }
                        if let Some((b2, s2)) = create(b1, off + p) {
                            let j = sector.index(b2).expect("hopping preserves the sector");
                            row.push((j, s1 * s2 * hpq));
                        }
                    }
                }
            }
            row.push((k, diag));
            row.sort_by_key(|e| e.0);
            row
        });
        Ok(Self { rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let y = par::map_indexed(self.rows.len(), |k| self.rows[k].iter().map(|&(j, v)| v * x[j]).sum::<f64>());
        DVector::from_vec(y)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.rows.len();
        let mut m = DMatrix::zeros(n, n);
        for (k, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(j, k)] += v;
            }
        }
        m
    }

    /// Row-sum bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        self.rows.iter().map(|r| r.iter().map(|e| e.1.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// Diagonal interaction energy of a configuration.
pub fn interaction_energy(model: &ImpurityModel, bits: u64) -> f64 {
    let n = model.n_orbitals();
    let occ = |m: usize| (bits >> m & 1) as f64;
    let mut e = 0.0;
    for i in 0..model.n_imp {
        e += model.u_intra * occ(i) * occ(n + i);
        for j in 0..model.n_imp {
            if i != j {
                let ni = occ(i) + occ(n + i);
                let nj = occ(j) + occ(n + j);
                e += model.u_inter * ni * nj;
            }
        }
    }
    e
}

/// Lowest eigenpair of a sector.
#[derive(Clone, Debug)]
pub struct ExactGroundState {
    pub energy: f64,
    pub amplitudes: DVector<f64>,
    pub n_up: usize,
    pub n_dn: usize,
    /// Number of states within 1e-8 of the ground energy inside the sector.
    pub degeneracy: usize,
}

/// Fixes the phase: largest-magnitude amplitude made positive.
fn fix_phase(v: &mut DVector<f64>) {
    let k = v.iamax();
    if v[k] < 0.0 {
        *v *= -1.0;
    }
}

pub fn ground_state(model: &ImpurityModel, sector: &FockSector) -> Result<ExactGroundState> {
    if sector.dim() == 0 {
        return invalid("empty sector");
    }
    let h = SectorHamiltonian::build(model, sector)?;
    let (energy, mut vec, degeneracy) = if h.dim() <= DENSE_LIMIT {
        let (vals, vecs) = sym_eigen(&h.to_dense());
        let deg = vals.iter().filter(|&&e| e - vals[0] < 1e-8).count();
        (vals[0], vecs.column(0).into_owned(), deg)
    } else {
        let (e, v) = lanczos_lowest(&h, 1e-10)?;
        (e, v, 1)
    };
    fix_phase(&mut vec);
    Ok(ExactGroundState { energy, amplitudes: vec, n_up: sector.n_up, n_dn: sector.n_dn, degeneracy })
}

/// Scans every sector with `N` particles; lowest energy wins, ties go to the
/// first sector in ascending `|n↑ − n↓|`, then descending `n↑`.
pub fn ground_state_any_sector(model: &ImpurityModel) -> Result<(FockSector, ExactGroundState)> {
    let n = model.n_orbitals();
    let mut cands: Vec<(usize, usize)> = (0..=n).map(|u| (u, n - u)).collect();
    cands.sort_by_key(|&(u, d)| (u.abs_diff(d), std::cmp::Reverse(u)));
    let mut best: Option<(FockSector, ExactGroundState)> = None;
    for (u, d) in cands {
        let s = FockSector::new(n, u, d)?;
        let g = ground_state(model, &s)?;
        if best.as_ref().is_none_or(|(_, b)| g.energy < b.energy - 1e-9) {
            best = Some((s, g));
        }
    }
    Ok(best.expect("at least one sector"))
}

/// Lanczos with full reorthogonalization and single-vector restarts.
fn lanczos_lowest(h: &SectorHamiltonian, tol: f64) -> Result<(f64, DVector<f64>)> {
    let n = h.dim();
    let scale = h.norm_bound().max(1.0);
    let mut x = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 104729) as f64 * 1e-6);
    x /= x.norm();
    let m = 120.min(n);
    for _ in 0..50 {
        let mut basis: Vec<DVector<f64>> = vec![x.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..m {
            let mut w = h.apply(&basis[j]);
            alpha.push(basis[j].dot(&w));
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dot(&w);
                    w -= b * c;
                }
            }
            let bn = w.norm();
            if j + 1 == m || bn < 1e-12 * scale {
                break;
            }
            beta.push(bn);
            basis.push(w / bn);
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let (vals, vecs) = sym_eigen(&t);
        let mut y = DVector::zeros(n);
        for (i, b) in basis.iter().take(k).enumerate() {
            y += b * vecs[(i, 0)];
        }
        y /= y.norm();
        let r = h.apply(&y) - &y * vals[0];
        x = y;
        if r.norm() <= tol * scale {
            return Ok((vals[0], x));
        }
    }
    Err(Error::Numerical("Lanczos did not converge".into()))
}

/// Poles and residues of a Green's function, `G(z) = Σ w / (z − ω)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Lehmann {
    pub poles: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Lehmann {
    /// Merges poles closer than `tol` and drops weights below 1e-14.
    pub fn merged(mut pairs: Vec<(f64, f64)>, tol: f64) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = Lehmann::default();
        for (p, w) in pairs {
            if w.abs() < 1e-14 {
                continue;
            }
            match out.poles.last() {
                Some(&last) if (p - last).abs() < tol => {
                    let k = out.poles.len() - 1;
                    let wt = out.weights[k] + w;
                    out.poles[k] = (last * out.weights[k] + p * w) / wt;
                    out.weights[k] = wt;
                }
                _ => {
                    out.poles.push(p);
                    out.weights.push(w);
                }
            }
        }
        out
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Retarded `G_R(t) = −i Σ w e^{−iωt}` (t ≥ 0).
    pub fn time(&self, t: f64) -> C64 {
        -I * self.poles.iter().zip(&self.weights).map(|(&p, &w)| w * (-I * p * t).exp()).sum::<C64>()
    }

    pub fn resolvent(&self, z: C64) -> C64 {
        self.poles.iter().zip(&self.weights).map(|(&p, &w)| w / (z - p)).sum()
    }

    pub fn freq(&self, omega: f64, eta: f64) -> C64 {
        self.resolvent(C64::new(omega, eta))
    }

    pub fn matsubara(&self, beta: f64, n_max: usize) -> Vec<C64> {
        matsubara_grid(beta, n_max).into_iter().map(|w| self.resolvent(C64::new(0.0, w))).collect()
    }
}

/// `ω_n = (2n+1)π/β` for `n in 0..n_max`.
pub fn matsubara_grid(beta: f64, n_max: usize) -> Vec<f64> {
    (0..n_max).map(|n| (2 * n + 1) as f64 * std::f64::consts::PI / beta).collect()
}

fn spin_channels(spin: Spin) -> &'static [(usize, f64)] {
    match spin {
        Spin::Up => &[(0, 1.0)],
        Spin::Down => &[(1, 1.0)],
        Spin::Averaged => &[(0, 0.5), (1, 0.5)],
    }
}

/// Lehmann representation of `⟨{d, d†}⟩` for impurity `orbital` from an
/// arbitrary normalized sector state `psi` with reference energy `e0`.
pub fn lehmann_from_state(
    model: &ImpurityModel,
    sector: &FockSector,
    psi: &DVector<f64>,
    e0: f64,
    orbital: usize,
    spin: Spin,
) -> Result<Lehmann> {
    if orbital >= model.n_imp {
        return invalid(format!("orbital {orbital} out of range (n_imp = {})", model.n_imp));
    }
    let n = model.n_orbitals();
    let mut pairs = Vec::new();
    for &(s, scale) in spin_channels(spin) {
        let mode = s * n + orbital;
        for particle in [true, false] {
            let (du, dd) = match (s, particle) {
                (0, true) => (1i64, 0i64),
                (0, false) => (-1, 0),
                (_, true) => (0, 1),
                (_, false) => (0, -1),
            };
            let nu = sector.n_up as i64 + du;
            let nd = sector.n_dn as i64 + dd;
            if nu < 0 || nd < 0 || nu as usize > n || nd as usize > n {
                continue;
            }
            let target = FockSector::new(n, nu as usize, nd as usize)?;
            let mut phi = DVector::<f64>::zeros(target.dim());
            for k in 0..sector.dim() {
                if psi[k] == 0.0 {
                    continue;
                }
                let op = if particle { create(sector.config(k), mode) } else { annihilate(sector.config(k), mode) };
                if let Some((b, sg)) = op {
                    phi[target.index(b).expect("target sector")] += sg * psi[k];
                }
            }
            if phi.norm() < 1e-14 {
                continue;
            }
            let h = SectorHamiltonian::build(model, &target)?;
            if h.dim() > DENSE_LIMIT {
                return invalid(format!("excitation sector of dimension {} exceeds the dense limit", h.dim()));
            }
            let (vals, vecs) = sym_eigen(&h.to_dense());
            let amps = vecs.transpose() * &phi;
            for (k, a) in amps.iter().enumerate() {
                let pole = if particle { vals[k] - e0 } else { e0 - vals[k] };
                pairs.push((pole, scale * a * a));
            }
        }
    }
    Ok(Lehmann::merged(pairs, 1e-9))
}

pub fn lehmann(model: &ImpurityModel, gs: &ExactGroundState, orbital: usize, spin: Spin) -> Result<Lehmann> {
    let sector = FockSector::new(model.n_orbitals(), gs.n_up, gs.n_dn)?;
    lehmann_from_state(model, &sector, &gs.amplitudes, gs.energy, orbital, spin)
}

pub fn greens_time(model: &ImpurityModel, gs: &ExactGroundState, t_grid: &[f64], orbital: usize, spin: Spin) -> Result<Vec<C64>> {
    let l = lehmann(model, gs, orbital, spin)?;
    Ok(par::map_slice(t_grid, |&t| l.time(t)))
}

pub fn greens_freq(
    model: &ImpurityModel,
    gs: &ExactGroundState,
    omega_grid: &[f64],
    eta: f64,
    orbital: usize,
    spin: Spin,
) -> Result<Vec<C64>> {
    if !(eta > 0.0) {
        return invalid("eta must be positive");
    }
    let l = lehmann(model, gs, orbital, spin)?;
    Ok(par::map_slice(omega_grid, |&w| l.freq(w, eta)))
}

pub fn greens_matsubara(
    model: &ImpurityModel,
    gs: &ExactGroundState,
    beta: f64,
    n_max: usize,
    orbital: usize,
    spin: Spin,
) -> Result<Vec<C64>> {
    if !(beta > 0.0) {
        return invalid("beta must be positive");
    }
    Ok(lehmann(model, gs, orbital, spin)?.matsubara(beta, n_max))
}

/// Applies Majorana `γ_k` (`γ_{2m} = c_m + c†_m`, `γ_{2m+1} = i(c†_m − c_m)`)
/// to a full Fock-space vector over `2^{n_modes}` configurations.
pub fn apply_majorana(psi: &[C64], k: usize) -> Vec<C64> {
    let m = k / 2;
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    for (bits, &a) in psi.iter().enumerate() {
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        let bits = bits as u64;
        if let Some((b, s)) = annihilate(bits, m) {
            out[b as usize] += if k % 2 == 0 { a * s } else { -I * a * s };
        }
        if let Some((b, s)) = create(bits, m) {
            out[b as usize] += if k % 2 == 0 { a * s } else { I * a * s };
        }
    }
    out
}

/// Embeds a sector vector into the full `2^{2N}` Fock space.
pub fn embed(sector: &FockSector, psi: &DVector<f64>) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); 1usize << (2 * sector.n_orbitals)];
    for k in 0..sector.dim() {
        out[sector.config(k) as usize] = C64::new(psi[k], 0.0);
    }
    out
}

/// Dense many-body Hamiltonian over the full Fock space (small systems only).
pub fn full_hamiltonian(model: &ImpurityModel) -> Result<DMatrix<f64>> {
    let n = model.n_orbitals();
    let dim = 1usize << (2 * n);
    let mut m = DMatrix::zeros(dim, dim);
    for nu in 0..=n {
        for nd in 0..=n {
            let s = FockSector::new(n, nu, nd)?;
            let h = SectorHamiltonian::build(model, &s)?.to_dense();
            for i in 0..s.dim() {
                for j in 0..s.dim() {
                    m[(s.config(i) as usize, s.config(j) as usize)] = h[(i, j)];
                }
            }
        }
    }
    Ok(m)
}
