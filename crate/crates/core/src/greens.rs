//! Impurity Green's function from Majorana correlators between SGS states.
//!
//! With `d = (γ₊ + iγ₋)/2`,
//! `⟨φ_i|{d(t), d†}|φ_j⟩ = ¼ Σ_ab s_ab ⟨φ_i|{γ_a(t), γ_b}|φ_j⟩`,
//! `s = (1, −i, i, 1)` for `(a,b) = (++, +−, −+, −−)`. The second ordering of
//! the anticommutator is `conj(⟨φ_j|γ_a(t)γ_b|φ_i⟩)`, so only `γ_a(t)γ_b`
//! correlators are ever measured.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::circuit::synth::{hopping_generator, rotation_from_generator};
use crate::circuit::{build_hadamard_test, Axis, HadamardOptions, TrotterPlan};
use crate::error::{invalid, Error, Result};
use crate::fgs::{monomial_element, signed_overlap, GaussianState};
use crate::fock::{apply_majorana, embed, FockSector, SectorHamiltonian, Spin};
use crate::linalg::{sym_eigen, CMat, RMat, C64};
use crate::model::{quadratic_matrix, ImpurityModel};
use crate::par;
use crate::simulator::{self, NoiseSpec};

pub const DEFAULT_NT: usize = 20;
pub const DEFAULT_DT: f64 = 0.3;

const S_AB: [C64; 4] = [C64::new(1.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(1.0, 0.0)];
/// `(a, b)` parities in the order of `S_AB` (0 = γ₊, 1 = γ₋).
const AB: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "engine")]
pub enum Engine {
    /// Noiseless Hadamard-test circuits on the dense simulator.
    Statevector,
    /// Sampled circuits with depolarizing noise, post-selection and rescaling.
    Shots { noise: NoiseSpec, seed: u64 },
    /// Exact evolution: Gaussian/Pfaffian algebra when U = 0, ED otherwise.
    PfaffianOracle,
}

impl Engine {
    pub fn label(&self) -> &'static str {
        match self {
            Engine::Statevector => "statevector",
            Engine::Shots { .. } => "shots",
            Engine::PfaffianOracle => "pfaffian-oracle",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreensOptions {
    pub n_t: usize,
    pub dt: f64,
    /// Trotter steps per grid interval (circuit engines).
    pub substeps: usize,
    pub orbital: usize,
    pub spin: Spin,
}

impl Default for GreensOptions {
    fn default() -> Self {
        Self { n_t: DEFAULT_NT, dt: DEFAULT_DT, substeps: 1, orbital: 0, spin: Spin::Up }
    }
}

impl GreensOptions {
    pub fn t_grid(&self) -> Vec<f64> {
        (0..self.n_t).map(|k| k as f64 * self.dt).collect()
    }

    fn validate(&self, model: &ImpurityModel) -> Result<()> {
        if self.n_t == 0 || !(self.dt > 0.0) || self.substeps == 0 {
            return invalid("time grid needs n_t ≥ 1, dt > 0 and substeps ≥ 1");
        }
        if self.orbital >= model.n_imp {
            return invalid(format!("orbital {} out of range (n_imp = {})", self.orbital, model.n_imp));
        }
        Ok(())
    }

    fn plan(&self, k: usize) -> Option<TrotterPlan> {
        (k > 0).then(|| TrotterPlan { dt: self.dt / self.substeps as f64, steps: k * self.substeps })
    }
}

/// Assembled `C_ij(t) = ⟨φ_i|{d(t), d†}|φ_j⟩` on a uniform grid.
#[derive(Clone, Debug)]
pub struct CorrelatorSeries {
    pub t_grid: Vec<f64>,
    pub values: Vec<CMat>,
    pub source: String,
}

/// One measured quantity `⟨φ_i|γ_a(t)γ_b|φ_j⟩` (global Majorana indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelatorJob {
    pub i: usize,
    pub j: usize,
    pub a: usize,
    pub b: usize,
    pub k_t: usize,
}

fn majorana_indices(model: &ImpurityModel, orbital: usize, spin_block: usize) -> [usize; 2] {
    let m = spin_block * model.n_orbitals() + orbital;
    [2 * m, 2 * m + 1]
}

/// All jobs for one spin block, ordered `(k_t, i, j, ab)`.
pub fn jobs(model: &ImpurityModel, rank: usize, opts: &GreensOptions, spin_block: usize) -> Vec<CorrelatorJob> {
    let g = majorana_indices(model, opts.orbital, spin_block);
    let mut out = Vec::with_capacity(opts.n_t * rank * rank * 4);
    for k_t in 0..opts.n_t {
        for i in 0..rank {
            for j in 0..rank {
                for (pa, pb) in AB {
                    out.push(CorrelatorJob { i, j, a: g[pa], b: g[pb], k_t });
                }
            }
        }
    }
    out
}

/// Exact many-body evolution restricted to the sectors it touches.
pub struct ExactEvolver {
    n: usize,
    sectors: HashMap<(usize, usize), (FockSector, DVector<f64>, RMat)>,
}

impl ExactEvolver {
    pub fn new(model: &ImpurityModel, n_up: usize, n_dn: usize) -> Result<Self> {
        let n = model.n_orbitals();
        if 2 * n > 16 {
            return invalid("exact evolution limited to 8 orbitals per spin");
        }
        let mut sectors = HashMap::new();
        for (du, dd) in [(0i64, 0i64), (1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (u, d) = (n_up as i64 + du, n_dn as i64 + dd);
            if u < 0 || d < 0 || u as usize > n || d as usize > n {
                continue;
            }
            let s = FockSector::new(n, u as usize, d as usize)?;
            let (vals, vecs) = sym_eigen(&SectorHamiltonian::build(model, &s)?.to_dense());
            sectors.insert((u as usize, d as usize), (s, vals, vecs));
        }
        Ok(Self { n, sectors })
    }

    /// `e^{−iHt} ψ` for a full Fock vector supported on the cached sectors.
    pub fn evolve(&self, psi: &[C64], t: f64) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        let mut seen = 0.0;
        for (s, vals, vecs) in self.sectors.values() {
            let amps = DVector::from_fn(s.dim(), |k, _| psi[s.config(k) as usize]);
            let w = amps.norm_squared();
            if w == 0.0 {
                continue;
            }
            seen += w;
            let mut c = vecs.transpose().map(|x| C64::new(x, 0.0)) * amps;
            for (k, ck) in c.iter_mut().enumerate() {
                *ck *= C64::new(0.0, -vals[k] * t).exp();
            }
            let back = vecs.map(|x| C64::new(x, 0.0)) * c;
            for k in 0..s.dim() {
                out[s.config(k) as usize] = back[k];
            }
        }
        let total: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if (total - seen).abs() > 1e-10 * total.max(1.0) {
            return Err(Error::Numerical("state leaves the cached sectors".into()));
        }
        Ok(out)
    }

    pub fn n_orbitals(&self) -> usize {
        self.n
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Gaussian route: `γ_a(t) = Σ_ν R(t)_{aν} γ_ν`, then Pfaffian matrix elements.
fn gaussian_correlator(model: &ImpurityModel, si: &GaussianState, sj: &GaussianState, job: &CorrelatorJob, t: f64) -> Result<C64> {
    let n = model.n_orbitals();
    let r = rotation_from_generator(&hopping_generator(&quadratic_matrix(model)?), t)?;
    let block = job.a / (2 * n);
    let local = job.a % (2 * n);
    let mut acc = C64::new(0.0, 0.0);
    for nu_local in 0..2 * n {
        let coef = r[(local, nu_local)];
        if coef == 0.0 {
            continue;
        }
        let nu = block * 2 * n + nu_local;
        let term = match nu.cmp(&job.b) {
            std::cmp::Ordering::Equal => C64::new(signed_overlap(si, sj)?, 0.0),
            std::cmp::Ordering::Less => monomial_element(si, sj, (1 << nu) | (1 << job.b))?,
            std::cmp::Ordering::Greater => -monomial_element(si, sj, (1 << nu) | (1 << job.b))?,
        };
        acc += term * coef;
    }
    Ok(acc)
}

/// Free-fermion evaluation of correlator jobs (exact only for `U = 0`).
pub fn gaussian_jobs(model: &ImpurityModel, states: &[GaussianState], jobs: &[CorrelatorJob], dt: f64) -> Result<Vec<C64>> {
    par::map_slice(jobs, |job| gaussian_correlator(model, &states[job.i], &states[job.j], job, job.k_t as f64 * dt))
        .into_iter()
        .collect()
}

/// Exact-diagonalization evaluation of correlator jobs.
pub fn exact_jobs(model: &ImpurityModel, states: &[GaussianState], jobs: &[CorrelatorJob], dt: f64) -> Result<Vec<C64>> {
    let (n_up, n_dn) = (states[0].n_up(), states[0].n_dn());
    let ev = ExactEvolver::new(model, n_up, n_dn)?;
    let sector = FockSector::new(model.n_orbitals(), n_up, n_dn)?;
    let fock: Vec<Vec<C64>> = states.iter().map(|s| Ok(embed(&sector, &s.to_fock(&sector)?))).collect::<Result<_>>()?;
    par::map_slice(jobs, |job| {
        let t = job.k_t as f64 * dt;
        let left = ev.evolve(&fock[job.i], t)?;
        let right = ev.evolve(&apply_majorana(&fock[job.j], job.b), t)?;
        Ok(dot(&left, &apply_majorana(&right, job.a)))
    })
    .into_iter()
    .collect()
}

/// Evaluates a batch of correlator jobs with one engine.
pub fn evaluate_jobs(
    model: &ImpurityModel,
    states: &[GaussianState],
    jobs: &[CorrelatorJob],
    opts: &GreensOptions,
    engine: &Engine,
) -> Result<Vec<C64>> {
    model.validate()?;
    opts.validate(model)?;
    let (n_up, n_dn) = (states[0].n_up(), states[0].n_dn());
    match engine {
        Engine::PfaffianOracle => {
            if model.u_intra == 0.0 && model.u_inter == 0.0 {
                // Orthogonal pairs have no Pfaffian formula; those fall back to ED.
                if let Ok(v) = gaussian_jobs(model, states, jobs, opts.dt) {
                    return Ok(v);
                }
            }
            exact_jobs(model, states, jobs, opts.dt)
        }
        Engine::Statevector | Engine::Shots { .. } => par::map_indexed(jobs.len(), |idx| {
            let job = &jobs[idx];
            let plan = opts.plan(job.k_t);
            let mut parts = [0.0; 2];
            for (p, axis) in [Axis::X, Axis::Y].into_iter().enumerate() {
                // Post-selection reads every register, so the light cone must stay intact.
                let hopts = HadamardOptions { prune: !matches!(engine, Engine::Shots { .. }), ..Default::default() };
                let h = build_hadamard_test(model, &states[job.i], &states[job.j], job.a, job.b, plan.as_ref(), axis, hopts)?;
                parts[p] = h.sign
                    * match engine {
                        Engine::Shots { noise, seed } => {
                            let job_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add((2 * idx + p) as u64);
                            let counts = simulator::sample(&h.circuit, noise, job_seed)?;
                            let kept = simulator::post_select(&counts, n_up, n_dn)?;
                            let z = simulator::ancilla_z_estimate(&kept.counts, kept.total);
                            let n1 = crate::circuit::resources::single_qubit_gates(&h.circuit);
                            simulator::rescale(z, n1, h.circuit.cnot_tally(), noise.eps_1q.min(1.0 - 1e-12), noise.eps_2q.min(1.0 - 1e-12))?
                        }
                        _ => simulator::run(&h.circuit)?.z_expectation(h.circuit.ancilla),
                    };
            }
            Ok(C64::new(parts[0], parts[1]))
        })
        .into_iter()
        .collect(),
    }
}

/// `¼ Σ s_ab (⟨φ_i|γ_a(t)γ_b|φ_j⟩ + conj⟨φ_j|γ_a(t)γ_b|φ_i⟩)`.
pub fn assemble_cij(raw_ij: &[C64], raw_ji: &[C64]) -> Result<C64> {
    if raw_ij.len() != 4 || raw_ji.len() != 4 {
        return invalid("assemble_cij needs all four (a,b) correlators");
    }
    Ok((0..4).map(|k| S_AB[k] * (raw_ij[k] + raw_ji[k].conj())).sum::<C64>() / 4.0)
}

/// Correlator series for the basis, one engine, spin as in `opts`.
pub fn correlator_series(model: &ImpurityModel, states: &[GaussianState], opts: &GreensOptions, engine: &Engine) -> Result<CorrelatorSeries> {
    if states.is_empty() {
        return invalid("empty basis");
    }
    let chi = states.len();
    let blocks: &[(usize, f64)] = match opts.spin {
        Spin::Up => &[(0, 1.0)],
        Spin::Down => &[(1, 1.0)],
        Spin::Averaged => &[(0, 0.5), (1, 0.5)],
    };
    let mut values = vec![CMat::zeros(chi, chi); opts.n_t];
    for &(block, weight) in blocks {
        let js = jobs(model, chi, opts, block);
        let raw = evaluate_jobs(model, states, &js, opts, engine)?;
        let at = |k: usize, i: usize, j: usize| &raw[((k * chi + i) * chi + j) * 4..][..4];
        for (k, v) in values.iter_mut().enumerate() {
            for i in 0..chi {
                for j in 0..chi {
                    v[(i, j)] += assemble_cij(at(k, i, j), at(k, j, i))? * weight;
                }
            }
        }
    }
    Ok(CorrelatorSeries { t_grid: opts.t_grid(), values, source: engine.label().to_string() })
}

/// `G_R(t) = −i Σ_ij α_i α_j C_ij(t)`.
pub fn recombine(series: &CorrelatorSeries, alpha: &DVector<f64>) -> Result<Vec<C64>> {
    let chi = alpha.len();
    if series.values.iter().any(|c| c.nrows() != chi || c.ncols() != chi) {
        return Err(Error::Dimension(format!("series rank differs from α of length {chi}")));
    }
    let a = alpha.map(|x| C64::new(x, 0.0));
    Ok(series.values.iter().map(|c| C64::new(0.0, -1.0) * (a.transpose() * c * &a)[(0, 0)]).collect())
}

/// CSV with columns `t,re,im`.
pub fn to_csv(t_grid: &[f64], values: &[C64]) -> String {
    let mut s = String::from("t,re,im\n");
    for (t, v) in t_grid.iter().zip(values) {
        let _ = writeln!(s, "{t},{},{}", v.re, v.im);
    }
    s
}

pub fn from_csv(text: &str) -> Result<(Vec<f64>, Vec<C64>)> {
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("csv line {}: {e}", ln + 1)))?;
        if f.len() != 3 {
            return Err(Error::Parse(format!("csv line {}: expected t,re,im", ln + 1)));
        }
        ts.push(f[0]);
        vs.push(C64::new(f[1], f[2]));
    }
    Ok((ts, vs))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub circuit: usize,
    pub i: usize,
    pub j: usize,
    pub a: usize,
    pub b: usize,
    pub t: f64,
    pub axis: Axis,
}

/// Maps every circuit (two readouts per job) to its coordinates.
pub fn circuit_manifest(jobs: &[CorrelatorJob], opts: &GreensOptions) -> Vec<ManifestEntry> {
    jobs.iter()
        .flat_map(|j| [Axis::X, Axis::Y].map(|axis| (j, axis)))
        .enumerate()
        .map(|(circuit, (j, axis))| ManifestEntry { circuit, i: j.i, j: j.j, a: j.a, b: j.b, t: j.k_t as f64 * opts.dt, axis })
        .collect()
}

/// Overlap matrix implied by the series at `t = 0` (sum-rule check).
pub fn overlap_at_zero(series: &CorrelatorSeries) -> DMatrix<f64> {
    series.values[0].map(|z| z.re)
}
