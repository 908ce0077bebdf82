//! Superpositions of Gaussian states: candidate pools, greedy selection, the
//! regularized generalized eigenproblem and eigenvector continuation.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fgs::{hamiltonian_polynomial, signed_overlap, GaussianState, MajoranaPolynomial, PairContext};
use crate::fock::FockSector;
use crate::linalg::{sym_eigen, RMat};
use crate::model::{quadratic_matrix, ImpurityModel};
use crate::par;

pub const DEFAULT_POOL_SIZE: usize = 1000;
pub const DEFAULT_COND_MAX: f64 = 1e10;

/// Randomized quadratic parameters behind one pool state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolParams {
    pub nu: Vec<f64>,
    pub eps: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct CandidatePool {
    pub states: Vec<GaussianState>,
    pub provenance: Vec<PoolParams>,
}

/// Particle content used throughout: `(⌈N/2⌉, ⌊N/2⌋)`.
pub fn half_filling_content(model: &ImpurityModel) -> (usize, usize) {
    let n = model.n_orbitals();
    (n.div_ceil(2), n / 2)
}

fn magnitude(m: &RMat) -> f64 {
    m.amax().max(0.1)
}

/// Ground states of randomized non-interacting variants of `model`. Entry 0
/// is always the unperturbed `U = 0` ground state.
pub fn generate_pool(model: &ImpurityModel, size: usize, seed: u64) -> Result<CandidatePool> {
    if size == 0 {
        return invalid("pool size must be at least 1");
    }
    model.validate()?;
    let (n_up, n_dn) = half_filling_content(model);
    let (mn, me, mv) = (magnitude(&model.nu), magnitude(&model.eps), magnitude(&model.v));
    let results = par::map_indexed(size, |k| -> Result<(GaussianState, PoolParams)> {
        let mut m = model.clone();
        if k > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut draw = |s: f64| 3.0 * s * (2.0 * rng.random::<f64>() - 1.0);
            for i in 0..m.n_imp {
                m.nu[(i, i)] = draw(mn);
            }
            for x in m.eps.iter_mut() {
                *x = draw(me);
            }
            for x in m.v.iter_mut() {
                *x = draw(mv);
            }
        }
        let h = quadratic_matrix(&m)?;
        let st = GaussianState::from_hopping(&h, n_up, n_dn)?;
        let params = PoolParams {
            nu: (0..m.n_imp).map(|i| m.nu[(i, i)]).collect(),
            eps: m.eps.iter().copied().collect(),
            v: m.v.iter().copied().collect(),
        };
        Ok((st, params))
    });
    let mut pool = CandidatePool { states: Vec::with_capacity(size), provenance: Vec::with_capacity(size) };
    for r in results {
        let (s, p) = r?;
        pool.states.push(s);
        pool.provenance.push(p);
    }
    Ok(pool)
}

/// Selected subspace with its projected problem and solution.
#[derive(Clone, Debug)]
pub struct SgsBasis {
    pub states: Vec<GaussianState>,
    pub s: RMat,
    pub htilde: RMat,
    pub alpha: DVector<f64>,
    pub energy: f64,
    /// Pool indices of the selected states.
    pub provenance: Vec<usize>,
}

impl SgsBasis {
    pub fn rank(&self) -> usize {
        self.states.len()
    }

    /// `Σ α_i |φ_i⟩` expanded into a Fock sector (normalized).
    pub fn to_fock(&self, sector: &FockSector) -> Result<DVector<f64>> {
        let mut psi = DVector::zeros(sector.dim());
        for (a, st) in self.alpha.iter().zip(&self.states) {
            psi += st.to_fock(sector)? * *a;
        }
        let n = psi.norm();
        if n < 1e-12 {
            return Err(Error::Numerical("SGS state has vanishing norm".into()));
        }
        Ok(psi / n)
    }
}

/// Options for [`select_subspace`].
#[derive(Clone, Debug)]
pub struct SelectOptions {
    pub max_rank: usize,
    /// Stop when the last `window` additions together changed the energy by
    /// less than this (relative).
    pub energy_tol: f64,
    pub window: usize,
    pub cond_max: f64,
    /// Optional `(E_exact, tol)`: stop as soon as the relative error is below `tol`.
    pub target: Option<(f64, f64)>,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self { max_rank: 64, energy_tol: 1e-3, window: 5, cond_max: DEFAULT_COND_MAX, target: None }
    }
}

/// Lowest generalized eigenpair of `H α = E S α` via `S^{-1/2}` with a
/// Tikhonov ridge when `S` is ill-conditioned.
pub fn solve_gevp(s: &RMat, h: &RMat) -> Result<(f64, DVector<f64>)> {
    let chi = s.nrows();
    if chi == 0 || h.shape() != s.shape() {
        return Err(Error::Dimension("GEVP matrices must be square and equal-sized".into()));
    }
    let (vals, vecs) = sym_eigen(s);
    let smax = vals[chi - 1];
    if vals[0] < -1e-8 * smax.max(1.0) {
        return Err(Error::Numerical(format!("overlap matrix indefinite (min eigenvalue {:.3e})", vals[0])));
    }
    let ridge = if vals[0] <= 0.0 || smax / vals[0] > DEFAULT_COND_MAX {
        1e-12 * s.trace() / chi as f64
    } else {
        0.0
    };
    let inv_sqrt = DVector::from_fn(chi, |k, _| 1.0 / (vals[k].max(0.0) + ridge).sqrt());
    let x = &vecs * DMatrix::from_diagonal(&inv_sqrt);
    let hp = x.transpose() * h * &x;
    let hp = (&hp + hp.transpose()) * 0.5;
    let (_, yv) = sym_eigen(&hp);
    let mut alpha = &x * yv.column(0);
    let norm = (alpha.transpose() * s * &alpha)[(0, 0)];
    if !(norm > 0.0) {
        return Err(Error::Numerical("GEVP eigenvector has non-positive S-norm".into()));
    }
    alpha /= norm.sqrt();
    let k = alpha.iamax();
    if alpha[k] < 0.0 {
        alpha = -alpha;
    }
    let energy = (alpha.transpose() * h * &alpha)[(0, 0)];
    Ok((energy, alpha))
}

/// `|Ẽ − E| / |E|`.
pub fn energy_error(basis_energy: f64, exact_energy: f64) -> Result<f64> {
    if exact_energy == 0.0 {
        return invalid("relative energy error undefined for zero exact energy");
    }
    Ok((basis_energy - exact_energy).abs() / exact_energy.abs())
}

fn condition(s: &RMat) -> f64 {
    let (v, _) = sym_eigen(s);
    if v[0] <= 0.0 {
        f64::INFINITY
    } else {
        v[v.len() - 1] / v[0]
    }
}

/// Greedy selection: lowest-energy state first, then the candidate with the
/// smallest maximal overlap with the selected set.
pub fn select_subspace(pool: &CandidatePool, model: &ImpurityModel, opts: &SelectOptions) -> Result<SgsBasis> {
    if pool.states.is_empty() {
        return invalid("empty candidate pool");
    }
    let poly = hamiltonian_polynomial(model)?;
    let diag: Vec<f64> = par::map_slice(&pool.states, |st| match PairContext::new(st, st) {
        Ok(ctx) => ctx.polynomial(&poly).re,
        Err(_) => f64::INFINITY,
    });
    let first = (0..diag.len()).min_by(|&a, &b| diag[a].total_cmp(&diag[b])).expect("nonempty");
    let mut chosen = vec![first];
    let mut s = RMat::from_element(1, 1, 1.0);
    let mut h = RMat::from_element(1, 1, diag[first]);
    let (mut energy, mut alpha) = solve_gevp(&s, &h)?;
    let mut used = vec![false; pool.states.len()];
    used[first] = true;
    let mut max_ov = vec![0.0f64; pool.states.len()];
    let reached = |e: f64| opts.target.is_some_and(|(ex, tol)| energy_error(e, ex).map(|x| x <= tol).unwrap_or(false));
    let mut last_added = first;
    let mut history = vec![energy];
    while chosen.len() < opts.max_rank && !reached(energy) {
        let newest = &pool.states[last_added];
        let ovs = par::map_slice(&pool.states, |st| signed_overlap(st, newest).map(f64::abs).unwrap_or(1.0));
        for (m, o) in max_ov.iter_mut().zip(ovs) {
            *m = m.max(o);
        }
        let mut order: Vec<usize> = (0..pool.states.len()).filter(|&k| !used[k]).collect();
        order.sort_by(|&a, &b| max_ov[a].total_cmp(&max_ov[b]).then(a.cmp(&b)));
        let mut added = None;
        for &k in &order {
            used[k] = true;
            let cand = &pool.states[k];
            let row: Result<Vec<(f64, f64)>> = chosen
                .iter()
                .map(|&j| {
                    let ctx = PairContext::new(&pool.states[j], cand)?;
                    Ok((ctx.overlap, ctx.polynomial(&poly).re))
                })
                .collect();
            let row = match row {
                Ok(r) => r,
                Err(Error::SingularOverlap) => {
                    warn!("candidate {k} rejected: orthogonal to a selected state");
                    continue;
                }
                Err(e) => return Err(e),
            };
            let c = chosen.len();
            let mut s2 = s.clone().resize(c + 1, c + 1, 0.0);
            let mut h2 = h.clone().resize(c + 1, c + 1, 0.0);
            for (j, &(ov, hv)) in row.iter().enumerate() {
                s2[(j, c)] = ov;
                s2[(c, j)] = ov;
                h2[(j, c)] = hv;
                h2[(c, j)] = hv;
            }
            s2[(c, c)] = 1.0;
            h2[(c, c)] = diag[k];
            if condition(&s2) > opts.cond_max {
                debug!("candidate {k} rejected: cond(S) above {:.1e}", opts.cond_max);
                continue;
            }
            added = Some((k, s2, h2));
            break;
        }
        let Some((k, s2, h2)) = added else {
            if opts.target.is_some() {
                return Err(Error::PoolExhausted(format!(
                    "no admissible candidate left at rank {} (energy {energy:.10})",
                    chosen.len()
                )));
            }
            break;
        };
        let (e2, a2) = solve_gevp(&s2, &h2)?;
        chosen.push(k);
        last_added = k;
        s = s2;
        h = h2;
        energy = e2;
        alpha = a2;
        history.push(energy);
        let w = opts.window.max(1);
        if opts.target.is_none() && history.len() > w {
            let past = history[history.len() - 1 - w];
            if (past - energy).abs() / energy.abs().max(1e-300) < opts.energy_tol {
                break;
            }
        }
    }
    if opts.target.is_some() && !reached(energy) {
        return Err(Error::PoolExhausted(format!("target not reached at rank {}", chosen.len())));
    }
    Ok(SgsBasis {
        states: chosen.iter().map(|&k| pool.states[k].clone()).collect(),
        s,
        htilde: h,
        alpha,
        energy,
        provenance: chosen,
    })
}

/// Projected Hamiltonian of `model` on fixed states.
pub fn project(states: &[GaussianState], poly: &MajoranaPolynomial) -> Result<(RMat, RMat)> {
    let chi = states.len();
    let pairs: Vec<(usize, usize)> = (0..chi).flat_map(|i| (i..chi).map(move |j| (i, j))).collect();
    let vals = par::map_slice(&pairs, |&(i, j)| -> Result<(f64, f64)> {
        let ctx = PairContext::new(&states[i], &states[j])?;
        Ok((ctx.overlap, ctx.polynomial(poly).re))
    });
    let mut s = RMat::zeros(chi, chi);
    let mut h = RMat::zeros(chi, chi);
    for (&(i, j), v) in pairs.iter().zip(vals) {
        let (ov, hv) = v?;
        s[(i, j)] = ov;
        s[(j, i)] = ov;
        h[(i, j)] = hv;
        h[(j, i)] = hv;
    }
    Ok((s, h))
}

/// Re-solves the subspace problem for `new_model` on the same states.
/// Returns the new basis and the in-subspace variance `⟨H²⟩ − ⟨H⟩²`.
pub fn continue_basis(basis: &SgsBasis, new_model: &ImpurityModel) -> Result<(SgsBasis, f64)> {
    if basis.states.first().map(|s| s.n_orbitals()) != Some(new_model.n_orbitals()) {
        return Err(Error::Dimension("model size differs from the basis".into()));
    }
    let poly = hamiltonian_polynomial(new_model)?;
    let (_, h) = project(&basis.states, &poly)?;
    let (energy, alpha) = solve_gevp(&basis.s, &h)?;
    let h2 = poly.mul(&poly);
    let (_, hh) = project(&basis.states, &h2)?;
    let variance = (alpha.transpose() * &hh * &alpha)[(0, 0)] - energy * energy;
    Ok((SgsBasis { htilde: h, alpha, energy, ..basis.clone() }, variance))
}

/// Serializable form of a basis (orbitals plus provenance).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisFile {
    pub n_orbitals: usize,
    pub provenance: Vec<usize>,
    /// Per state: `[up, down]` orbitals, column-major.
    pub orbitals: Vec<[Vec<f64>; 2]>,
    pub n_up: usize,
    pub n_dn: usize,
    pub alpha: Vec<f64>,
    pub energy: f64,
}

impl BasisFile {
    pub fn from_basis(b: &SgsBasis) -> Self {
        let st0 = &b.states[0];
        Self {
            n_orbitals: st0.n_orbitals(),
            provenance: b.provenance.clone(),
            orbitals: b
                .states
                .iter()
                .map(|s| [s.orbitals[0].as_slice().to_vec(), s.orbitals[1].as_slice().to_vec()])
                .collect(),
            n_up: st0.n_up(),
            n_dn: st0.n_dn(),
            alpha: b.alpha.iter().copied().collect(),
            energy: b.energy,
        }
    }

    /// Rebuilds the basis and re-projects it onto `model`.
    pub fn to_basis(&self, model: &ImpurityModel) -> Result<SgsBasis> {
        let n = self.n_orbitals;
        let states: Result<Vec<GaussianState>> = self
            .orbitals
            .iter()
            .map(|[u, d]| {
                if u.len() != n * self.n_up || d.len() != n * self.n_dn {
                    return Err(Error::Parse("orbital block has the wrong size".into()));
                }
                GaussianState::from_orbitals(
                    RMat::from_column_slice(n, self.n_up, u),
                    RMat::from_column_slice(n, self.n_dn, d),
                )
            })
            .collect();
        let states = states?;
        let poly = hamiltonian_polynomial(model)?;
        let (s, h) = project(&states, &poly)?;
        let (energy, alpha) = solve_gevp(&s, &h)?;
        Ok(SgsBasis { states, s, htilde: h, alpha, energy, provenance: self.provenance.clone() })
    }
}

/// One instance of the rank-versus-size study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSample {
    pub n_bath: usize,
    pub instance: usize,
    pub rank: usize,
    pub dim: usize,
    pub fraction: f64,
    pub energy_error: f64,
    pub reached: bool,
}

/// Random particle-hole symmetric baths at interaction `u`; for each, the
/// smallest greedy subspace reaching relative energy error `tol` against ED.
pub fn rank_study(n_baths: &[usize], instances: usize, u: f64, pool_size: usize, tol: f64, seed: u64) -> Result<Vec<RankSample>> {
    let mut out = Vec::new();
    for &nb in n_baths {
        for instance in 0..instances {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((nb as u64) << 32 | instance as u64));
            let (eps, v) = crate::model::symmetric_bath(nb, 1.0, &mut rng);
            let model = crate::model::half_filling_shift(&ImpurityModel::single(0.0, u, &eps, &v)?.with_u(u, u));
            let (nu, nd) = half_filling_content(&model);
            let sector = FockSector::new(model.n_orbitals(), nu, nd)?;
            let exact = crate::fock::ground_state(&model, &sector)?.energy;
            let pool = generate_pool(&model, pool_size, rng.random())?;
            let opts = SelectOptions { max_rank: sector.dim(), target: Some((exact, tol)), ..Default::default() };
            let (basis, reached) = match select_subspace(&pool, &model, &opts) {
                Ok(b) => (b, true),
                Err(Error::PoolExhausted(_)) => {
                    let b = select_subspace(&pool, &model, &SelectOptions { target: None, energy_tol: 0.0, ..opts })?;
                    (b, false)
                }
                Err(e) => return Err(e),
            };
            let energy_error = energy_error(basis.energy, exact)?;
            out.push(RankSample {
                n_bath: nb,
                instance,
                rank: basis.rank(),
                dim: sector.dim(),
                fraction: basis.rank() as f64 / sector.dim() as f64,
                energy_error,
                reached: reached && energy_error <= tol,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ground_state, FockSector};
    use crate::model::half_filling_shift;

    fn demo_model() -> ImpurityModel {
        half_filling_shift(&ImpurityModel::single(0.0, 5.337, &[-1.2, 0.0, 1.2], &[0.6, 0.01, 0.6]).unwrap())
    }

    #[test]
    fn free_model_needs_one_state() {
        let m = ImpurityModel::single(0.0, 0.0, &[-0.5, 0.5], &[0.3, 0.4]).unwrap();
        let pool = generate_pool(&m, 20, 7).unwrap();
        let b = select_subspace(&pool, &m, &SelectOptions::default()).unwrap();
        let gs = ground_state(&m, &FockSector::half_filling(3).unwrap()).unwrap();
        assert!((b.energy - gs.energy).abs() < 1e-10);
        assert_eq!(b.provenance[0], 0);
    }

    #[test]
    fn pool_is_deterministic() {
        let m = demo_model();
        let a = generate_pool(&m, 5, 11).unwrap();
        let b = generate_pool(&m, 5, 11).unwrap();
        assert_eq!(a.provenance, b.provenance);
        let c = generate_pool(&m, 5, 12).unwrap();
        assert_ne!(a.provenance[1], c.provenance[1]);
    }

    #[test]
    fn gevp_trivial_cases() {
        let (e, a) = solve_gevp(&RMat::from_element(1, 1, 2.0), &RMat::from_element(1, 1, -3.0)).unwrap();
        assert!((e + 1.5).abs() < 1e-14 && (a[0] * a[0] * 2.0 - 1.0).abs() < 1e-14);
        let h = RMat::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -1.0]);
        let (e, _) = solve_gevp(&RMat::identity(2, 2), &h).unwrap();
        assert!((e + 1.25f64.sqrt()).abs() < 1e-12);
        assert!(energy_error(-1.999, -2.0).unwrap() - 5e-4 < 1e-15);
        assert!(energy_error(1.0, 0.0).is_err());
    }

    #[test]
    fn selection_is_variational_and_monotone() {
        let m = demo_model();
        let exact = ground_state(&m, &FockSector::half_filling(4).unwrap()).unwrap().energy;
        let pool = generate_pool(&m, 200, 3).unwrap();
        let mut last = f64::INFINITY;
        for rank in 1..=5 {
            let opts = SelectOptions { max_rank: rank, energy_tol: 0.0, ..Default::default() };
            let b = select_subspace(&pool, &m, &opts).unwrap();
            assert!(b.energy >= exact - 1e-9);
            assert!(b.energy <= last + 1e-12);
            last = b.energy;
            let norm = (b.alpha.transpose() * &b.s * &b.alpha)[(0, 0)];
            assert!((norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn continuation_and_serialization() {
        let m = demo_model();
        let pool = generate_pool(&m, 100, 5).unwrap();
        let opts = SelectOptions { max_rank: 4, energy_tol: 0.0, ..Default::default() };
        let b = select_subspace(&pool, &m, &opts).unwrap();
        let (same, var) = continue_basis(&b, &m).unwrap();
        assert!((&same.alpha - &b.alpha).amax() < 1e-10);
        assert!(var >= -1e-9);
        let mut v2 = m.v.clone();
        v2[(0, 0)] += 1e-3;
        let moved = m.with_bath(m.eps.clone(), v2).unwrap();
        let (c, _) = continue_basis(&b, &moved).unwrap();
        assert!((c.energy - b.energy).abs() < 1e-2);
        let json = serde_json::to_string(&BasisFile::from_basis(&b)).unwrap();
        let back: BasisFile = serde_json::from_str(&json).unwrap();
        let rb = back.to_basis(&m).unwrap();
        assert!((rb.energy - b.energy).abs() < 1e-10);
    }

    #[test]
    fn reordering_invariance() {
        let m = demo_model();
        let pool = generate_pool(&m, 60, 8).unwrap();
        let b = select_subspace(&pool, &m, &SelectOptions { max_rank: 3, energy_tol: 0.0, ..Default::default() }).unwrap();
        let mut rev = b.states.clone();
        rev.reverse();
        let (s, h) = project(&rev, &hamiltonian_polynomial(&m).unwrap()).unwrap();
        let (e, _) = solve_gevp(&s, &h).unwrap();
        assert!((e - b.energy).abs() < 1e-8);
    }
}
