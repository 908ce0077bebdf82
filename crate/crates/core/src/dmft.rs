//! Bethe-lattice DMFT for a single impurity orbital at half filling.
//!
//! Each iteration solves the impurity at zero temperature, evaluates its
//! Matsubara Green's function from the solver's poles, obtains Σ from Dyson's
//! equation, integrates the lattice Green's function over the semicircular
//! density of states and refits the bath.
//!
//! The bath is kept particle-hole symmetric: pairs at `±ε_k` with a shared
//! `V_k`, plus one zero-energy level when `n_bath` is odd.

use std::f64::consts::PI;

use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{ground_state, lehmann, lehmann_from_state, matsubara_grid, FockSector, Lehmann, Spin};
use crate::linalg::C64;
use crate::model::{BetheLattice, ImpurityModel};
use crate::par;
use crate::signal::{matsubara_from_poles, PoleModel};
use crate::subspace::{continue_basis, generate_pool, half_filling_content, select_subspace, SelectOptions, SgsBasis};

pub const DEFAULT_BETA: f64 = 64.0;
pub const DEFAULT_N_MAX: usize = 512;
pub const DEFAULT_MIXING: f64 = 0.5;
pub const QUAD_TOL: f64 = 1e-10;


#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatsubaraGrid {
    pub beta: f64,
    pub omegas: Vec<f64>,
}

impl MatsubaraGrid {
    pub fn new(beta: f64, n_max: usize) -> Result<Self> {
        if !(beta > 0.0) || n_max == 0 {
            return invalid("Matsubara grid needs beta > 0 and n_max ≥ 1");
        }
        Ok(Self { beta, omegas: matsubara_grid(beta, n_max) })
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bath {
    pub eps: Vec<f64>,
    pub v: Vec<f64>,
}

impl Bath {
    pub fn n_bath(&self) -> usize {
        self.eps.len()
    }

    /// Symmetric initial bath: pairs spread over the band, total weight `h²`,
    /// an odd leftover at zero energy with `V = 0.01`.
    pub fn initial(n_bath: usize, h: f64) -> Self {
        let pairs = n_bath / 2;
        let mut p = Vec::with_capacity(2 * pairs + 1);
        for k in 0..pairs {
            p.push(2.0 * h * (k + 1) as f64 / (pairs + 1) as f64);
            p.push(h / (2.0 * pairs as f64).sqrt());
        }
        if n_bath % 2 == 1 {
            p.push(0.01);
        }
        Self::from_params(n_bath, &p)
    }

    /// Parameters `[ε_1, V_1, ε_2, V_2, …, (V_0)]`.
    pub fn params(&self) -> Vec<f64> {
        let n = self.n_bath();
        let mut p = Vec::with_capacity(n);
        for k in 0..n / 2 {
            p.push(self.eps[2 * k + 1].abs());
            p.push(self.v[2 * k].abs());
        }
        if n % 2 == 1 {
            p.push(self.v[n - 1].abs());
        }
        p
    }

    pub fn from_params(n_bath: usize, p: &[f64]) -> Self {
        let mut eps = Vec::with_capacity(n_bath);
        let mut v = Vec::with_capacity(n_bath);
        for k in 0..n_bath / 2 {
            let (e, c) = (p[2 * k].abs(), p[2 * k + 1].abs());
            eps.extend([-e, e]);
            v.extend([c, c]);
        }
        if n_bath % 2 == 1 {
            eps.push(0.0);
            v.push(p[p.len() - 1].abs());
        }
        Self { eps, v }
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.n_bath();
        (0..n / 2).all(|k| self.eps[2 * k] == -self.eps[2 * k + 1] && self.v[2 * k] == self.v[2 * k + 1])
            && (n % 2 == 0 || self.eps[n - 1] == 0.0)
    }

    /// Largest parameter change, insensitive to the sign of `V` and pair order.
    pub fn distance(&self, other: &Bath) -> f64 {
        let sorted = |b: &Bath| {
            let p = b.params();
            let mut pairs: Vec<(f64, f64)> = p.chunks_exact(2).map(|c| (c[0], c[1])).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut flat: Vec<f64> = pairs.into_iter().flat_map(|(a, b)| [a, b]).collect();
            if p.len() % 2 == 1 {
                flat.push(p[p.len() - 1]);
            }
            flat
        };
        sorted(self).iter().zip(sorted(other)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    fn mix(&self, new: &Bath, mixing: f64) -> Bath {
        let (a, b) = (self.params(), new.params());
        let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (1.0 - mixing) * x + mixing * y).collect();
        Bath::from_params(self.n_bath(), &p)
    }
}

/// `Δ(z) = Σ_b V_b² / (z − ε_b)`.
pub fn hybridization_at(bath: &Bath, z: C64) -> C64 {
    bath.eps.iter().zip(&bath.v).map(|(&e, &v)| v * v / (z - e)).sum()
}

pub fn hybridization(bath: &Bath, grid: &MatsubaraGrid) -> Vec<C64> {
    grid.omegas.iter().map(|&w| hybridization_at(bath, C64::new(0.0, w))).collect()
}

/// `Σ = iω_n − ε_i + μ − Δ − 1/𝒢`.
pub fn self_energy(g_imp: &[C64], bath: &Bath, grid: &MatsubaraGrid, mu: f64, eps_imp: f64) -> Result<Vec<C64>> {
    if g_imp.len() != grid.len() {
        return Err(Error::Dimension(format!("{} values on a grid of {}", g_imp.len(), grid.len())));
    }
    g_imp
        .iter()
        .zip(&grid.omegas)
        .enumerate()
        .map(|(n, (g, &w))| {
            if g.norm() < 1e-300 {
                return Err(Error::Numerical(format!("impurity Green's function vanishes at n = {n}")));
            }
            let z = C64::new(0.0, w);
            Ok(z - eps_imp + mu - hybridization_at(bath, z) - 1.0 / g)
        })
        .collect()
}

/// Adaptive Simpson on `[a, b]` for a complex integrand.
fn adaptive_simpson(f: &dyn Fn(f64) -> C64, a: f64, b: f64, tol: f64) -> Option<C64> {
    fn rec(f: &dyn Fn(f64) -> C64, a: f64, b: f64, fa: C64, fm: C64, fb: C64, whole: C64, tol: f64, depth: u32) -> Option<C64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.norm() <= 15.0 * tol {
            return Some(left + right + delta / 15.0);
        }
        if depth == 0 {
            return None;
        }
        Some(rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)? + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `∫ρ(x)/(z − x) dx` for the semicircle of half-width `2h`, via `x = 2h sin θ`.
pub fn semicircle_transform(z: C64, h: f64) -> Option<C64> {
    let f = |th: f64| 2.0 / PI * th.cos().powi(2) / (z - 2.0 * h * th.sin());
    // Split at the point nearest the pole so the refinement starts there.
    let th0 = (z.re / (2.0 * h)).clamp(-1.0, 1.0).asin();
    let (a, b) = (-PI / 2.0, PI / 2.0);
    let mut total = C64::new(0.0, 0.0);
    for (lo, hi) in [(a, th0), (th0, b)] {
        if hi - lo > 1e-15 {
            total += adaptive_simpson(&f, lo, hi, QUAD_TOL / 2.0)?;
        }
    }
    Some(total)
}

/// Closed form of [`semicircle_transform`] (branch with `Im G < 0` above the axis).
pub fn semicircle_closed_form(z: C64, h: f64) -> C64 {
    let s = (z * z - 4.0 * h * h).sqrt();
    let g = (z - s) / (2.0 * h * h);
    if g.im * z.im > 0.0 {
        (z + s) / (2.0 * h * h)
    } else {
        g
    }
}

/// `G_latt(iω_n) = ∫ρ(x)/(iω_n − x + μ − Σ) dx`.
pub fn lattice_gf(sigma: &[C64], grid: &MatsubaraGrid, mu: f64, h: f64) -> Result<Vec<C64>> {
    if !(h > 0.0) {
        return invalid("hopping must be positive");
    }
    par::map_indexed(sigma.len(), |n| {
        let z = C64::new(mu, grid.omegas[n]) - sigma[n];
        semicircle_transform(z, h).ok_or_else(|| Error::Numerical(format!("lattice quadrature did not converge at n = {n}")))
    })
    .into_iter()
    .collect()
}

/// `𝒜(ω) = −Im ∫ρ(x)/(ω + iη − x + μ − Σ(ω)) dx / π`.
pub fn lattice_dos(sigma: &[C64], omega: &[f64], mu: f64, h: f64, eta: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) || !(eta > 0.0) {
        return invalid("lattice DOS needs h > 0 and eta > 0");
    }
    par::map_indexed(omega.len(), |k| {
        let z = C64::new(omega[k] + mu, eta) - sigma[k];
        semicircle_transform(z, h)
            .map(|g| -g.im / PI)
            .ok_or_else(|| Error::Numerical(format!("DOS quadrature did not converge at index {k}")))
    })
    .into_iter()
    .collect()
}

/// Real-axis self-energy from an impurity Lehmann representation.
pub fn real_axis_self_energy(g: &Lehmann, bath: &Bath, omega: &[f64], eta: f64, mu: f64, eps_imp: f64) -> Vec<C64> {
    omega
        .iter()
        .map(|&w| {
            let z = C64::new(w, eta);
            z - eps_imp + mu - hybridization_at(bath, z) - 1.0 / g.resolvent(z)
        })
        .collect()
}

/// Result of a bath fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathFit {
    pub bath: Bath,
    /// Weighted mean squared misfit.
    pub cost: f64,
}

/// `Δ_target = iω_n − ε_i + μ − Σ − 1/G_latt` (the hybridization for which the
/// impurity Dyson equation reproduces `G_latt`).
pub fn fit_target(g_latt: &[C64], sigma: &[C64], grid: &MatsubaraGrid, mu: f64, eps_imp: f64) -> Vec<C64> {
    g_latt.iter().zip(sigma).zip(&grid.omegas).map(|((g, s), &w)| C64::new(0.0, w) - eps_imp + mu - s - 1.0 / g).collect()
}

/// Weighted residuals (real and imaginary parts) and their Jacobian.
fn residuals(p: &[f64], n_bath: usize, target: &[C64], omegas: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let n = omegas.len();
    let m = p.len();
    let mut r = DVector::zeros(2 * n);
    let mut jac = DMatrix::zeros(2 * n, m);
    for (k, &w) in omegas.iter().enumerate() {
        let z = C64::new(0.0, w);
        let wt = 1.0 / w.sqrt();
        let mut d = C64::new(0.0, 0.0);
        for pair in 0..n_bath / 2 {
            let (e, v) = (p[2 * pair], p[2 * pair + 1]);
            let (a, b) = (1.0 / (z - e), 1.0 / (z + e));
            d += v * v * (a + b);
            let de = v * v * (a * a - b * b);
            let dv = 2.0 * v * (a + b);
            jac[(k, 2 * pair)] = wt * de.re;
            jac[(n + k, 2 * pair)] = wt * de.im;
            jac[(k, 2 * pair + 1)] = wt * dv.re;
            jac[(n + k, 2 * pair + 1)] = wt * dv.im;
        }
        if n_bath % 2 == 1 {
            let v = p[m - 1];
            d += v * v / z;
            let dv = 2.0 * v / z;
            jac[(k, m - 1)] = wt * dv.re;
            jac[(n + k, m - 1)] = wt * dv.im;
        }
        let diff = (d - target[k]) * wt;
        r[k] = diff.re;
        r[n + k] = diff.im;
    }
    (r, jac)
}

fn levenberg_marquardt(p0: &[f64], n_bath: usize, target: &[C64], omegas: &[f64]) -> (Vec<f64>, f64) {
    let mut p = DVector::from_column_slice(p0);
    let (mut r, mut jac) = residuals(p.as_slice(), n_bath, target, omegas);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..400 {
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut a = jtj.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += lambda * (jtj[(i, i)] + 1e-12);
        }
        let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
            lambda *= 10.0;
            continue;
        };
        let trial = &p + &step;
        let (rt, jt) = residuals(trial.as_slice(), n_bath, target, omegas);
        let ct = rt.norm_squared();
        if ct < cost {
            let gain = cost - ct;
            p = trial;
            r = rt;
            jac = jt;
            cost = ct;
            lambda = (lambda / 3.0).max(1e-15);
            if gain <= 1e-16 * cost.max(1e-300) || step.amax() < 1e-14 {
                break;
            }
        } else {
            lambda *= 4.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    (p.iter().copied().collect(), cost)
}

/// Multi-start Levenberg–Marquardt fit of a symmetric bath to `target`,
/// weighted by `1/ω_n`.
pub fn fit_bath(target: &[C64], grid: &MatsubaraGrid, n_bath: usize, init: &Bath) -> Result<BathFit> {
    if n_bath == 0 || init.n_bath() != n_bath {
        return invalid("fit_bath needs n_bath ≥ 1 matching the initial bath");
    }
    if target.len() != grid.len() {
        return Err(Error::Dimension("target and grid lengths differ".into()));
    }
    let p0 = init.params();
    let scales = [(1.0, 1.0), (0.5, 1.0), (2.0, 1.0), (1.0, 0.5), (1.0, 1.5), (0.25, 0.75)];
    let fits = par::map_slice(&scales, |&(se, sv)| {
        let start: Vec<f64> = p0
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let is_v = n_bath % 2 == 1 && i == p0.len() - 1 || i % 2 == 1;
                if is_v {
                    (x * sv).max(1e-3)
                } else {
                    (x * se).max(1e-3)
                }
            })
            .collect();
        levenberg_marquardt(&start, n_bath, target, &grid.omegas)
    });
    let (p, cost) = fits.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("at least one start");
    let cost = cost / grid.len() as f64;
    let scale = target.iter().map(|z| z.norm_sqr()).sum::<f64>() / grid.len() as f64;
    if cost > 1e-2 * scale.max(1e-300) {
        warn!("bath fit stagnated with relative residual {:.3e}", cost / scale);
    }
    Ok(BathFit { bath: Bath::from_params(n_bath, &p), cost })
}

/// `Z⁻¹ = 1 − Im Σ(iω)/ω` linearly extrapolated to `ω → 0` from the two lowest frequencies.
pub fn quasiparticle_weight(sigma: &[C64], grid: &MatsubaraGrid) -> Result<f64> {
    if sigma.len() < 2 || grid.len() < 2 {
        return invalid("quasiparticle weight needs two frequencies");
    }
    let (w0, w1) = (grid.omegas[0], grid.omegas[1]);
    let (y0, y1) = (1.0 - sigma[0].im / w0, 1.0 - sigma[1].im / w1);
    let y = y0 - w0 * (y1 - y0) / (w1 - w0);
    Ok(1.0 / y)
}

/// Impurity model for the current bath: `ν = ε_i − μ`.
pub fn impurity_model(lattice: &BetheLattice, bath: &Bath, eps_imp: f64) -> Result<ImpurityModel> {
    ImpurityModel::single(eps_imp - half_filling_mu(lattice), lattice.u, &bath.eps, &bath.v)
}

/// Half-filling chemical potential `U/2`.
pub fn half_filling_mu(lattice: &BetheLattice) -> f64 {
    lattice.u / 2.0
}

/// Impurity solver options.
#[derive(Clone, Debug)]
pub enum SolverKind {
    Ed,
    Sgs { pool_size: usize, seed: u64, select: SelectOptions },
}

/// Impurity solution: Green's function poles and ground energy.
#[derive(Clone, Debug)]
pub struct ImpuritySolution {
    pub lehmann: Lehmann,
    pub energy: f64,
    /// Subspace rank for the SGS solver.
    pub rank: Option<usize>,
}

/// Stateful solver: the SGS variant builds its basis on first use and then
/// only re-solves the subspace problem.
pub struct Solver {
    kind: SolverKind,
    basis: Option<SgsBasis>,
}

impl SolverKind {
    /// SGS solver for DMFT: the basis is selected once, so it is grown to the
    /// rank cap (or pool/conditioning limit) instead of stopping on the
    /// energy-change rule, leaving room for the bath to move.
    pub fn sgs(pool_size: usize, seed: u64, max_rank: usize) -> Self {
        SolverKind::Sgs { pool_size, seed, select: SelectOptions { max_rank, energy_tol: 0.0, ..Default::default() } }
    }
}

impl Solver {
    pub fn new(kind: SolverKind) -> Self {
        Self { kind, basis: None }
    }

    pub fn basis(&self) -> Option<&SgsBasis> {
        self.basis.as_ref()
    }

    pub fn solve(&mut self, model: &ImpurityModel) -> Result<ImpuritySolution> {
        match &self.kind {
            SolverKind::Ed => {
                let gs = ground_state(model, &FockSector::half_filling(model.n_orbitals())?)?;
                Ok(ImpuritySolution { lehmann: lehmann(model, &gs, 0, Spin::Averaged)?, energy: gs.energy, rank: None })
            }
            SolverKind::Sgs { pool_size, seed, select } => {
                let basis = match &self.basis {
                    None => {
                        let pool = generate_pool(model, *pool_size, *seed)?;
                        let b = select_subspace(&pool, model, select)?;
                        info!("SGS basis built with rank {}", b.rank());
                        b
                    }
                    Some(b) => continue_basis(b, model)?.0,
                };
                let (nu, nd) = half_filling_content(model);
                let sector = FockSector::new(model.n_orbitals(), nu, nd)?;
                let psi = basis.to_fock(&sector)?;
                let l = lehmann_from_state(model, &sector, &psi, basis.energy, 0, Spin::Averaged)?;
                let out = ImpuritySolution { lehmann: l, energy: basis.energy, rank: Some(basis.rank()) };
                self.basis = Some(basis);
                Ok(out)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DmftOptions {
    pub n_bath: usize,
    pub n_max: usize,
    pub mixing: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub eps_imp: f64,
    pub init: Option<Bath>,
}

impl Default for DmftOptions {
    fn default() -> Self {
        Self { n_bath: 3, n_max: DEFAULT_N_MAX, mixing: DEFAULT_MIXING, tol: 1e-5, max_iter: 300, eps_imp: 0.0, init: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub bath: Bath,
    pub z: f64,
    pub residual: f64,
    pub fit_cost: f64,
    pub energy: f64,
    pub rank: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct DmftState {
    /// Bath the final quantities were computed with.
    pub bath: Bath,
    pub sigma: Vec<C64>,
    pub g_imp: Vec<C64>,
    pub g_latt: Vec<C64>,
    pub impurity: Lehmann,
    pub iteration: usize,
    pub residual: f64,
    pub z: f64,
}

#[derive(Clone, Debug)]
pub struct DmftRun {
    pub state: DmftState,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
    pub grid: MatsubaraGrid,
}

/// Quantities of one iteration at a fixed bath.
pub struct Step {
    pub solution: ImpuritySolution,
    pub g_imp: Vec<C64>,
    pub sigma: Vec<C64>,
    pub g_latt: Vec<C64>,
    pub fit: BathFit,
}

pub fn dmft_step(lattice: &BetheLattice, bath: &Bath, solver: &mut Solver, grid: &MatsubaraGrid, eps_imp: f64) -> Result<Step> {
    let mu = half_filling_mu(lattice);
    let model = impurity_model(lattice, bath, eps_imp)?;
    let solution = solver.solve(&model)?;
    let g_imp = matsubara_from_poles(&PoleModel::from_lehmann(&solution.lehmann), grid.beta, grid.len())?;
    let sigma = self_energy(&g_imp, bath, grid, mu, eps_imp)?;
    let g_latt = lattice_gf(&sigma, grid, mu, lattice.hopping)?;
    let target = fit_target(&g_latt, &sigma, grid, mu, eps_imp);
    let fit = fit_bath(&target, grid, bath.n_bath(), bath)?;
    Ok(Step { solution, g_imp, sigma, g_latt, fit })
}

/// Self-consistency loop. The first update takes the fitted bath unmixed
/// (the initial guess carries no information); later updates are linearly
/// mixed. Converged when the fitted bath differs from the input bath by less
/// than `tol`.
pub fn run_loop(lattice: &BetheLattice, solver: &mut Solver, opts: &DmftOptions) -> Result<DmftRun> {
    if !(opts.tol > 0.0) || !(0.0 < opts.mixing && opts.mixing <= 1.0) || opts.max_iter == 0 {
        return invalid("DMFT needs tol > 0, mixing in (0, 1] and max_iter ≥ 1");
    }
    let grid = MatsubaraGrid::new(lattice.beta, opts.n_max)?;
    let mut bath = opts.init.clone().unwrap_or_else(|| Bath::initial(opts.n_bath, lattice.hopping));
    if bath.n_bath() != opts.n_bath {
        return invalid("initial bath size differs from n_bath");
    }
    let mut history = Vec::new();
    for iteration in 1..=opts.max_iter {
        let step = dmft_step(lattice, &bath, solver, &grid, opts.eps_imp)?;
        let residual = step.fit.bath.distance(&bath);
        let z = quasiparticle_weight(&step.sigma, &grid)?;
        history.push(IterationRecord {
            iteration,
            bath: bath.clone(),
            z,
            residual,
            fit_cost: step.fit.cost,
            energy: step.solution.energy,
            rank: step.solution.rank,
        });
        info!("DMFT iteration {iteration}: Z = {z:.6}, residual = {residual:.3e}");
        let state = DmftState {
            bath: bath.clone(),
            sigma: step.sigma,
            g_imp: step.g_imp,
            g_latt: step.g_latt,
            impurity: step.solution.lehmann,
            iteration,
            residual,
            z,
        };
        if residual < opts.tol || iteration == opts.max_iter {
            let converged = residual < opts.tol;
            if !converged {
                warn!("DMFT not converged after {iteration} iterations (residual {residual:.3e})");
            }
            return Ok(DmftRun { state, history, converged, grid });
        }
        bath = if iteration == 1 { step.fit.bath } else { bath.mix(&step.fit.bath, opts.mixing) };
    }
    unreachable!("loop returns on the last iteration")
}

/// `max_n |Δ(iω_n) − h² G_latt(iω_n)|`: the Bethe-lattice identity that holds
/// at self-consistency up to the bath discretization.
pub fn bethe_residual(run: &DmftRun, h: f64) -> f64 {
    hybridization(&run.state.bath, &run.grid)
        .iter()
        .zip(&run.state.g_latt)
        .map(|(d, g)| (d - h * h * g).norm())
        .fold(0.0, f64::max)
}

/// Real-axis lattice DOS of a converged run.
pub fn run_dos(run: &DmftRun, lattice: &BetheLattice, omega: &[f64], eta: f64, eps_imp: f64) -> Result<Vec<f64>> {
    let mu = half_filling_mu(lattice);
    let sigma = real_axis_self_energy(&run.state.impurity, &run.state.bath, omega, eta, mu, eps_imp);
    lattice_dos(&sigma, omega, mu, lattice.hopping, eta)
}
