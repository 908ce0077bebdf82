//! Fermionic Gaussian states: covariance matrices, overlaps and Majorana
//! monomial matrix elements.
//!
//! Convention: `γ_{2m} = c_m + c†_m`, `γ_{2m+1} = i(c†_m − c_m)` and
//! `M_pq = −(i/2)⟨[γ_p, γ_q]⟩`, so `⟨γ_p γ_q⟩ = iM_pq + δ_pq` and the vacuum
//! block is `M_{2m,2m+1} = +1`.

mod majorana;
mod pfaffian;

pub use majorana::{hamiltonian_polynomial, product_sign, MajoranaPolynomial};
pub use pfaffian::{pfaffian, pfaffian_unchecked};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fock::FockSector;
use crate::linalg::{sym_eigen, to_complex, CMat, RMat, C64, I};
use crate::model::ImpurityModel;

/// Pairs with `cond(M_a + M_b)` above this are treated as orthogonal.
pub const SINGULAR_COND: f64 = 1e12;

/// Pure, number-conserving Gaussian state on `2N` modes (both spins).
///
/// The Slater orbitals are kept alongside the covariance: the Pfaffian only
/// fixes `|⟨a|b⟩|`, the orbitals fix its sign.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    pub cov: RMat,
    /// Per-spin occupied orbitals (`N × n_σ`, orthonormal columns).
    pub orbitals: [RMat; 2],
}

/// Half of `M`'s per-spin structure built from `C = ΦΦᵀ`.
fn spin_covariance(phi: &RMat) -> RMat {
    let n = phi.nrows();
    let c = phi * phi.transpose();
    let mut m = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = if i == j { 1.0 } else { 0.0 } - 2.0 * c[(i, j)];
            m[(2 * i, 2 * j + 1)] = v;
            m[(2 * j + 1, 2 * i)] = -v;
        }
    }
    m
}

/// Flips the first orbital so the amplitude on the lowest-mode configuration is positive.
fn gauge_fix(phi: &mut RMat) {
    let k = phi.ncols();
    if k == 0 {
        return;
    }
    if phi.view((0, 0), (k, k)).determinant() < 0.0 {
        let c = -phi.column(0);
        phi.set_column(0, &c);
    }
}

impl GaussianState {
    pub fn from_orbitals(up: RMat, dn: RMat) -> Result<Self> {
        if up.nrows() != dn.nrows() {
            return Err(Error::Dimension("spin registers differ in size".into()));
        }
        let mut orbitals = [up, dn];
        for phi in &mut orbitals {
            let gram = phi.transpose() * &*phi;
            if (gram - RMat::identity(phi.ncols(), phi.ncols())).amax() > 1e-9 {
                return Err(Error::Invalid("Slater orbitals must be orthonormal".into()));
            }
            gauge_fix(phi);
        }
        let n = orbitals[0].nrows();
        let mut cov = RMat::zeros(4 * n, 4 * n);
        for (s, phi) in orbitals.iter().enumerate() {
            cov.view_mut((2 * n * s, 2 * n * s), (2 * n, 2 * n)).copy_from(&spin_covariance(phi));
        }
        Ok(Self { cov, orbitals })
    }

    /// Ground state of `hopping` (shared by both spins) with fixed particle numbers.
    pub fn from_hopping(hopping: &RMat, n_up: usize, n_dn: usize) -> Result<Self> {
        let (_, vecs) = sym_eigen(hopping);
        let n = hopping.nrows();
        if n_up > n || n_dn > n {
            return Err(Error::Invalid(format!("cannot place ({n_up},{n_dn}) particles in {n} orbitals")));
        }
        Self::from_orbitals(vecs.columns(0, n_up).into_owned(), vecs.columns(0, n_dn).into_owned())
    }

    /// Per-spin modes per register.
    pub fn n_orbitals(&self) -> usize {
        self.orbitals[0].nrows()
    }

    pub fn n_up(&self) -> usize {
        self.orbitals[0].ncols()
    }

    pub fn n_dn(&self) -> usize {
        self.orbitals[1].ncols()
    }

    /// One-particle density matrix `⟨c†_i c_j⟩` of a spin register.
    pub fn density(&self, spin: usize) -> RMat {
        let phi = &self.orbitals[spin];
        phi * phi.transpose()
    }

    /// Sector amplitudes: products of per-spin minors.
    pub fn to_fock(&self, sector: &FockSector) -> Result<DVector<f64>> {
        if sector.n_orbitals != self.n_orbitals() || sector.n_up != self.n_up() || sector.n_dn != self.n_dn() {
            return Err(Error::Dimension("state and sector particle content differ".into()));
        }
        let n = self.n_orbitals();
        let minor = |phi: &RMat, bits: u64| {
            let rows: Vec<usize> = (0..n).filter(|&m| bits >> m & 1 == 1).collect();
            if rows.is_empty() {
                return 1.0;
            }
            RMat::from_fn(rows.len(), phi.ncols(), |i, j| phi[(rows[i], j)]).determinant()
        };
        let up: Vec<f64> = sector.up.iter().map(|&b| minor(&self.orbitals[0], b)).collect();
        let dn: Vec<f64> = sector.dn.iter().map(|&b| minor(&self.orbitals[1], b)).collect();
        Ok(DVector::from_fn(sector.dim(), |k, _| up[k / dn.len()] * dn[k % dn.len()]))
    }

    /// Checks skew symmetry, purity and spin-block structure.
    pub fn check_invariants(&self, tol: f64) -> bool {
        let m = &self.cov;
        let d = m.nrows();
        let h = d / 2;
        let skew = (m + m.transpose()).amax() <= tol;
        let pure = (m * m + RMat::identity(d, d)).amax() <= tol;
        let blocks = m.view((0, h), (h, h)).amax() <= tol && m.view((h, 0), (h, h)).amax() <= tol;
        skew && pure && blocks
    }
}

/// Ground state of a single-spin hopping matrix: all negative modes filled,
/// and the lower half of any zero-mode subspace.
pub fn ground_state_covariance(hopping: &RMat) -> Result<GaussianState> {
    let (vals, _) = sym_eigen(hopping);
    let neg = vals.iter().filter(|&&e| e < -1e-12).count();
    let zero = vals.iter().filter(|&&e| e.abs() <= 1e-12).count();
    let filled = neg + zero / 2;
    GaussianState::from_hopping(hopping, filled, filled)
}

/// Precomputed data for matrix elements between a fixed pair of states.
pub struct PairContext {
    /// Signed overlap `⟨a|b⟩`.
    pub overlap: f64,
    delta_conj_i: CMat,
}

/// `|⟨a|b⟩| = sqrt|Pf((M_a + M_b)/2)|`.
pub fn overlap(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    if a.cov.shape() != b.cov.shape() {
        return Err(Error::Dimension("states differ in mode count".into()));
    }
    if a.n_up() != b.n_up() || a.n_dn() != b.n_dn() {
        return Ok(0.0);
    }
    let s = (&a.cov + &b.cov) * 0.5;
    Ok(pfaffian_unchecked(s).abs().sqrt())
}

/// Overlap with the sign fixed by the Slater orbitals' gauge.
pub fn signed_overlap(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    let mag = overlap(a, b)?;
    if mag == 0.0 {
        return Ok(0.0);
    }
    let sign: f64 = (0..2)
        .map(|s| (a.orbitals[s].transpose() * &b.orbitals[s]).determinant().signum())
        .product();
    Ok(sign * mag)
}

impl PairContext {
    pub fn new(a: &GaussianState, b: &GaussianState) -> Result<Self> {
        let ov = signed_overlap(a, b)?;
        let sum = &a.cov + &b.cov;
        let d = sum.nrows();
        let sv = sum.clone().svd(false, false).singular_values;
        let smax = sv.max();
        let smin = sv.min();
        if ov == 0.0 || smin <= smax / SINGULAR_COND {
            return Err(Error::SingularOverlap);
        }
        let inv = sum.try_inverse().ok_or(Error::SingularOverlap)?;
        let num = to_complex(&(RMat::identity(d, d) * -2.0)) + to_complex(&(&a.cov - &b.cov)) * I;
        let delta = num * to_complex(&inv);
        let delta_conj_i = delta.map(|z| I * z.conj());
        Ok(Self { overlap: ov, delta_conj_i })
    }

    /// `⟨a|γ[x]|b⟩ = ⟨a|b⟩ Pf(iΔ[x]*)`, rows/columns of `x` in ascending order.
    pub fn monomial(&self, x: u64) -> C64 {
        if x == 0 {
            return C64::new(self.overlap, 0.0);
        }
        let k = x.count_ones() as usize;
        if k % 2 == 1 {
            return C64::new(0.0, 0.0);
        }
        let idx: Vec<usize> = (0..64).filter(|&i| x >> i & 1 == 1).collect();
        let sub = DMatrix::from_fn(k, k, |i, j| self.delta_conj_i[(idx[i], idx[j])]);
        pfaffian_unchecked(sub) * self.overlap
    }

    pub fn polynomial(&self, p: &MajoranaPolynomial) -> C64 {
        p.terms.iter().map(|(&x, &c)| c * self.monomial(x)).sum()
    }
}

pub fn monomial_element(a: &GaussianState, b: &GaussianState, x: u64) -> Result<C64> {
    Ok(PairContext::new(a, b)?.monomial(x))
}

/// `⟨a|H|b⟩` for the impurity Hamiltonian.
pub fn hamiltonian_element(a: &GaussianState, b: &GaussianState, model: &ImpurityModel) -> Result<C64> {
    let poly = hamiltonian_polynomial(model)?;
    Ok(PairContext::new(a, b)?.polynomial(&poly))
}
