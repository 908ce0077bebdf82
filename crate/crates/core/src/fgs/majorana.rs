//! Polynomials in Majorana operators, keyed by ascending-index bitmasks.

use std::collections::BTreeMap;

use crate::linalg::{C64, I};
use crate::model::{quadratic_matrix, ImpurityModel};
use crate::error::{invalid, Result};

/// Sign of `γ[x] γ[y]` brought to the ordered monomial `γ[x ⊕ y]`.
#[inline]
pub fn product_sign(x: u64, y: u64) -> f64 {
    let mut swaps = 0u32;
    let mut rest = y;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        let above = if j >= 63 { 0 } else { x >> (j + 1) };
        swaps += above.count_ones();
    }
    if swaps % 2 == 0 { 1.0 } else { -1.0 }
}

/// `Σ_x c_x γ[x]` over at most 64 Majoranas.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MajoranaPolynomial {
    pub terms: BTreeMap<u64, C64>,
}

impl MajoranaPolynomial {
    pub fn constant(c: C64) -> Self {
        let mut p = Self::default();
        p.add_term(0, c);
        p
    }

    pub fn monomial(x: u64, c: C64) -> Self {
        let mut p = Self::default();
        p.add_term(x, c);
        p
    }

    pub fn add_term(&mut self, x: u64, c: C64) {
        *self.terms.entry(x).or_insert(C64::new(0.0, 0.0)) += c;
    }

    pub fn add(&mut self, other: &Self, scale: C64) {
        for (&x, &c) in &other.terms {
            self.add_term(x, c * scale);
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (&x, &a) in &self.terms {
            for (&y, &b) in &other.terms {
                out.add_term(x ^ y, a * b * product_sign(x, y));
            }
        }
        out.prune(1e-14);
        out
    }

    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, c| c.norm() > tol);
    }

    /// Annihilator `c_m = (γ_{2m} + iγ_{2m+1})/2`.
    pub fn annihilator(m: usize) -> Self {
        let mut p = Self::default();
        p.add_term(1 << (2 * m), C64::new(0.5, 0.0));
        p.add_term(1 << (2 * m + 1), 0.5 * I);
        p
    }

    /// Creator `c†_m = (γ_{2m} − iγ_{2m+1})/2`.
    pub fn creator(m: usize) -> Self {
        let mut p = Self::default();
        p.add_term(1 << (2 * m), C64::new(0.5, 0.0));
        p.add_term(1 << (2 * m + 1), -0.5 * I);
        p
    }

    pub fn number(m: usize) -> Self {
        Self::creator(m).mul(&Self::annihilator(m))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Impurity Hamiltonian over `2N` modes (up `0..N`, down `N..2N`).
pub fn hamiltonian_polynomial(model: &ImpurityModel) -> Result<MajoranaPolynomial> {
    let n = model.n_orbitals();
    if 4 * n > 64 {
        return invalid(format!("{} Majoranas exceed the 64-bit monomial encoding", 4 * n));
    }
    let h = quadratic_matrix(model)?;
    let mut poly = MajoranaPolynomial::default();
    for s in 0..2 {
        let off = s * n;
        for p in 0..n {
            for q in 0..n {
                if h[(p, q)] != 0.0 {
                    let term = MajoranaPolynomial::creator(off + p).mul(&MajoranaPolynomial::annihilator(off + q));
                    poly.add(&term, C64::new(h[(p, q)], 0.0));
                }
            }
        }
    }
    let nums: Vec<MajoranaPolynomial> = (0..2 * n).map(MajoranaPolynomial::number).collect();
    for i in 0..model.n_imp {
        if model.u_intra != 0.0 {
            poly.add(&nums[i].mul(&nums[n + i]), C64::new(model.u_intra, 0.0));
        }
        if model.u_inter != 0.0 {
            for j in 0..model.n_imp {
                if i == j {
                    continue;
                }
                for si in [i, n + i] {
                    for sj in [j, n + j] {
                        poly.add(&nums[si].mul(&nums[sj]), C64::new(model.u_inter, 0.0));
                    }
                }
            }
        }
    }
    poly.prune(1e-14);
    Ok(poly)
}
