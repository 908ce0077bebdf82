//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

/// Ascending eigen-decomposition of a real symmetric matrix.
pub fn sym_eigen(m: &RMat) -> (DVector<f64>, RMat) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), RMat::zeros(0, 0));
    }
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vecs = RMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Ascending eigen-decomposition of a complex Hermitian matrix.
pub fn herm_eigen(m: &CMat) -> (DVector<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), CMat::zeros(0, 0));
    }
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// Matrix exponential of a real matrix (Padé via nalgebra).
pub fn expm(m: &RMat) -> RMat {
    m.clone().exp()
}

/// 2-norm condition number of a Hermitian positive semi-definite matrix.
pub fn hpsd_condition(m: &CMat) -> f64 {
    let (vals, _) = herm_eigen(m);
    if vals.is_empty() {
        return 1.0;
    }
    let lo = vals[0];
    let hi = vals[vals.len() - 1];
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Completes orthonormal columns `q` (n×k) to an n×n orthogonal matrix with
/// determinant +1, keeping the first k columns. Requires k < n or det already +1.
pub fn complete_orthonormal(q: &RMat) -> RMat {
    let n = q.nrows();
    let k = q.ncols();
    let mut out = RMat::zeros(n, n);
    for j in 0..k {
        out.set_column(j, &q.column(j));
    }
    let mut filled = k;
    for e in 0..n {
        if filled == n {
            break;
        }
        let mut v = DVector::<f64>::zeros(n);
        v[e] = 1.0;
        for _ in 0..2 {
            for j in 0..filled {
                let c = out.column(j).dot(&v);
                v -= out.column(j) * c;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            out.set_column(filled, &(v / norm));
            filled += 1;
        }
    }
    if k < n && out.determinant() < 0.0 {
        let last = -out.column(n - 1);
        out.set_column(n - 1, &last);
    }
    out
}

/// Orthonormal basis (columns) of the span of the given columns.
pub fn orthonormal_span(vs: &RMat, tol: f64) -> RMat {
    let n = vs.nrows();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for j in 0..vs.ncols() {
        let mut v: DVector<f64> = vs.column(j).into_owned();
        for _ in 0..2 {
            for c in &cols {
                let d = c.dot(&v);
                v -= c * d;
            }
        }
        let norm = v.norm();
        if norm > tol {
            cols.push(v / norm);
        }
    }
    let mut out = RMat::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Distance between two state vectors up to a global phase.
pub fn phase_distance(a: &[C64], b: &[C64]) -> f64 {
    let ov: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { C64::new(1.0, 0.0) };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x * phase - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
