//! Pfaffian by Parlett–Reid skew tridiagonalization with pivoting.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{invalid, Result};

/// Pfaffian of a real or complex skew-symmetric matrix.
pub fn pfaffian<T>(a: &DMatrix<T>) -> Result<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = a.nrows();
    if n != a.ncols() {
        return invalid("Pfaffian needs a square matrix");
    }
    if n % 2 == 1 {
        return invalid(format!("Pfaffian of odd dimension {n}"));
    }
    let scale = a.iter().map(|x| x.modulus()).fold(0.0, f64::max).max(1.0);
    for i in 0..n {
        for j in i..n {
            if (a[(i, j)] + a[(j, i)]).modulus() > 1e-10 * scale {
                return invalid("Pfaffian input is not skew-symmetric");
            }
        }
    }
    Ok(pfaffian_unchecked(a.clone()))
}

/// Pfaffian without input validation; consumes its argument as workspace.
pub fn pfaffian_unchecked<T>(mut a: DMatrix<T>) -> T
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = a.nrows();
    let mut pf = T::one();
    let mut k = 0;
    while k + 1 < n {
        let mut kp = k + 1;
        let mut best = a[(k + 1, k)].modulus();
        for i in k + 2..n {
            let m = a[(i, k)].modulus();
            if m > best {
                best = m;
                kp = i;
            }
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let piv = a[(k, k + 1)];
        if piv.modulus() == 0.0 {
            return T::zero();
        }
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<T> = (k + 2..n).map(|j| a[(k, j)] / piv).collect();
            let col: Vec<T> = (k + 2..n).map(|j| a[(j, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    pf
}
