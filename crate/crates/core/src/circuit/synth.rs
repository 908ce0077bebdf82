//! Re-synthesis of free-fermion unitaries on a chain register.
//!
//! A register of `n` chain qubits carries Majoranas `γ_{2c}`, `γ_{2c+1}` on
//! chain position `c` (JW string over positions `< c`). Gaussian unitaries are
//! handled as their SO(2n) rotations and re-synthesized by line elimination.

use nalgebra::DMatrix;

use super::matchgate::{lift_so4, Matchgate, U4};
use crate::error::{invalid, Result};
use crate::linalg::{complete_orthonormal, expm, orthonormal_span, RMat, C64};

/// Gate on chain coordinates (before placement on physical qubits).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChainGate {
    /// Matchgate on chain positions `(q, q+1)`, position `q` as qubit 1.
    Match(Matchgate),
    /// `exp(−iθZ/2)` on chain position `c`.
    Rz(usize, f64),
}

/// Majorana generator `A` of `H = Σ h_pq c†_p c_q` written as `(i/4) Σ A γγ`.
pub fn hopping_generator(h: &RMat) -> RMat {
    let n = h.nrows();
    let mut a = RMat::zeros(2 * n, 2 * n);
    for p in 0..n {
        for q in 0..n {
            a[(2 * p, 2 * q + 1)] = h[(p, q)];
            a[(2 * q + 1, 2 * p)] = -h[(p, q)];
        }
    }
    a
}

/// Rotation of `exp(−iHτ)` for `H = (i/4) Σ A_μν γ_μ γ_ν`.
pub fn rotation_from_generator(a: &RMat, tau: f64) -> Result<RMat> {
    if (a + a.transpose()).amax() > 1e-12 {
        return invalid("Majorana generator must be antisymmetric (quadratic Hamiltonian)");
    }
    Ok(expm(&(a * tau)))
}

fn embed_block(r: &mut RMat, c: usize, q: &RMat) {
    // r ← diag(…, Qᵀ, …) r on indices 2c..2c+4.
    let rows = r.rows(2 * c, 4).into_owned();
    r.rows_mut(2 * c, 4).copy_from(&(q.transpose() * rows));
}

/// Eliminates columns `2k, 2k+1` with one line of blocks `c = n−2 … k`.
/// Returns the blocks in time order (ascending `c`).
fn eliminate_line(r: &mut RMat, k: usize, n: usize) -> Vec<(usize, RMat)> {
    let mut blocks = Vec::new();
    for c in (k..n - 1).rev() {
        let x = DMatrix::from_fn(4, 2, |i, j| r[(2 * c + i, 2 * k + j)]);
        let span = if c == k { x.clone() } else { orthonormal_span(&x, 1e-13) };
        let q = complete_orthonormal(&span);
        embed_block(r, c, &q);
        blocks.push((c, q));
    }
    blocks.reverse();
    blocks
}

fn lines_to_gates(lines: Vec<Vec<(usize, RMat)>>) -> Vec<ChainGate> {
    // Operator order: line 0 leftmost. Time order: last line first.
    lines
        .into_iter()
        .rev()
        .flat_map(|line| line.into_iter().map(|(c, q)| ChainGate::Match(lift_so4(c, &q))))
        .collect()
}

fn check_rotation(r: &RMat) -> Result<usize> {
    let d = r.nrows();
    if d % 2 == 1 || r.ncols() != d {
        return invalid("rotation must be square with even dimension");
    }
    if (r.transpose() * r - RMat::identity(d, d)).amax() > 1e-8 || r.determinant() < 0.0 {
        return invalid("not a proper orthogonal rotation");
    }
    Ok(d / 2)
}

/// Canonical triangle of `n(n−1)/2` matchgates realizing rotation `r`
/// (up to global phase), in time order. A one-qubit register yields an `Rz`.
pub fn triangle(r: &RMat) -> Result<Vec<ChainGate>> {
    let n = check_rotation(r)?;
    let mut work = r.clone();
    let lines: Vec<_> = (0..n.saturating_sub(1)).map(|k| eliminate_line(&mut work, k, n)).collect();
    let phi = work[(2 * n - 1, 2 * n - 2)].atan2(work[(2 * n - 2, 2 * n - 2)]);
    let mut gates = lines_to_gates(lines);
    if n == 1 {
        gates.push(ChainGate::Rz(0, phi));
    } else if let Some(ChainGate::Match(g)) = gates.iter_mut().find(|g| matches!(g, ChainGate::Match(m) if m.q == n - 2)) {
        // The residual acts first; fold it into the first-applied Z angle of the c = n−2 block.
        g.angles[5] -= phi / 2.0;
    }
    Ok(gates)
}

/// Splits `r = L · B` with `L` a ladder of `n_lines` lines fixing the first
/// `2·n_lines` Majorana images, and `B` acting only on the remaining modes.
/// Returns the ladder gates (time order) and `B`.
pub fn ladder(r: &RMat, n_lines: usize) -> Result<(Vec<ChainGate>, RMat)> {
    let n = check_rotation(r)?;
    let mut work = r.clone();
    let lines: Vec<_> = (0..n_lines.min(n.saturating_sub(1))).map(|k| eliminate_line(&mut work, k, n)).collect();
    // Compression chains ladders over many steps; without re-projection the
    // remainder's orthogonality error roughly doubles per step.
    let k = 2 * lines.len();
    let d = 2 * n;
    for i in 0..k {
        work.row_mut(i).fill(0.0);
        work.column_mut(i).fill(0.0);
        work[(i, i)] = 1.0;
    }
    if k < d {
        let svd = work.view((k, k), (d - k, d - k)).into_owned().svd(true, true);
        let polar = svd.u.unwrap() * svd.v_t.unwrap();
        work.view_mut((k, k), (d - k, d - k)).copy_from(&polar);
    }
    Ok((lines_to_gates(lines), work))
}

/// Dense unitary of chain gates on an `n`-qubit register (small `n` only).
pub fn dense_unitary(gates: &[ChainGate], n: usize) -> DMatrix<C64> {
    let dim = 1usize << n;
    let mut u = DMatrix::<C64>::identity(dim, dim);
    for g in gates {
        let mut gm = DMatrix::<C64>::zeros(dim, dim);
        match g {
            ChainGate::Match(m) => {
                let l: U4 = m.unitary();
                for col in 0..dim {
                    let loc = (col >> m.q) & 3;
                    for out in 0..4 {
                        let row = (col & !(3 << m.q)) | (out << m.q);
                        gm[(row, col)] += l[(out, loc)];
                    }
                }
            }
            ChainGate::Rz(c, th) => {
                for col in 0..dim {
                    let z = if col >> c & 1 == 0 { -0.5 } else { 0.5 };
                    gm[(col, col)] = C64::new(0.0, z * th).exp();
                }
            }
        }
        u = gm * u;
    }
    u
}

/// Majorana rotation of a dense register unitary.
pub fn rotation_of_dense(u: &DMatrix<C64>, n: usize) -> RMat {
    let gam: Vec<DMatrix<C64>> = (0..2 * n).map(|k| majorana_dense(k, n)).collect();
    let dim = (1usize << n) as f64;
    RMat::from_fn(2 * n, 2 * n, |nu, mu| (&gam[nu] * u * &gam[mu] * u.adjoint()).trace().re / dim)
}

/// JW Majorana `γ_k` on an `n`-qubit chain register.
pub fn majorana_dense(k: usize, n: usize) -> DMatrix<C64> {
    let dim = 1usize << n;
    let c = k / 2;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for col in 0..dim {
        let parity = ((col & ((1 << c) - 1)) as u32).count_ones();
        let s = if parity % 2 == 0 { 1.0 } else { -1.0 };
        let row = col ^ (1 << c);
        let bit = col >> c & 1;
        let v = if k % 2 == 0 {
            C64::new(s, 0.0)
        } else if bit == 0 {
            C64::new(0.0, s)
        } else {
            C64::new(0.0, -s)
        };
        m[(row, col)] = v;
    }
    m
}

/// Turnover: `c·b·a` with `a, c` on `(q, q+1)` and `b` on `(q+1, q+2)`
/// re-factored as `c′·b′·a′` with `a′, c′` on `(q+1, q+2)` and `b′` on `(q, q+1)`.
/// The mirrored pattern is handled by [`turnover_mirrored`].
pub fn turnover(a: &Matchgate, b: &Matchgate, c: &Matchgate) -> Result<(Matchgate, Matchgate, Matchgate)> {
    let q = a.q;
    if c.q != q || b.q != q + 1 {
        return invalid("turnover needs gates on (q,q+1), (q+1,q+2), (q,q+1)");
    }
    let local = |g: &Matchgate| Matchgate { q: g.q - q, ..*g };
    let gates = [local(a), local(b), local(c)].map(ChainGate::Match);
    let u = dense_unitary(&gates, 3);
    let r = rotation_of_dense(&u, 3);
    // C′ on Majoranas 2..6 pushes R e0, R e1 into span{e0..e4}.
    let mut work = r.clone();
    let x = DMatrix::from_fn(4, 2, |i, j| work[(2 + i, j)]);
    let qc = complete_orthonormal(&orthonormal_span(&x, 1e-13));
    embed_block(&mut work, 1, &qc);
    // B′ on Majoranas 0..4 maps e0, e1 to the images.
    let y = DMatrix::from_fn(4, 2, |i, j| work[(i, j)]);
    let qb = complete_orthonormal(&y);
    embed_block(&mut work, 0, &qb);
    // Remainder fixes e0, e1: A′ on Majoranas 2..6.
    let qa = work.view((2, 2), (4, 4)).into_owned();
    let mut gc = lift_so4(1, &qc);
    let gb = lift_so4(0, &qb);
    let ga = lift_so4(1, &qa);
    let trial = dense_unitary(&[ChainGate::Match(ga), ChainGate::Match(gb), ChainGate::Match(gc)], 3);
    let ov: C64 = trial.iter().zip(u.iter()).map(|(x, y)| x.conj() * y).sum();
    if ov.re < 0.0 {
        gc.angles[0] += std::f64::consts::PI;
    }
    let place = |g: Matchgate| Matchgate { q: g.q + q, ..g };
    Ok((place(ga), place(gb), place(gc)))
}

/// Turnover for `a, c` on `(q+1, q+2)` and `b` on `(q, q+1)`.
pub fn turnover_mirrored(a: &Matchgate, b: &Matchgate, c: &Matchgate) -> Result<(Matchgate, Matchgate, Matchgate)> {
    let q = b.q;
    if a.q != q + 1 || c.q != q + 1 {
        return invalid("mirrored turnover needs gates on (q+1,q+2), (q,q+1), (q+1,q+2)");
    }
    // Reflect the 3-qubit block: chain position j ↦ 2 − j.
    let refl = |g: &Matchgate| Matchgate { q: 1 - (g.q - q), ..g.mirrored() };
    let (a2, b2, c2) = turnover(&Matchgate { q: 0, ..refl(a) }, &Matchgate { q: 1, ..refl(b) }, &Matchgate { q: 0, ..refl(c) })?;
    let back = |g: Matchgate| Matchgate { q: q + (1 - g.q), ..g.mirrored() };
    Ok((back(a2), back(b2), back(c2)))
}

/// Commutation: gates on disjoint pairs can be swapped freely.
pub fn commutes(a: &Matchgate, b: &Matchgate) -> bool {
    a.q.abs_diff(b.q) >= 2
}
