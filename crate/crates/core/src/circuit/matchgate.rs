//! Two-qubit matchgates and their Majorana-rotation picture.
//!
//! `M = e^{iθ1 Z1} e^{iθ2 Z2} e^{iθ3 XX} e^{iθ4 YY} e^{iθ5 Z1} e^{iθ6 Z2}`,
//! with qubit 1 the low bit of the local 4-dim index. On the even subspace
//! `(|00⟩, |11⟩)` this is `e^{i(θ1+θ2)σz} e^{i(θ3−θ4)σx} e^{i(θ5+θ6)σz}`; on the
//! odd subspace `(|10⟩, |01⟩)` (qubit-2 excitation first) it is
//! `e^{i(θ1−θ2)σz} e^{i(θ3+θ4)σx} e^{i(θ5−θ6)σz}`.

use nalgebra::{Matrix2, Matrix4};

use crate::error::{invalid, Result};
use crate::linalg::{RMat, C64, I};

pub type U2 = Matrix2<C64>;
pub type U4 = Matrix4<C64>;

const EVEN: [usize; 2] = [0, 3];
const ODD: [usize; 2] = [2, 1];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matchgate {
    /// Lower qubit of the adjacent pair `(q, q+1)`.
    pub q: usize,
    pub angles: [f64; 6],
}

fn zxz(a: f64, b: f64, c: f64) -> U2 {
    let ez = |t: f64| U2::new((I * t).exp(), C64::new(0.0, 0.0), C64::new(0.0, 0.0), (-I * t).exp());
    let ex = U2::new(C64::new(b.cos(), 0.0), I * b.sin(), I * b.sin(), C64::new(b.cos(), 0.0));
    ez(a) * ex * ez(c)
}

/// ZXZ Euler angles of an SU(2) matrix, `U = e^{iασz} e^{iβσx} e^{iγσz}`.
pub fn su2_euler(u: &U2) -> (f64, f64, f64) {
    let a = u[(0, 0)];
    let b = u[(0, 1)];
    let beta = b.norm().atan2(a.norm());
    let sum = if a.norm() > 1e-14 { a.arg() } else { 0.0 };
    let diff = if b.norm() > 1e-14 { b.arg() - std::f64::consts::FRAC_PI_2 } else { 0.0 };
    ((sum + diff) / 2.0, beta, (sum - diff) / 2.0)
}

fn embed(even: &U2, odd: &U2) -> U4 {
    let mut u = U4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            u[(EVEN[i], EVEN[j])] = even[(i, j)];
            u[(ODD[i], ODD[j])] = odd[(i, j)];
        }
    }
    u
}

fn blocks(u: &U4) -> (U2, U2) {
    let e = U2::from_fn(|i, j| u[(EVEN[i], EVEN[j])]);
    let o = U2::from_fn(|i, j| u[(ODD[i], ODD[j])]);
    (e, o)
}

impl Matchgate {
    pub fn identity(q: usize) -> Self {
        Self { q, angles: [0.0; 6] }
    }

    pub fn new(q: usize, angles: [f64; 6]) -> Self {
        Self { q, angles }
    }

    pub fn even_block(&self) -> U2 {
        let t = &self.angles;
        zxz(t[0] + t[1], t[2] - t[3], t[4] + t[5])
    }

    pub fn odd_block(&self) -> U2 {
        let t = &self.angles;
        zxz(t[0] - t[1], t[2] + t[3], t[4] - t[5])
    }

    /// Dense 4×4 unitary on the local basis `b_q + 2 b_{q+1}`.
    pub fn unitary(&self) -> U4 {
        embed(&self.even_block(), &self.odd_block())
    }

    /// Angles reproducing an SU(2)×SU(2) pair exactly.
    pub fn from_blocks(q: usize, even: &U2, odd: &U2) -> Self {
        let (ae, be, ge) = su2_euler(even);
        let (ao, bo, go) = su2_euler(odd);
        Self {
            q,
            angles: [
                (ae + ao) / 2.0,
                (ae - ao) / 2.0,
                (be + bo) / 2.0,
                (bo - be) / 2.0,
                (ge + go) / 2.0,
                (ge - go) / 2.0,
            ],
        }
    }

    /// Angles for a parity-preserving unitary with unit-determinant blocks.
    pub fn from_unitary(q: usize, u: &U4) -> Result<Self> {
        let (e, o) = blocks(u);
        let leak = u.iter().map(|z| z.norm_sqr()).sum::<f64>()
            - e.iter().chain(o.iter()).map(|z| z.norm_sqr()).sum::<f64>();
        if leak > 1e-16 * 16.0 || (e.determinant() - 1.0).norm() > 1e-8 || (o.determinant() - 1.0).norm() > 1e-8 {
            return invalid("unitary is not a matchgate with unit-determinant blocks");
        }
        Ok(Self::from_blocks(q, &e, &o))
    }

    /// `b · a` (apply `a` first).
    pub fn fuse(a: &Matchgate, b: &Matchgate) -> Result<Matchgate> {
        if a.q != b.q {
            return invalid(format!("cannot fuse matchgates on pairs {} and {}", a.q, b.q));
        }
        Ok(Self::from_blocks(a.q, &(b.even_block() * a.even_block()), &(b.odd_block() * a.odd_block())))
    }

    pub fn inverse(&self) -> Matchgate {
        Self::from_blocks(self.q, &self.even_block().adjoint(), &self.odd_block().adjoint())
    }

    /// Same gate with the roles of its two qubits exchanged.
    pub fn mirrored(&self) -> Matchgate {
        let t = self.angles;
        Self { q: self.q, angles: [t[1], t[0], t[2], t[3], t[5], t[4]] }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        (self.unitary() - U4::identity()).iter().all(|z| z.norm() <= tol)
    }
}

/// Local Majoranas on a pair: `X1, Y1, Z1X2, Z1Y2`.
pub fn local_majoranas() -> [U4; 4] {
    let x = U2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let y = U2::new(C64::new(0.0, 0.0), -I, I, C64::new(0.0, 0.0));
    let z = U2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0));
    let id = U2::identity();
    // kron(b, a): a acts on qubit 1 (low bit).
    let kron = |a: &U2, b: &U2| U4::from_fn(|r, c| a[(r & 1, c & 1)] * b[(r >> 1, c >> 1)]);
    [kron(&x, &id), kron(&y, &id), kron(&z, &x), kron(&z, &y)]
}

/// Rotation `R` with `U γ_μ U† = Σ_ν R_νμ γ_ν` over the four local Majoranas.
pub fn rotation_of(u: &U4) -> RMat {
    let g = local_majoranas();
    RMat::from_fn(4, 4, |nu, mu| (g[nu] * u * g[mu] * u.adjoint()).trace().re / 4.0)
}

/// `exp(−(φ/2) γ_μ γ_ν)`, whose rotation is `e_μ ↦ cos φ e_μ + sin φ e_ν`.
pub fn plane_unitary(mu: usize, nu: usize, phi: f64) -> U4 {
    let g = local_majoranas();
    let k = g[mu] * g[nu];
    U4::identity() * C64::new((phi / 2.0).cos(), 0.0) - k * C64::new((phi / 2.0).sin(), 0.0)
}

/// Spin lift of an SO(4) rotation on the local Majoranas, via Givens
/// factorization into plane rotations.
pub fn lift_so4(q: usize, r: &RMat) -> Matchgate {
    let mut work = r.clone();
    // Collect G with work = G_1ᵀ … applied; r = Π G_k in order.
    let mut planes: Vec<(usize, usize, f64)> = Vec::new();
    for j in 0..3 {
        for i in (j + 1..4).rev() {
            let (a, b) = (work[(i - 1, j)], work[(i, j)]);
            if b.abs() < 1e-300 && a >= 0.0 {
                continue;
            }
            let phi = b.atan2(a);
            // Left-multiply by the inverse plane rotation to zero work[i, j].
            let (c, s) = (phi.cos(), phi.sin());
            for col in 0..4 {
                let (x, y) = (work[(i - 1, col)], work[(i, col)]);
                work[(i - 1, col)] = c * x + s * y;
                work[(i, col)] = -s * x + c * y;
            }
            planes.push((i - 1, i, phi));
        }
    }
    let mut u = U4::identity();
    for &(mu, nu, phi) in &planes {
        u *= plane_unitary(mu, nu, phi);
    }
    Matchgate::from_unitary(q, &u).expect("plane rotations generate matchgates")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_gate(rng: &mut ChaCha8Rng) -> Matchgate {
        Matchgate::new(0, std::array::from_fn(|_| rng.random::<f64>() * 6.0 - 3.0))
    }

    fn dense(t: &[f64; 6]) -> U4 {
        let z1 = U4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, 1.0, -1.0).map(|x| C64::new(x, 0.0)));
        let z2 = U4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, -1.0, -1.0).map(|x| C64::new(x, 0.0)));
        let x = U2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        let y = U2::new(C64::new(0.0, 0.0), -I, I, C64::new(0.0, 0.0));
        let kron = |a: &U2, b: &U2| U4::from_fn(|r, c| a[(r & 1, c & 1)] * b[(r >> 1, c >> 1)]);
        let xx = kron(&x, &x);
        let yy = kron(&y, &y);
        let e = |h: &U4, th: f64| U4::identity() * C64::new(th.cos(), 0.0) + h * (I * th.sin());
        e(&z1, t[0]) * e(&z2, t[1]) * e(&xx, t[2]) * e(&yy, t[3]) * e(&z1, t[4]) * e(&z2, t[5])
    }

    fn close(a: &U4, b: &U4, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() < tol)
    }

    #[test]
    fn block_form_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let g = random_gate(&mut rng);
            assert!(close(&g.unitary(), &dense(&g.angles), 1e-12));
        }
    }

    #[test]
    fn fusion_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let (a, b) = (random_gate(&mut rng), random_gate(&mut rng));
            let f = Matchgate::fuse(&a, &b).unwrap();
            assert!(close(&f.unitary(), &(b.unitary() * a.unitary()), 1e-10));
            assert!(Matchgate::fuse(&a, &a.inverse()).unwrap().is_identity(1e-10));
            let id = Matchgate::identity(0);
            assert!(close(&Matchgate::fuse(&a, &id).unwrap().unitary(), &a.unitary(), 1e-12));
        }
        assert!(Matchgate::fuse(&Matchgate::identity(0), &Matchgate::identity(1)).is_err());
    }

    #[test]
    fn mirrored_swaps_qubits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_gate(&mut rng);
        let swap = U4::from_fn(|r, c| {
            let sw = ((r & 1) << 1) | (r >> 1);
            C64::new(if sw == c { 1.0 } else { 0.0 }, 0.0)
        });
        assert!(close(&(swap * g.unitary() * swap), &g.mirrored().unitary(), 1e-12));
    }

    #[test]
    fn rotation_is_homomorphism_and_lifts() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let (a, b) = (random_gate(&mut rng), random_gate(&mut rng));
            let ra = rotation_of(&a.unitary());
            let rab = rotation_of(&(a.unitary() * b.unitary()));
            assert!((&ra * rotation_of(&b.unitary()) - &rab).amax() < 1e-12);
            assert!((ra.determinant() - 1.0).abs() < 1e-10);
            let lifted = lift_so4(0, &ra);
            assert!((rotation_of(&lifted.unitary()) - &ra).amax() < 1e-10);
        }
        let r = rotation_of(&plane_unitary(1, 3, 0.7));
        assert!((r[(1, 1)] - 0.7f64.cos()).abs() < 1e-12 && (r[(3, 1)] - 0.7f64.sin()).abs() < 1e-12);
    }
}
