//! Impurity and lattice parameter sets.
//!
//! Orbital layout per spin: impurity orbitals `0..n_imp`, then the bath of
//! impurity `i` at `n_imp + i * n_bath + b`. Every other module inherits it.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::RMat;

/// Anderson impurity model in star topology.
#[derive(Clone, Debug, PartialEq)]
pub struct ImpurityModel {
    pub n_imp: usize,
    pub n_bath: usize,
    /// Impurity on-site energies and inter-orbital hopping (`n_imp × n_imp`, symmetric).
    pub nu: RMat,
    pub u_intra: f64,
    pub u_inter: f64,
    /// Bath energies (`n_imp × n_bath`).
    pub eps: RMat,
    /// Hybridizations (`n_imp × n_bath`).
    pub v: RMat,
    pub mu: f64,
}

impl ImpurityModel {
    /// Single-orbital model with the given bath.
    pub fn single(nu: f64, u: f64, eps: &[f64], v: &[f64]) -> Result<Self> {
        if eps.len() != v.len() {
            return Err(Error::Dimension(format!("eps has {} entries, v has {}", eps.len(), v.len())));
        }
        let nb = eps.len();
        let m = Self {
            n_imp: 1,
            n_bath: nb,
            nu: DMatrix::from_element(1, 1, nu),
            u_intra: u,
            u_inter: 0.0,
            eps: DMatrix::from_row_slice(1, nb, eps),
            v: DMatrix::from_row_slice(1, nb, v),
            mu: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_imp == 0 {
            return invalid("n_imp must be at least 1");
        }
        if self.nu.shape() != (self.n_imp, self.n_imp) {
            return Err(Error::Dimension(format!("nu is {:?}, expected {}x{}", self.nu.shape(), self.n_imp, self.n_imp)));
        }
        for (name, m) in [("eps", &self.eps), ("v", &self.v)] {
            if m.shape() != (self.n_imp, self.n_bath) {
                return Err(Error::Dimension(format!(
                    "{name} is {:?}, expected {}x{}",
                    m.shape(),
                    self.n_imp,
                    self.n_bath
                )));
            }
        }
        if (&self.nu - self.nu.transpose()).amax() > 1e-12 {
            return invalid("nu must be Hermitian");
        }
        let all = self.nu.iter().chain(self.eps.iter()).chain(self.v.iter());
        if !all.chain([self.u_intra, self.u_inter, self.mu].iter()).all(|x| x.is_finite()) {
            return invalid("model parameters must be finite");
        }
        Ok(())
    }

    /// Spin-orbitals per spin, `N = N_I (N_B + 1)`.
    pub fn n_orbitals(&self) -> usize {
        self.n_imp * (self.n_bath + 1)
    }

    /// Total bath size `Λ = N_I N_B`.
    pub fn lambda(&self) -> usize {
        self.n_imp * self.n_bath
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_orbitals()
    }

    pub fn bath_index(&self, imp: usize, b: usize) -> usize {
        self.n_imp + imp * self.n_bath + b
    }

    pub fn with_u(&self, u_intra: f64, u_inter: f64) -> Self {
        Self { u_intra, u_inter, ..self.clone() }
    }

    /// Same layout, new bath parameters.
    pub fn with_bath(&self, eps: RMat, v: RMat) -> Result<Self> {
        let m = Self { eps, v, ..self.clone() };
        m.validate()?;
        Ok(m)
    }
}

/// Single-particle matrix of the quadratic part (identical for both spins).
///
/// The chemical potential enters as `−μ` on the impurity diagonal.
pub fn quadratic_matrix(model: &ImpurityModel) -> Result<RMat> {
    model.validate()?;
    let n = model.n_orbitals();
    let mut h = RMat::zeros(n, n);
    for i in 0..model.n_imp {
        for j in 0..model.n_imp {
            h[(i, j)] = model.nu[(i, j)];
        }
        h[(i, i)] -= model.mu;
        for b in 0..model.n_bath {
            let k = model.bath_index(i, b);
            h[(k, k)] = model.eps[(i, b)];
            h[(i, k)] = model.v[(i, b)];
            h[(k, i)] = model.v[(i, b)];
        }
    }
    Ok(h)
}

/// Particle-hole symmetric impurity levels: `ν_ii = −U/2 − 2U′(N_I − 1)`, `μ = 0`.
///
/// The inter-orbital term counts ordered pairs, hence the factor two.
pub fn half_filling_shift(model: &ImpurityModel) -> ImpurityModel {
    let mut m = model.clone();
    let shift = -0.5 * m.u_intra - 2.0 * m.u_inter * (m.n_imp as f64 - 1.0);
    for i in 0..m.n_imp {
        m.nu[(i, i)] = shift;
    }
    m.mu = 0.0;
    m
}

/// Particle-hole symmetric bath: pairs at `±ε`, an odd leftover pinned at
/// zero energy with `V = 0.01`. Energies and couplings drawn from `(0, scale]`.
pub fn symmetric_bath<R: Rng>(n_bath: usize, scale: f64, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut eps = Vec::with_capacity(n_bath);
    let mut v = Vec::with_capacity(n_bath);
    for _ in 0..n_bath / 2 {
        let e = scale * (1.0 - rng.random::<f64>());
        let c = scale * (1.0 - rng.random::<f64>());
        eps.extend([-e, e]);
        v.extend([c, c]);
    }
    if n_bath % 2 == 1 {
        eps.push(0.0);
        v.push(0.01);
    }
    (eps, v)
}

/// Infinite-coordination Bethe lattice Hubbard model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetheLattice {
    pub hopping: f64,
    pub u: f64,
    pub beta: f64,
}

impl BetheLattice {
    pub fn new(hopping: f64, u: f64, beta: f64) -> Result<Self> {
        if !(hopping > 0.0) || !(beta > 0.0) {
            return invalid(format!("Bethe lattice needs h > 0 and beta > 0 (got h={hopping}, beta={beta})"));
        }
        Ok(Self { hopping, u, beta })
    }
}

/// Config-file form of [`ImpurityModel`]. `nu` may be a scalar (diagonal)
/// or a full matrix; `eps`/`v` are rows per impurity orbital.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_imp: usize,
    pub n_bath: usize,
    #[serde(default)]
    pub nu: Option<NuConfig>,
    #[serde(default)]
    pub u_intra: f64,
    #[serde(default)]
    pub u_inter: f64,
    pub eps: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    #[serde(default)]
    pub mu: f64,
    /// Apply [`half_filling_shift`] after loading.
    #[serde(default)]
    pub half_filling: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NuConfig {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

fn rows_to_matrix(name: &str, rows: &[Vec<f64>], nr: usize, nc: usize) -> Result<RMat> {
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Dimension(format!("{name} must be {nr}x{nc}")));
    }
    Ok(RMat::from_fn(nr, nc, |i, j| rows[i][j]))
}

impl ModelConfig {
    pub fn to_model(&self) -> Result<ImpurityModel> {
        let ni = self.n_imp;
        let nu = match &self.nu {
            None => RMat::zeros(ni, ni),
            Some(NuConfig::Scalar(x)) => RMat::identity(ni, ni) * *x,
            Some(NuConfig::Matrix(rows)) => rows_to_matrix("nu", rows, ni, ni)?,
        };
        let m = ImpurityModel {
            n_imp: ni,
            n_bath: self.n_bath,
            nu,
            u_intra: self.u_intra,
            u_inter: self.u_inter,
            eps: rows_to_matrix("eps", &self.eps, ni, self.n_bath)?,
            v: rows_to_matrix("v", &self.v, ni, self.n_bath)?,
            mu: self.mu,
        };
        m.validate()?;
        Ok(if self.half_filling { half_filling_shift(&m) } else { m })
    }

    pub fn from_model(m: &ImpurityModel) -> Self {
        let rows = |x: &RMat| (0..x.nrows()).map(|i| x.row(i).iter().copied().collect()).collect();
        Self {
            n_imp: m.n_imp,
            n_bath: m.n_bath,
            nu: Some(NuConfig::Matrix(rows(&m.nu))),
            u_intra: m.u_intra,
            u_inter: m.u_inter,
            eps: rows(&m.eps),
            v: rows(&m.v),
            mu: m.mu,
            half_filling: false,
        }
    }
}
