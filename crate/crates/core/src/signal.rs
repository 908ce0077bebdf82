//! Post-processing of correlator time series.
//!
//! Everything here works on the positive-definite form `f(t) = i·G_R(t) =
//! Σ_r A_r e^{−i f_r t}`, whose Gram matrix `T_jk = f(t_j − t_k)` is Hermitian
//! Toeplitz and PSD. Use [`positive_form`] / [`greens_form`] to convert.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{matsubara_grid, Lehmann};
use crate::linalg::{herm_eigen, CMat, C64};

pub const MAX_PROJECTIONS: usize = 500;
pub const PROJECTION_TOL: f64 = 1e-12;

const I: C64 = C64::new(0.0, 1.0);

/// Uniformly sampled complex series starting at `t = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub y: Vec<C64>,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, y: Vec<C64>) -> Result<Self> {
        if t.len() != y.len() || t.is_empty() {
            return Err(Error::Dimension(format!("{} times for {} values", t.len(), y.len())));
        }
        let s = Self { t, y };
        s.step()?;
        Ok(s)
    }

    pub fn uniform(dt: f64, y: Vec<C64>) -> Self {
        Self { t: (0..y.len()).map(|k| k as f64 * dt).collect(), y }
    }

    /// Grid spacing; rejects non-uniform grids and grids not starting at 0.
    pub fn step(&self) -> Result<f64> {
        if self.t[0].abs() > 1e-12 {
            return invalid("time grid must start at t = 0");
        }
        if self.t.len() < 2 {
            return Ok(1.0);
        }
        let dt = self.t[1] - self.t[0];
        if !(dt > 0.0) {
            return invalid("time grid must be increasing");
        }
        for (k, w) in self.t.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
                return invalid(format!("non-uniform time grid at index {}", k + 1));
            }
        }
        Ok(dt)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// `f = i·G_R`.
pub fn positive_form(g: &TimeSeries) -> TimeSeries {
    TimeSeries { t: g.t.clone(), y: g.y.iter().map(|z| I * z).collect() }
}

/// `G_R = −i·f`.
pub fn greens_form(f: &TimeSeries) -> TimeSeries {
    TimeSeries { t: f.t.clone(), y: f.y.iter().map(|z| -I * z).collect() }
}

/// Hermitian Toeplitz Gram matrix with first column `f`.
pub fn gram(f: &[C64]) -> CMat {
    let n = f.len();
    DMatrix::from_fn(n, n, |j, k| if j >= k { f[j - k] } else { f[k - j].conj() })
}

/// Diagonal averaging: nearest Hermitian Toeplitz matrix (Frobenius), as its first column.
fn toeplitz_average(m: &CMat) -> Vec<C64> {
    let n = m.nrows();
    (0..n)
        .map(|lag| {
            let s: C64 = (0..n - lag).map(|k| m[(k + lag, k)] + m[(k, k + lag)].conj()).sum();
            let v = s / (2 * (n - lag)) as f64;
            if lag == 0 {
                C64::new(v.re, 0.0)
            } else {
                v
            }
        })
        .collect()
}

fn clip_psd(m: &CMat) -> (CMat, f64) {
    let (vals, vecs) = herm_eigen(m);
    let clipped = vals.map(|v| v.max(0.0));
    let out = &vecs * DMatrix::from_diagonal(&clipped.map(|v| C64::new(v, 0.0))) * vecs.adjoint();
    (out, vals.min())
}

/// Alternating projections between the PSD cone and Hermitian Toeplitz
/// matrices. A final diagonal lift removes any residual negative eigenvalue
/// (beyond roundoff), so the output Gram matrix is PSD and the map is idempotent.
pub fn psd_denoise(f: &TimeSeries) -> Result<TimeSeries> {
    f.step()?;
    let mut cur = f.y.clone();
    cur[0] = C64::new(cur[0].re, 0.0);
    let scale = cur.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    for _ in 0..MAX_PROJECTIONS {
        let (projected, lam_min) = clip_psd(&gram(&cur));
        if lam_min >= -PROJECTION_TOL * scale {
            break;
        }
        let next = toeplitz_average(&projected);
        let change = next.iter().zip(&cur).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        cur = next;
        if change < PROJECTION_TOL * scale {
            break;
        }
    }
    let (vals, _) = herm_eigen(&gram(&cur));
    if vals.min() < -1e-13 * scale {
        cur[0] -= vals.min();
    }
    Ok(TimeSeries { t: f.t.clone(), y: cur })
}

/// Central (maximum-determinant) extension by `n_extra` samples: Levinson
/// recursion for the predictor, new reflection coefficients set to zero. A
/// singular Gram matrix stops the recursion at its rank, where the
/// extension is unique.
pub fn psd_extend(f: &TimeSeries, n_extra: usize) -> Result<TimeSeries> {
    let dt = f.step()?;
    if n_extra == 0 {
        return Ok(f.clone());
    }
    let r = &f.y;
    let r0 = r[0].re;
    if !(r0 > 0.0) {
        return invalid("extension needs f(0) > 0; denoise first");
    }
    let tol = 1e-10;
    let mut a: Vec<C64> = vec![C64::new(1.0, 0.0)];
    let mut err = r0;
    for k in 0..r.len() - 1 {
        if err < tol * r0 {
            break;
        }
        let acc: C64 = (0..=k).map(|j| a[j] * r[k + 1 - j]).sum();
        let kappa = -acc / err;
        if kappa.norm() > 1.0 + 1e-8 {
            return invalid(format!("Gram matrix is indefinite at order {}; denoise first", k + 1));
        }
        let mut next = a.clone();
        next.push(C64::new(0.0, 0.0));
        for j in 1..=k + 1 {
            next[j] = a.get(j).copied().unwrap_or_default() + kappa * a[k + 1 - j].conj();
        }
        a = next;
        err *= 1.0 - kappa.norm_sqr();
        if err < -tol * r0 {
            return invalid("negative prediction error; denoise first");
        }
    }
    let mut y = r.clone();
    let p = a.len() - 1;
    for m in r.len()..r.len() + n_extra {
        let v: C64 = -(1..=p).map(|k| a[k] * y[m - k]).sum::<C64>();
        y.push(v);
    }
    Ok(TimeSeries::uniform(dt, y))
}

/// Damped transform on a frequency grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub value: Vec<f64>,
}

impl Spectrum {
    /// Frequency of the largest local maxima, strongest first.
    pub fn peaks(&self, count: usize) -> Vec<f64> {
        let v = &self.value;
        let mut idx: Vec<usize> = (1..v.len().saturating_sub(1)).filter(|&k| v[k] >= v[k - 1] && v[k] > v[k + 1]).collect();
        idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
        idx.into_iter().take(count).map(|k| self.omega[k]).collect()
    }

    /// Full width at half maximum of the peak nearest `omega0`.
    pub fn width_at(&self, omega0: f64) -> f64 {
        let k0 = (0..self.omega.len()).min_by(|&a, &b| (self.omega[a] - omega0).abs().total_cmp(&(self.omega[b] - omega0).abs())).unwrap_or(0);
        let half = self.value[k0] / 2.0;
        let mut lo = k0;
        while lo > 0 && self.value[lo] > half {
            lo -= 1;
        }
        let mut hi = k0;
        while hi + 1 < self.value.len() && self.value[hi] > half {
            hi += 1;
        }
        self.omega[hi] - self.omega[lo]
    }

    pub fn bin(&self) -> f64 {
        if self.omega.len() < 2 {
            0.0
        } else {
            self.omega[1] - self.omega[0]
        }
    }
}

/// `n` points spanning the Nyquist band `[−π/Δt, π/Δt)`.
pub fn frequency_grid(dt: f64, n: usize) -> Vec<f64> {
    let w = std::f64::consts::PI / dt;
    (0..n).map(|k| -w + 2.0 * w * k as f64 / n as f64).collect()
}

/// `A(ω) = (Δt/π) Re Σ_k c_k f(t_k) e^{(iω − η) t_k}` with trapezoid weights
/// (`c_0 = ½`), i.e. `−Im ∫ G_R(t) e^{iωt − ηt} dt / π`.
pub fn spectrum(f: &TimeSeries, eta: f64, omega: &[f64]) -> Result<Spectrum> {
    if !(eta >= 0.0) {
        return invalid("eta must be nonnegative");
    }
    let dt = f.step()?;
    let value = omega
        .iter()
        .map(|&w| {
            let s: C64 = f
                .y
                .iter()
                .zip(&f.t)
                .enumerate()
                .map(|(k, (y, &t))| y * C64::new(-eta * t, w * t).exp() * if k == 0 { 0.5 } else { 1.0 })
                .sum();
            dt / std::f64::consts::PI * s.re
        })
        .collect();
    Ok(Spectrum { omega: omega.to_vec(), value })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub f: f64,
    pub a: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PoleModel {
    pub poles: Vec<Pole>,
}

impl PoleModel {
    pub fn total_weight(&self) -> f64 {
        self.poles.iter().map(|p| p.a).sum()
    }

    pub fn to_lehmann(&self) -> Lehmann {
        Lehmann { poles: self.poles.iter().map(|p| p.f).collect(), weights: self.poles.iter().map(|p| p.a).collect() }
    }

    pub fn from_lehmann(l: &Lehmann) -> Self {
        Self { poles: l.poles.iter().zip(&l.weights).map(|(&f, &a)| Pole { f, a }).collect() }
    }

    /// `f(t) = Σ A e^{−i f t}`.
    pub fn evaluate(&self, t: f64) -> C64 {
        self.poles.iter().map(|p| p.a * C64::new(0.0, -p.f * t).exp()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoleOptions {
    pub max_poles: usize,
    pub amp_floor: f64,
    /// Rescale amplitudes to `Σ A = 1`.
    pub renormalize: bool,
    /// Singular values below `rank_tol · σ_max` count as noise.
    pub rank_tol: f64,
}

impl Default for PoleOptions {
    fn default() -> Self {
        Self { max_poles: 8, amp_floor: 1e-3, renormalize: false, rank_tol: 1e-9 }
    }
}

/// Lawson–Hanson nonnegative least squares.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.amax().max(1.0) * b.amax().max(1.0);
    for _ in 0..3 * n + 10 {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = a.select_columns(&idx);
            let z = sub.clone().svd(true, true).solve(b, 1e-14).unwrap_or_else(|_| DVector::zeros(idx.len()));
            if z.iter().all(|&v| v > 0.0) {
                for (p, &k) in idx.iter().enumerate() {
                    x[k] = z[p];
                }
                break;
            }
            let mut alpha = 1.0f64;
            for (p, &k) in idx.iter().enumerate() {
                if z[p] <= 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - z[p]));
                }
            }
            for (p, &k) in idx.iter().enumerate() {
                x[k] += alpha * (z[p] - x[k]);
                if x[k] <= 1e-15 {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
        }
    }
    x
}

fn refit(f: &TimeSeries, freqs: &[f64]) -> Vec<f64> {
    let n = f.len();
    let a = DMatrix::from_fn(2 * n, freqs.len(), |r, c| {
        let z = C64::new(0.0, -freqs[c] * f.t[r % n]).exp();
        if r < n {
            z.re
        } else {
            z.im
        }
    });
    let b = DVector::from_fn(2 * n, |r, _| if r < n { f.y[r].re } else { f.y[r - n].im });
    nnls(&a, &b).iter().copied().collect()
}

/// ESPRIT harmonic retrieval with unit-circle projection and an NNLS
/// amplitude refit.
pub fn extract_poles(f: &TimeSeries, opts: &PoleOptions) -> Result<PoleModel> {
    let dt = f.step()?;
    let n = f.len();
    if n < 3 || opts.max_poles == 0 {
        return invalid("pole extraction needs at least 3 samples and max_poles ≥ 1");
    }
    let rows = n.div_ceil(2);
    let cols = n - rows + 1;
    let h = DMatrix::from_fn(rows, cols, |i, j| f.y[i + j]);
    let svd = h.svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let smax = sv[order[0]];
    let numeric = order.iter().filter(|&&k| sv[k] > opts.rank_tol * smax).count();
    let mut p = numeric.min(opts.max_poles).min(rows - 1);
    if p < numeric.min(opts.max_poles) {
        warn!("Hankel system too small for {} poles; keeping {p}", numeric.min(opts.max_poles));
    }
    if p == 0 {
        p = 1;
    }
    let us = DMatrix::from_fn(rows, p, |i, c| u[(i, order[c])]);
    let top = us.rows(0, rows - 1).into_owned();
    let bot = us.rows(1, rows - 1).into_owned();
    let phi = top
        .svd(true, true)
        .solve(&bot, 1e-14)
        .map_err(|e| Error::Numerical(format!("ESPRIT least squares: {e}")))?;
    let z = phi.schur().eigenvalues().ok_or_else(|| Error::Numerical("ESPRIT eigenvalues failed".into()))?;
    let mut freqs: Vec<f64> = z.iter().map(|z| -(z / z.norm()).arg() / dt).collect();
    freqs.sort_by(f64::total_cmp);
    let mut amps = refit(f, &freqs);
    let keep: Vec<usize> = (0..freqs.len()).filter(|&k| amps[k] >= opts.amp_floor).collect();
    if keep.len() < freqs.len() {
        freqs = keep.iter().map(|&k| freqs[k]).collect();
        amps = refit(f, &freqs);
    }
    let mut poles: Vec<Pole> = freqs.into_iter().zip(amps).filter(|(_, a)| *a > 0.0).map(|(f, a)| Pole { f, a }).collect();
    if opts.renormalize {
        let s: f64 = poles.iter().map(|p| p.a).sum();
        if s > 0.0 {
            for p in &mut poles {
                p.a /= s;
            }
        }
    }
    Ok(PoleModel { poles })
}

/// `𝒢(iω_n) = Σ_r A_r / (iω_n − f_r)`.
pub fn matsubara_from_poles(model: &PoleModel, beta: f64, n_max: usize) -> Result<Vec<C64>> {
    if !(beta > 0.0) {
        return invalid("beta must be positive");
    }
    Ok(matsubara_grid(beta, n_max)
        .into_iter()
        .map(|w| model.poles.iter().map(|p| p.a / C64::new(-p.f, w)).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tones(poles: &[(f64, f64)], dt: f64, n: usize) -> TimeSeries {
        let m = PoleModel { poles: poles.iter().map(|&(f, a)| Pole { f, a }).collect() };
        TimeSeries::uniform(dt, (0..n).map(|k| m.evaluate(k as f64 * dt)).collect())
    }

    #[test]
    fn constant_series_is_a_fixed_point() {
        let f = TimeSeries::uniform(0.3, vec![C64::new(1.0, 0.0); 12]);
        assert_eq!(psd_denoise(&f).unwrap().y, f.y);
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let f = TimeSeries { t: vec![0.0, 0.1, 0.3], y: vec![C64::new(1.0, 0.0); 3] };
        assert!(psd_denoise(&f).is_err());
        assert!(TimeSeries::new(vec![0.0, 0.2, 0.3], vec![C64::default(); 3]).is_err());
    }

    #[test]
    fn extension_continues_a_cosine() {
        let w = 1.3;
        let dt = 0.2;
        let n = 16;
        let f = tones(&[(w, 0.5), (-w, 0.5)], dt, n);
        let period = (2.0 * std::f64::consts::PI / w / dt).ceil() as usize;
        let ext = psd_extend(&f, period).unwrap();
        for (k, z) in ext.y.iter().enumerate() {
            assert!((z - C64::new((w * k as f64 * dt).cos(), 0.0)).norm() < 1e-6, "k={k}");
        }
        assert_eq!(psd_extend(&f, 0).unwrap(), f);
    }

    #[test]
    fn single_pole_transforms() {
        let m = PoleModel { poles: vec![Pole { f: 0.0, a: 1.0 }] };
        let g = matsubara_from_poles(&m, 10.0, 5).unwrap();
        for (z, w) in g.iter().zip(matsubara_grid(10.0, 5)) {
            assert!((z - C64::new(0.0, -1.0 / w)).norm() < 1e-14);
        }
        let f = tones(&[(0.7, 1.0)], 0.25, 64);
        let s = spectrum(&f, 0.1, &frequency_grid(0.25, 512)).unwrap();
        assert!((s.peaks(1)[0] - 0.7).abs() <= s.bin());
    }

    #[test]
    fn nnls_clamps_negative_components() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let x = nnls(&a, &DVector::from_vec(vec![1.0, -1.0, 0.0]));
        assert!(x[1] == 0.0 && x[0] > 0.0);
    }
}
