//! Green's-function assembly checked against dense Fock-space evolution.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgs_dmft::fgs::GaussianState;
use sgs_dmft::fock::{apply_majorana, embed, full_hamiltonian, greens_time, ground_state, FockSector, Spin};
use sgs_dmft::greens::{
    circuit_manifest, correlator_series, exact_jobs, from_csv, gaussian_jobs, jobs, recombine, to_csv, Engine, GreensOptions,
};
use sgs_dmft::linalg::{RMat, C64};
use sgs_dmft::model::{half_filling_shift, quadratic_matrix, ImpurityModel};
use sgs_dmft::simulator::NoiseSpec;
use sgs_dmft::subspace::{generate_pool, half_filling_content, select_subspace, SelectOptions};

fn model(n_bath: usize, u: f64) -> ImpurityModel {
    let eps: Vec<f64> = (0..n_bath).map(|b| -1.0 + 2.0 * b as f64 / (n_bath.max(2) - 1) as f64).collect();
    let v: Vec<f64> = (0..n_bath).map(|b| 0.5 + 0.1 * b as f64).collect();
    half_filling_shift(&ImpurityModel::single(0.0, u, &eps, &v).unwrap())
}

fn random_states(m: &ImpurityModel, k: usize, seed: u64) -> Vec<GaussianState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = m.n_orbitals();
    let (nu, nd) = half_filling_content(m);
    (0..k)
        .map(|_| {
            let a = RMat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            GaussianState::from_hopping(&(&a + a.transpose()), nu, nd).unwrap()
        })
        .collect()
}

/// `−i⟨ψ|{d(t), d†}|ψ⟩` by dense matrix exponentials over the full Fock space.
fn dense_greens(m: &ImpurityModel, psi: &[C64], t_grid: &[f64]) -> Vec<C64> {
    let h = full_hamiltonian(m).unwrap();
    let i = C64::new(0.0, 1.0);
    let d = |v: &[C64]| -> Vec<C64> {
        let (p, q) = (apply_majorana(v, 0), apply_majorana(v, 1));
        p.iter().zip(&q).map(|(a, b)| (a + i * b) / 2.0).collect()
    };
    let d_dag = |v: &[C64]| -> Vec<C64> {
        let (p, q) = (apply_majorana(v, 0), apply_majorana(v, 1));
        p.iter().zip(&q).map(|(a, b)| (a - i * b) / 2.0).collect()
    };
    let dot = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>();
    t_grid
        .iter()
        .map(|&t| {
            let u = h.map(|x| C64::new(0.0, -t * x)).exp();
            let ev = |v: Vec<C64>| -> Vec<C64> { (&u * DVector::from_vec(v)).iter().copied().collect() };
            let ut_psi = ev(psi.to_vec());
            // ⟨ψ|U† d U d†|ψ⟩ + ⟨ψ|d† U† d U|ψ⟩
            let first = dot(&ut_psi, &d(&ev(d_dag(psi))));
            let second = dot(&d(psi), &{
                let x = d(&ut_psi);
                (u.adjoint() * DVector::from_vec(x)).iter().copied().collect::<Vec<_>>()
            });
            -i * (first + second)
        })
        .collect()
}

#[test]
fn free_ground_state_matches_lehmann() {
    let m = model(3, 0.0);
    let (nu, nd) = half_filling_content(&m);
    let st = GaussianState::from_hopping(&quadratic_matrix(&m).unwrap(), nu, nd).unwrap();
    let gs = ground_state(&m, &FockSector::new(m.n_orbitals(), nu, nd).unwrap()).unwrap();
    let opts = GreensOptions { n_t: 12, ..Default::default() };
    let series = correlator_series(&m, &[st], &opts, &Engine::PfaffianOracle).unwrap();
    let g = recombine(&series, &DVector::from_element(1, 1.0)).unwrap();
    let reference = greens_time(&m, &gs, &opts.t_grid(), 0, Spin::Up).unwrap();
    for (a, b) in g.iter().zip(&reference) {
        assert!((a - b).norm() < 1e-9, "{a} vs {b}");
    }
    assert!((g[0] - C64::new(0.0, -1.0)).norm() < 1e-12);
}

#[test]
fn pfaffian_and_exact_routes_agree_without_interaction() {
    let m = model(2, 0.0);
    let states = random_states(&m, 3, 5);
    let opts = GreensOptions { n_t: 6, ..Default::default() };
    for block in 0..2 {
        let js = jobs(&m, states.len(), &opts, block);
        let a = gaussian_jobs(&m, &states, &js, opts.dt).unwrap();
        let b = exact_jobs(&m, &states, &js, opts.dt).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-9, "{x} vs {y}");
        }
    }
}

#[test]
fn sgs_recombination_matches_dense_evolution() {
    let m = model(3, 4.0);
    let pool = generate_pool(&m, 120, 3).unwrap();
    let basis = select_subspace(&pool, &m, &SelectOptions { max_rank: 4, ..Default::default() }).unwrap();
    let opts = GreensOptions { n_t: 8, ..Default::default() };
    let series = correlator_series(&m, &basis.states, &opts, &Engine::PfaffianOracle).unwrap();

    // t = 0: the anticommutator is the overlap, so iG(0) = αᵀSα = 1.
    let c0 = &series.values[0];
    let s_dev = (c0.map(|z| z.re) - &basis.s).amax() + c0.map(|z| z.im).amax();
    assert!(s_dev < 1e-10, "C(0) differs from S by {s_dev}");
    let g = recombine(&series, &basis.alpha).unwrap();
    assert!((g[0] * C64::new(0.0, 1.0) - 1.0).norm() < 1e-9);

    let sector = FockSector::new(m.n_orbitals(), basis.states[0].n_up(), basis.states[0].n_dn()).unwrap();
    let psi = embed(&sector, &basis.to_fock(&sector).unwrap());
    let reference = dense_greens(&m, &psi, &opts.t_grid());
    for (k, (a, b)) in g.iter().zip(&reference).enumerate() {
        assert!((a - b).norm() < 1e-8, "t index {k}: {a} vs {b}");
    }
}

fn max_dev(a: &[DMatrix<C64>], b: &[DMatrix<C64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).camax()).fold(0.0, f64::max)
}

#[test]
fn circuits_converge_quadratically_in_the_trotter_step() {
    let m = model(2, 3.0);
    let states = random_states(&m, 2, 9);
    let base = GreensOptions { n_t: 4, dt: 0.4, ..Default::default() };
    let exact = correlator_series(&m, &states, &base, &Engine::PfaffianOracle).unwrap();
    let err = |substeps| {
        let o = GreensOptions { substeps, ..base };
        max_dev(&correlator_series(&m, &states, &o, &Engine::Statevector).unwrap().values, &exact.values)
    };
    let (e1, e2) = (err(2), err(4));
    let ratio = e1 / e2;
    assert!(e1 > 1e-6 && (3.0..5.5).contains(&ratio), "errors {e1} {e2}, ratio {ratio}");
    assert!(max_dev(&exact.values[..1], &correlator_series(&m, &states, &base, &Engine::Statevector).unwrap().values[..1]) < 1e-10);
}

#[test]
fn noiseless_shots_estimate_statevector() {
    let m = model(2, 3.0);
    let states = random_states(&m, 2, 13);
    let opts = GreensOptions { n_t: 3, ..Default::default() };
    let sv = correlator_series(&m, &states, &opts, &Engine::Statevector).unwrap();
    let noise = NoiseSpec { eps_1q: 0.0, eps_2q: 0.0, shots: 20_000 };
    let shots = correlator_series(&m, &states, &opts, &Engine::Shots { noise, seed: 1 }).unwrap();
    let d = max_dev(&sv.values, &shots.values);
    // Each entry averages eight ±1 estimates of 20k shots.
    assert!(d < 0.03, "shot estimate off by {d}");
    assert_eq!(shots.source, "shots");
}

#[test]
fn averaged_spin_is_the_mean_of_both_channels() {
    let m = model(2, 2.0);
    let states = random_states(&m, 2, 17);
    let series = |spin| {
        let o = GreensOptions { n_t: 4, spin, ..Default::default() };
        correlator_series(&m, &states, &o, &Engine::PfaffianOracle).unwrap().values
    };
    let (up, dn, avg) = (series(Spin::Up), series(Spin::Down), series(Spin::Averaged));
    let mean: Vec<_> = up.iter().zip(&dn).map(|(a, b)| (a + b) * C64::new(0.5, 0.0)).collect();
    assert!(max_dev(&avg, &mean) < 1e-12);
}

#[test]
fn csv_round_trip_and_manifest_size() {
    let t = vec![0.0, 0.3, 0.6];
    let v = vec![C64::new(0.0, -1.0), C64::new(0.25, -0.5), C64::new(-1e-17, 3.5)];
    let (t2, v2) = from_csv(&to_csv(&t, &v)).unwrap();
    assert_eq!((t, v), (t2, v2));
    assert!(from_csv("t,re,im\n0.0,1.0\n").is_err());

    let m = model(3, 4.0);
    let opts = GreensOptions::default();
    let js = jobs(&m, 4, &opts, 0);
    assert_eq!(js.len(), 4 * 4 * 20 * 4);
    let man = circuit_manifest(&js, &opts);
    assert_eq!(man.len(), 2 * js.len());
    let groups: std::collections::BTreeSet<_> = man.iter().map(|e| (e.i, e.j, (e.t * 1e6) as i64)).collect();
    assert_eq!(groups.len(), 320);
}
