//! Circuit-level checks against dense Fock-space oracles.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgs_dmft::circuit::synth::{dense_unitary, rotation_of_dense, triangle, turnover, ChainGate};
use sgs_dmft::circuit::{build_hadamard_test, build_trotter_circuit, cnot_count, Axis, Circuit, HadamardOptions, Matchgate, TrotterPlan};
use sgs_dmft::fgs::{monomial_element, GaussianState};
use sgs_dmft::fock::{apply_majorana, embed, full_hamiltonian, FockSector};
use sgs_dmft::linalg::{phase_distance, RMat, C64};
use sgs_dmft::model::{half_filling_shift, ImpurityModel};
use sgs_dmft::simulator::{embed_fock, run, run_from, StateVector};

fn random_model(n_bath: usize, u: f64, rng: &mut ChaCha8Rng) -> ImpurityModel {
    let eps: Vec<f64> = (0..n_bath).map(|_| rng.random_range(-2.0..2.0)).collect();
    let v: Vec<f64> = (0..n_bath).map(|_| rng.random_range(0.2..1.2)).collect();
    let mut m = half_filling_shift(&ImpurityModel::single(0.0, u, &eps, &v).unwrap());
    m.nu[(0, 0)] += rng.random_range(-0.5..0.5);
    m
}

fn random_state(n: usize, n_up: usize, n_dn: usize, rng: &mut ChaCha8Rng) -> GaussianState {
    let m = RMat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    GaussianState::from_hopping(&(&m + m.transpose()), n_up, n_dn).unwrap()
}

/// Dense second-order Trotter step over the full Fock space.
fn fock_trotter(model: &ImpurityModel, dt: f64) -> DMatrix<C64> {
    let h = full_hamiltonian(model).unwrap();
    let h2 = full_hamiltonian(&model.with_u(0.0, 0.0)).unwrap();
    let h4 = &h - &h2;
    let ex = |m: &DMatrix<f64>, tau: f64| m.map(|x| C64::new(0.0, -tau * x)).exp();
    let half = ex(&h2, dt / 2.0);
    &half * ex(&h4, dt) * &half
}

fn circuit_unitary(c: &Circuit) -> Vec<Vec<C64>> {
    (0..1usize << c.n_qubits).map(|k| run_from(c, StateVector::basis(c.n_qubits, k).unwrap()).unwrap().amplitudes).collect()
}

#[test]
fn compressed_and_uncompressed_trotter_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n_bath in 1..=3 {
        for r in [1, 2, 5] {
            let model = random_model(n_bath, 5.0, &mut rng);
            let plan = TrotterPlan::new(0.3, r).unwrap();
            let a = build_trotter_circuit(&model, &plan, true).unwrap();
            let b = build_trotter_circuit(&model, &plan, false).unwrap();
            let (ua, ub) = (circuit_unitary(&a), circuit_unitary(&b));
            let flat = |u: &Vec<Vec<C64>>| u.concat();
            let d = phase_distance(&flat(&ua), &flat(&ub)) / (ua.len() as f64).sqrt();
            assert!(d < 1e-9, "N_B={n_bath} r={r}: {d}");
            let n = model.n_orbitals();
            let lam = model.lambda();
            let step = n * (n - 1) - lam * (lam - 1);
            assert_eq!(b.matchgate_count(), r * 2 * n * (n - 1));
            assert_eq!(a.matchgate_count(), n * (n - 1) + r * step);
        }
    }
}

#[test]
fn compressed_step_counts() {
    let model = random_model(3, 5.337, &mut ChaCha8Rng::seed_from_u64(2));
    let (n, lam) = (4, 3);
    for r in 1..=4 {
        let c = build_trotter_circuit(&model, &TrotterPlan::new(0.3, r).unwrap(), true).unwrap();
        let first = 2 * n * (n - 1) - lam * (lam - 1);
        let later = n * (n - 1) - lam * (lam - 1);
        assert_eq!(c.matchgate_count(), first + (r - 1) * later);
    }
}

#[test]
fn trotter_circuit_matches_fock_trotter() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n_bath in 1..=2 {
        let model = random_model(n_bath, 4.0, &mut rng);
        let n = model.n_orbitals();
        let plan = TrotterPlan::new(0.25, 3).unwrap();
        let step = fock_trotter(&model, plan.dt);
        let sector = FockSector::half_filling(n).unwrap();
        let psi = embed(&sector, &random_state(n, sector.n_up, sector.n_dn, &mut rng).to_fock(&sector).unwrap());
        let mut evolved = nalgebra::DVector::from_vec(psi.clone());
        for _ in 0..plan.steps {
            evolved = &step * evolved;
        }
        let want = embed_fock(n, evolved.as_slice()).unwrap();
        let c = build_trotter_circuit(&model, &plan, true).unwrap();
        let got = run_from(&c, embed_fock(n, &psi).unwrap()).unwrap();
        assert!(phase_distance(&got.amplitudes, &want.amplitudes) < 1e-9);
    }
}

fn exact_correlator(model: &ImpurityModel, a: &GaussianState, b: &GaussianState, ga: usize, gb: usize, plan: Option<&TrotterPlan>) -> C64 {
    let n = model.n_orbitals();
    let sector = FockSector::new(n, a.n_up(), a.n_dn()).unwrap();
    let pa = nalgebra::DVector::from_vec(embed(&sector, &a.to_fock(&sector).unwrap()));
    let pb = embed(&sector, &b.to_fock(&sector).unwrap());
    let mut right = nalgebra::DVector::from_vec(apply_majorana(&pb, gb));
    let mut left = pa;
    if let Some(p) = plan {
        let t = fock_trotter(model, p.dt);
        for _ in 0..p.steps {
            right = &t * right;
            left = &t * left;
        }
    }
    let right = apply_majorana(right.as_slice(), ga);
    left.iter().zip(&right).map(|(x, y)| x.conj() * y).sum()
}

fn circuit_correlator(model: &ImpurityModel, a: &GaussianState, b: &GaussianState, ga: usize, gb: usize, plan: Option<&TrotterPlan>, opts: HadamardOptions) -> (C64, usize) {
    let part = |axis| {
        let h = build_hadamard_test(model, a, b, ga, gb, plan, axis, opts).unwrap();
        let s = run(&h.circuit).unwrap();
        (h.sign * s.z_expectation(h.circuit.ancilla), h.circuit.cnot_tally())
    };
    let (re, cn) = part(Axis::X);
    let (im, _) = part(Axis::Y);
    (C64::new(re, im), cn)
}

#[test]
fn hadamard_test_matches_fock_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let all_opts = [
        HadamardOptions { compressed: false, absorb: false, prune: false },
        HadamardOptions { compressed: true, absorb: false, prune: false },
        HadamardOptions { compressed: true, absorb: true, prune: false },
        HadamardOptions::default(),
    ];
    for n_bath in 1..=3 {
        let model = random_model(n_bath, 5.337, &mut rng);
        let n = model.n_orbitals();
        let (nu, nd) = (n.div_ceil(2), n / 2);
        for _ in 0..2 {
            let a = random_state(n, nu, nd, &mut rng);
            let b = random_state(n, nu, nd, &mut rng);
            let plan = TrotterPlan::new(0.3, 2 + n_bath).unwrap();
            for (ga, gb) in [(0, 0), (1, 0), (0, 1), (1, 1), (2 * n, 2 * n + 1), (3, 2)] {
                let want = exact_correlator(&model, &a, &b, ga, gb, Some(&plan));
                let mut tallies = Vec::new();
                for opts in all_opts {
                    let (got, cn) = circuit_correlator(&model, &a, &b, ga, gb, Some(&plan), opts);
                    assert!((got - want).norm() < 1e-9, "N_B={n_bath} γ=({ga},{gb}) {opts:?}: {got} vs {want}");
                    tallies.push(cn);
                }
                assert!(tallies.windows(2).all(|w| w[1] <= w[0]), "{tallies:?}");
            }
            // t = 0 against the Pfaffian formula.
            for (ga, gb) in [(0usize, 1usize), (1, 0), (2, 0), (0, 0)] {
                let (got, _) = circuit_correlator(&model, &a, &a, ga, gb, None, HadamardOptions::default());
                let want = match ga.cmp(&gb) {
                    std::cmp::Ordering::Equal => C64::new(1.0, 0.0),
                    std::cmp::Ordering::Less => monomial_element(&a, &a, (1 << ga) | (1 << gb)).unwrap(),
                    std::cmp::Ordering::Greater => -monomial_element(&a, &a, (1 << ga) | (1 << gb)).unwrap(),
                };
                assert!((got - want).norm() < 1e-9, "t=0 γ=({ga},{gb}): {got} vs {want}");
            }
        }
    }
}

#[test]
fn demo_circuit_tally_against_formula() {
    let model = random_model(3, 5.337, &mut ChaCha8Rng::seed_from_u64(5));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a = random_state(4, 2, 2, &mut rng);
    let b = random_state(4, 2, 2, &mut rng);
    for r in [3, 10, 18] {
        let plan = TrotterPlan::new(0.3, r).unwrap();
        let h = build_hadamard_test(&model, &a, &b, 0, 0, Some(&plan), Axis::X, HadamardOptions::default()).unwrap();
        println!("r={r}: tally {} formula {:?}", h.circuit.cnot_tally(), cnot_count(1, 3, r));
    }
}

#[test]
fn random_matchgate_circuits_resynthesize() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for trial in 0..200 {
        let n = 2 + trial % 5;
        let gates: Vec<ChainGate> = (0..3 * n)
            .map(|_| ChainGate::Match(Matchgate::new(rng.random_range(0..n - 1), std::array::from_fn(|_| rng.random_range(-3.0..3.0)))))
            .collect();
        let u = dense_unitary(&gates, n);
        let tri = triangle(&rotation_of_dense(&u, n)).unwrap();
        assert!(phase_distance(dense_unitary(&tri, n).as_slice(), u.as_slice()) < 1e-9);
        if n >= 3 {
            let mut g = |q| Matchgate::new(q, std::array::from_fn(|_| rng.random_range(-3.0..3.0)));
            let (a, b, c) = (g(0), g(1), g(0));
            let (a2, b2, c2) = turnover(&a, &b, &c).unwrap();
            let before = dense_unitary(&[a, b, c].map(ChainGate::Match), 3);
            let after = dense_unitary(&[a2, b2, c2].map(ChainGate::Match), 3);
            assert!((before - after).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
        }
    }
}
