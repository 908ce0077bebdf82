//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Each criterion runs in isolation; errors and panics are reported as
//! failures instead of aborting the suite. Run with
//! `cargo test --release --test acceptance -- --nocapture`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use sgs_dmft::circuit::resources::single_qubit_gates;
use sgs_dmft::circuit::synth::{commutes, dense_unitary, rotation_of_dense, triangle, turnover, turnover_mirrored, ChainGate};
use sgs_dmft::circuit::{build_hadamard_test, build_trotter_circuit, cnot_count, Axis, Circuit, HadamardOptions, Matchgate, TrotterPlan};
use sgs_dmft::dmft::{self, Bath, DmftOptions, DmftRun, Solver, SolverKind};
use sgs_dmft::fgs::{pfaffian, signed_overlap, GaussianState, PairContext};
use sgs_dmft::fock::{apply_majorana, embed, ground_state, greens_matsubara, greens_time, lehmann, lehmann_from_state, FockSector, Lehmann, Spin};
use sgs_dmft::greens::{correlator_series, recombine, Engine, GreensOptions};
use sgs_dmft::linalg::{herm_eigen, phase_distance, RMat, C64};
use sgs_dmft::model::{half_filling_shift, BetheLattice, ImpurityModel};
use sgs_dmft::signal::{
    extract_poles, frequency_grid, gram, matsubara_from_poles, positive_form, psd_denoise, psd_extend, spectrum, PoleModel, PoleOptions,
    TimeSeries,
};
use sgs_dmft::simulator::{self, run, run_from, NoiseSpec, StateVector};
use sgs_dmft::subspace::{generate_pool, half_filling_content, rank_study, select_subspace, SelectOptions};

type Outcome = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

const U_DEMO: f64 = 5.337;

fn demo_model() -> ImpurityModel {
    half_filling_shift(&ImpurityModel::single(0.0, U_DEMO, &[-1.0, 0.0, 1.0], &[0.5, 0.5, 0.5]).unwrap())
}

fn random_orbitals(n: usize, k: usize, rng: &mut ChaCha8Rng) -> RMat {
    let m = RMat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q().columns(0, k).into_owned()
}

fn random_state(n: usize, nu: usize, nd: usize, rng: &mut ChaCha8Rng) -> GaussianState {
    GaussianState::from_orbitals(random_orbitals(n, nu, rng), random_orbitals(n, nd, rng)).unwrap()
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn fock_vector(s: &GaussianState) -> Vec<C64> {
    let sector = FockSector::new(s.n_orbitals(), s.n_up(), s.n_dn()).unwrap();
    embed(&sector, &s.to_fock(&sector).unwrap())
}

fn circuit_columns(c: &Circuit) -> Vec<C64> {
    (0..1usize << c.n_qubits).flat_map(|k| run_from(c, StateVector::basis(c.n_qubits, k).unwrap()).unwrap().amplitudes).collect()
}

fn demo_states(model: &ImpurityModel, seed: u64) -> (GaussianState, GaussianState) {
    let n = model.n_orbitals();
    let (nu, nd) = half_filling_content(model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_state(n, nu, nd, &mut rng), random_state(n, nu, nd, &mut rng))
}

// ---------------------------------------------------------------- 1

fn criterion_1() -> Outcome {
    let f1 = cnot_count(1, 3, 18).count;
    let f2 = cnot_count(1, 7, 6).count;
    let mut detail = format!("formula(1,3,18)={f1} formula(1,7,6)={f2};");
    let mut tallies_ok = true;
    for (lambda, r) in [(3, 3), (3, 10), (3, 18), (7, 6)] {
        let bath = Bath::initial(lambda, 1.0);
        let model = half_filling_shift(&ImpurityModel::single(0.0, U_DEMO, &bath.eps, &bath.v).map_err(err)?);
        let (a, b) = demo_states(&model, 6);
        let plan = TrotterPlan::new(0.3, r).map_err(err)?;
        let h = build_hadamard_test(&model, &a, &b, 0, 0, Some(&plan), Axis::X, HadamardOptions::default()).map_err(err)?;
        let want = cnot_count(1, lambda, r);
        let got = h.circuit.cnot_tally();
        if want.valid {
            tallies_ok &= got == want.count;
        }
        detail += &format!(" Λ={lambda} r={r}: emitted {got} vs {}{}", want.count, if want.valid { "" } else { " (outside validity)" });
    }
    Ok((f1 == 306 && f2 == 354 && tallies_ok, detail))
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gate = |q: usize, rng: &mut ChaCha8Rng| Matchgate::new(q, std::array::from_fn(|_| rng.random_range(-3.0..3.0)));
    let dense = |gs: &[Matchgate], n: usize| dense_unitary(&gs.iter().map(|g| ChainGate::Match(*g)).collect::<Vec<_>>(), n);
    let max_abs = |a: &DMatrix<C64>, b: &DMatrix<C64>| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let (mut tri, mut fuse, mut comm, mut turn) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for trial in 0..200 {
        let n = 2 + trial % 5;
        let gates: Vec<Matchgate> = (0..3 * n).map(|_| gate(rng.random_range(0..n - 1), &mut rng)).collect();
        let u = dense(&gates, n);
        let t = triangle(&rotation_of_dense(&u, n)).map_err(err)?;
        tri = tri.max(phase_distance(dense_unitary(&t, n).as_slice(), u.as_slice()));

        let q = rng.random_range(0..n - 1);
        let (a, b) = (gate(q, &mut rng), gate(q, &mut rng));
        fuse = fuse.max(max_abs(&dense(&[a, b], n), &dense(&[Matchgate::fuse(&a, &b).map_err(err)?], n)));
        if n >= 4 {
            let (a, b) = (gate(0, &mut rng), gate(2 + rng.random_range(0..n - 3), &mut rng));
            if !commutes(&a, &b) {
                return Err("disjoint pairs reported as non-commuting".into());
            }
            comm = comm.max(max_abs(&dense(&[a, b], n), &dense(&[b, a], n)));
        }
        if n >= 3 {
            let q = rng.random_range(0..n - 2);
            let (a, b, c) = (gate(q, &mut rng), gate(q + 1, &mut rng), gate(q, &mut rng));
            let (a2, b2, c2) = turnover(&a, &b, &c).map_err(err)?;
            turn = turn.max(max_abs(&dense(&[a, b, c], n), &dense(&[a2, b2, c2], n)));
            let (a, b, c) = (gate(q + 1, &mut rng), gate(q, &mut rng), gate(q + 1, &mut rng));
            let (a2, b2, c2) = turnover_mirrored(&a, &b, &c).map_err(err)?;
            turn = turn.max(max_abs(&dense(&[a, b, c], n), &dense(&[a2, b2, c2], n)));
        }
    }

    let mut trotter = 0.0f64;
    let mut mrng = ChaCha8Rng::seed_from_u64(22);
    for n_bath in 1..=3 {
        for r in 1..=5 {
            let eps: Vec<f64> = (0..n_bath).map(|_| mrng.random_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..n_bath).map(|_| mrng.random_range(0.2..1.2)).collect();
            let model = half_filling_shift(&ImpurityModel::single(0.0, 5.0, &eps, &v).map_err(err)?);
            let plan = TrotterPlan::new(0.3, r).map_err(err)?;
            let a = build_trotter_circuit(&model, &plan, true).map_err(err)?;
            let b = build_trotter_circuit(&model, &plan, false).map_err(err)?;
            let d = phase_distance(&circuit_columns(&a), &circuit_columns(&b)) / ((1usize << a.n_qubits) as f64).sqrt();
            trotter = trotter.max(d);
        }
    }
    let pass = tri < 1e-10 && fuse < 1e-10 && comm < 1e-10 && turn < 1e-10 && trotter < 1e-9;
    Ok((pass, format!("triangle {tri:.1e}, fusion {fuse:.1e}, commutation {comm:.1e}, turnover {turn:.1e}, Trotter compressed/plain {trotter:.1e}")))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut ov_err, mut mono_err, mut count) = (0.0f64, 0.0f64, 0usize);
    for n in 1..=3usize {
        for _ in 0..8 {
            let nu = rng.random_range(0..=n);
            let nd = rng.random_range(0..=n);
            let a = random_state(n, nu, nd, &mut rng);
            let b = random_state(n, nu, nd, &mut rng);
            let (fa, fb) = (fock_vector(&a), fock_vector(&b));
            ov_err = ov_err.max((signed_overlap(&a, &b).map_err(err)? - inner(&fa, &fb).re).abs());
            let ctx = PairContext::new(&a, &b).map_err(err)?;
            let m = 4 * n;
            for x in 1u64..(1 << m) {
                if x.count_ones() % 2 == 1 || x.count_ones() > 4 {
                    continue;
                }
                let mut v = fb.clone();
                for k in (0..m).rev().filter(|k| x >> k & 1 == 1) {
                    v = apply_majorana(&v, k);
                }
                mono_err = mono_err.max((ctx.monomial(x) - inner(&fa, &v)).norm());
                count += 1;
            }
        }
    }
    let mut pf_err = 0.0f64;
    for k in 1..=8usize {
        for _ in 0..10 {
            let d = 2 * k;
            let g = RMat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            let a = &g - g.transpose();
            let pf = pfaffian(&a).map_err(err)?;
            let det = a.determinant();
            pf_err = pf_err.max((pf * pf - det).abs() / det.abs().max(1.0));
        }
    }
    let pass = ov_err < 1e-10 && mono_err < 1e-10 && pf_err < 1e-8;
    Ok((pass, format!("overlap {ov_err:.1e}, {count} monomials {mono_err:.1e}, Pf²−det (rel) {pf_err:.1e}")))
}

// ---------------------------------------------------------------- 4

/// Rank fractions at the SGS accuracy threshold, single impurity.
const TABLE_FRACTION: [f64; 5] = [1.00, 0.778, 0.833, 0.090, 0.075];

fn criterion_4() -> Outcome {
    let baths = [1, 2, 3, 4, 5];
    let samples = rank_study(&baths, 10, 5.0, 1000, 1e-3, 2024).map_err(err)?;
    let accurate = samples.iter().all(|s| s.reached && s.energy_error <= 1e-3 && s.rank <= s.dim);
    let means: Vec<f64> = baths
        .iter()
        .map(|&nb| {
            let f: Vec<f64> = samples.iter().filter(|s| s.n_bath == nb).map(|s| s.fraction).collect();
            f.iter().sum::<f64>() / f.len() as f64
        })
        .collect();
    let decreasing = means.windows(2).all(|w| w[1] <= w[0]);
    let within = means.iter().zip(TABLE_FRACTION).all(|(m, t)| m / t <= 2.0 && t / m <= 2.0);
    let table: Vec<String> = means.iter().zip(TABLE_FRACTION).map(|(m, t)| format!("{m:.3}/{t:.3}")).collect();
    let max_err = samples.iter().map(|s| s.energy_error).fold(0.0, f64::max);
    Ok((
        accurate && decreasing && within,
        format!(
            "all ℰ≤1e-3: {accurate} (max {max_err:.1e}); mean fraction vs table N_B=1..5: {}; decreasing: {decreasing}; within ×2: {within}",
            table.join(", ")
        ),
    ))
}

// ---------------------------------------------------------------- 5

/// Basins of the peaks of `a` holding at least `min_weight` of the total.
fn peak_basins(a: &[f64], d_omega: f64, min_weight: f64) -> Vec<(usize, usize, usize)> {
    let total: f64 = a.iter().sum::<f64>() * d_omega;
    let mut out = Vec::new();
    for k in 1..a.len() - 1 {
        if a[k] > a[k - 1] && a[k] >= a[k + 1] {
            let mut lo = k;
            while lo > 0 && a[lo - 1] < a[lo] {
                lo -= 1;
            }
            let mut hi = k;
            while hi + 1 < a.len() && a[hi + 1] < a[hi] {
                hi += 1;
            }
            let w: f64 = a[lo..=hi].iter().sum::<f64>() * d_omega;
            if w >= min_weight * total {
                out.push((k, lo, hi));
            }
        }
    }
    out
}

fn spectral(l: &Lehmann, omega: &[f64], eta: f64) -> Vec<f64> {
    omega.iter().map(|&w| -l.freq(w, eta).im / std::f64::consts::PI).collect()
}

fn criterion_5() -> Outcome {
    let model = demo_model();
    let n = model.n_orbitals();
    let (nu, nd) = half_filling_content(&model);
    let sector = FockSector::new(n, nu, nd).map_err(err)?;
    let gs = ground_state(&model, &sector).map_err(err)?;
    let ed = lehmann(&model, &gs, 0, Spin::Up).map_err(err)?;
    let pool = generate_pool(&model, 1000, 5).map_err(err)?;
    let basis = select_subspace(&pool, &model, &SelectOptions { target: Some((gs.energy, 1e-3)), max_rank: sector.dim(), ..Default::default() })
        .map_err(err)?;
    let psi = basis.to_fock(&sector).map_err(err)?;
    let sgs = lehmann_from_state(&model, &sector, &psi, basis.energy, 0, Spin::Up).map_err(err)?;

    let d_omega = 0.01;
    let omega: Vec<f64> = (0..1601).map(|k| -8.0 + k as f64 * d_omega).collect();
    let (a_ed, a_sgs) = (spectral(&ed, &omega, 0.05), spectral(&sgs, &omega, 0.05));
    let basins = peak_basins(&a_ed, d_omega, 0.01);
    let sgs_peaks: Vec<usize> = peak_basins(&a_sgs, d_omega, 0.0).iter().map(|p| p.0).collect();
    let (mut pos_ok, mut max_shift, mut max_wrel) = (true, 0.0f64, 0.0f64);
    for &(k, lo, hi) in &basins {
        let nearest = sgs_peaks.iter().map(|&j| (omega[j] - omega[k]).abs()).fold(f64::INFINITY, f64::min);
        max_shift = max_shift.max(nearest);
        pos_ok &= nearest <= d_omega + 1e-12;
        let (we, ws): (f64, f64) = (a_ed[lo..=hi].iter().sum(), a_sgs[lo..=hi].iter().sum());
        max_wrel = max_wrel.max((ws - we).abs() / we);
    }
    let part_a = pos_ok && max_wrel <= 0.02;

    // Trotter scaling of the noiseless circuit engine against exact evolution.
    let small = select_subspace(&pool, &model, &SelectOptions { max_rank: 3, ..Default::default() }).map_err(err)?;
    let opts = GreensOptions { n_t: 20, dt: 0.3, ..Default::default() };
    let exact = recombine(&correlator_series(&model, &small.states, &opts, &Engine::PfaffianOracle).map_err(err)?, &small.alpha).map_err(err)?;
    let mut errs = Vec::new();
    for substeps in [1, 2, 4] {
        let o = GreensOptions { substeps, ..opts };
        let g = recombine(&correlator_series(&model, &small.states, &o, &Engine::Statevector).map_err(err)?, &small.alpha).map_err(err)?;
        errs.push(g.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let part_b = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    Ok((
        part_a && part_b,
        format!(
            "SGS rank {} : {} ED peaks, max shift {max_shift:.3} (bin {d_omega}), max weight diff {:.2}%; Trotter max errors {:?} → ratios {:?}",
            basis.rank(),
            basins.len(),
            100.0 * max_wrel,
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ),
    ))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let model = demo_model();
    let gs = ground_state(&model, &FockSector::half_filling(4).map_err(err)?).map_err(err)?;
    let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.3).collect();
    let f = positive_form(&TimeSeries::new(t.clone(), greens_time(&model, &gs, &t, 0, Spin::Up).map_err(err)?).map_err(err)?);
    let rms = |a: &[C64], b: &[C64]| (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() / a.len() as f64).sqrt();
    let fixed = rms(&psd_denoise(&f).map_err(err)?.y, &f.y);

    let normal = Normal::new(0.0, 0.05).map_err(err)?;
    let (mut decreases, mut idem, mut min_eig) = (true, 0.0f64, f64::INFINITY);
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noisy = TimeSeries {
            t: f.t.clone(),
            y: f.y.iter().map(|z| z + C64::new(normal.sample(&mut rng), normal.sample(&mut rng))).collect(),
        };
        let d1 = psd_denoise(&noisy).map_err(err)?;
        let d2 = psd_denoise(&d1).map_err(err)?;
        decreases &= rms(&d1.y, &f.y) < rms(&noisy.y, &f.y);
        idem = idem.max(d1.y.iter().zip(&d2.y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        min_eig = min_eig.min(herm_eigen(&gram(&d1.y)).0.min());
    }

    let atom = ImpurityModel::single(-U_DEMO / 2.0, U_DEMO, &[], &[]).map_err(err)?;
    let ags = ground_state(&atom, &FockSector::half_filling(1).map_err(err)?).map_err(err)?;
    let fa = positive_form(&TimeSeries::new(t.clone(), greens_time(&atom, &ags, &t, 0, Spin::Averaged).map_err(err)?).map_err(err)?);
    let poles = extract_poles(&fa, &PoleOptions::default()).map_err(err)?;
    let mut atom_err = if poles.poles.len() == 2 { 0.0f64 } else { f64::INFINITY };
    for (p, s) in poles.poles.iter().zip([-1.0, 1.0]) {
        atom_err = atom_err.max((p.f - s * U_DEMO / 2.0).abs()).max((p.a - 0.5).abs());
    }

    let exact = PoleModel::from_lehmann(&lehmann(&model, &gs, 0, Spin::Up).map_err(err)?);
    let a = matsubara_from_poles(&exact, 64.0, 512).map_err(err)?;
    let b = greens_matsubara(&model, &gs, 64.0, 512, 0, Spin::Up).map_err(err)?;
    let mats = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);

    let pass = fixed < 1e-9 && idem < 1e-9 && min_eig > -1e-10 && decreases && atom_err < 1e-3 && mats < 1e-8;
    Ok((
        pass,
        format!(
            "fixed point {fixed:.1e}, idempotence {idem:.1e}, min Gram eig {min_eig:.1e}, RMS decreases on 10 seeds: {decreases}, atom poles {atom_err:.1e}, Matsubara {mats:.1e}"
        ),
    ))
}

// ---------------------------------------------------------------- 7

const U_SCAN: [f64; 7] = [0.0, 1.0, 2.0, 3.0, 4.0, 4.4489, 5.337];

fn dmft_run(u: f64, kind: SolverKind) -> Result<(DmftRun, BetheLattice), String> {
    let lattice = BetheLattice::new(1.0, u, 64.0).map_err(err)?;
    let run = dmft::run_loop(&lattice, &mut Solver::new(kind), &DmftOptions::default()).map_err(err)?;
    Ok((run, lattice))
}

fn criterion_7() -> Outcome {
    let d_omega = 0.01;
    let omega: Vec<f64> = (0..1201).map(|k| -6.0 + k as f64 * d_omega).collect();
    let (mut z_ed, mut converged, mut z_diff, mut dos_l1) = (Vec::new(), true, 0.0f64, 0.0f64);
    for u in U_SCAN {
        let (ed, lat) = dmft_run(u, SolverKind::Ed)?;
        let (sgs, _) = dmft_run(u, SolverKind::sgs(1000, 7, 24))?;
        converged &= ed.converged && sgs.converged;
        z_diff = z_diff.max((ed.state.z - sgs.state.z).abs());
        let a = dmft::run_dos(&ed, &lat, &omega, 0.05, 0.0).map_err(err)?;
        let b = dmft::run_dos(&sgs, &lat, &omega, 0.05, 0.0).map_err(err)?;
        let l1 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.iter().sum::<f64>();
        dos_l1 = dos_l1.max(l1);
        z_ed.push(ed.state.z);
    }
    let unit = (z_ed[0] - 1.0).abs() < 1e-8;
    let monotone = z_ed.windows(2).all(|w| w[1] < w[0]);
    let small = z_ed[U_SCAN.len() - 1] < 0.1;
    let pass = converged && unit && monotone && small && z_diff <= 0.02 && dos_l1 <= 0.02;
    let zs: Vec<String> = U_SCAN.iter().zip(&z_ed).map(|(u, z)| format!("{u}:{z:.4}")).collect();
    Ok((
        pass,
        format!(
            "all converged {converged}; Z(U) ED [{}]; Z(0)=1 {unit}, decreasing {monotone}, small at 5.337 {small}; max |Z_ED−Z_SGS| {z_diff:.1e}, max DOS L¹ {:.2}%",
            zs.join(" "),
            100.0 * dos_l1
        ),
    ))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let model = demo_model();
    let (nu, nd) = half_filling_content(&model);
    let noise = NoiseSpec { eps_1q: 1e-4, eps_2q: 1e-3, shots: 40_000 };
    let (a, b) = demo_states(&model, 6);
    let plan = TrotterPlan::new(0.3, 18).map_err(err)?;
    let (mut within, mut worst, mut cnots) = (true, 0.0f64, 0);
    for (k, (ga, gb, axis)) in [(0, 0, Axis::X), (0, 0, Axis::Y), (1, 0, Axis::X), (1, 0, Axis::Y)].into_iter().enumerate() {
        let opts = HadamardOptions { prune: false, ..Default::default() };
        let h = build_hadamard_test(&model, &a, &b, ga, gb, Some(&plan), axis, opts).map_err(err)?;
        cnots = h.circuit.cnot_tally();
        let clean = run(&h.circuit).map_err(err)?.z_expectation(h.circuit.ancilla);
        let counts = simulator::sample(&h.circuit, &noise, 80 + k as u64).map_err(err)?;
        let kept = simulator::post_select(&counts, nu, nd).map_err(err)?;
        let raw = simulator::ancilla_z_estimate(&kept.counts, kept.total);
        let n1 = single_qubit_gates(&h.circuit);
        let est = simulator::rescale(raw, n1, cnots, noise.eps_1q, noise.eps_2q).map_err(err)?;
        let p = noise.survival(n1, cnots);
        let sigma = ((kept.acceptance - raw * raw).max(0.0) / noise.shots as f64).sqrt() / p;
        let z = (est - clean).abs() / sigma;
        worst = worst.max(z);
        within &= z <= 3.0;
    }

    // Whole workflow on a rank-2 basis: noisy shots vs noiseless circuits.
    let pool = generate_pool(&model, 1000, 5).map_err(err)?;
    let basis = select_subspace(&pool, &model, &SelectOptions { max_rank: 2, ..Default::default() }).map_err(err)?;
    let opts = GreensOptions { n_t: 20, dt: 0.3, ..Default::default() };
    let series = |engine: &Engine| -> Result<TimeSeries, String> {
        let g = recombine(&correlator_series(&model, &basis.states, &opts, engine).map_err(err)?, &basis.alpha).map_err(err)?;
        let f = positive_form(&TimeSeries::new(opts.t_grid(), g).map_err(err)?);
        psd_extend(&psd_denoise(&f).map_err(err)?, 60).map_err(err)
    };
    let clean = series(&Engine::Statevector)?;
    let noisy = series(&Engine::Shots { noise, seed: 8 })?;
    let grid = frequency_grid(opts.dt, 1024);
    let (s0, s1) = (spectrum(&clean, 0.0, &grid).map_err(err)?, spectrum(&noisy, 0.0, &grid).map_err(err)?);
    let (p0, p1) = (s0.peaks(2), s1.peaks(2));
    let shift = p0.iter().map(|x| p1.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    let peaks_ok = shift <= s0.bin() + 1e-12;
    Ok((
        within && peaks_ok,
        format!(
            "{cnots}-CNOT unpruned demo circuits: worst deviation {worst:.2}σ; dominant peaks {p0:.3?} vs {p1:.3?}, shift {shift:.3} (bin {:.3})",
            s0.bin()
        ),
    ))
}

// ----------------------------------------------------------------

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("resource formula", criterion_1),
        ("compression soundness", criterion_2),
        ("Gaussian algebra oracle", criterion_3),
        ("SGS energy accuracy", criterion_4),
        ("Green's function fidelity", criterion_5),
        ("signal processing", criterion_6),
        ("DMFT self-consistency", criterion_7),
        ("noise-mitigation chain", criterion_8),
    ];
    let mut passed = 0;
    for (k, (name, f)) in criteria.into_iter().enumerate() {
        let t0 = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(p) => (false, format!("panic: {}", p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())),
        };
        passed += ok as usize;
        println!("criterion {} [{}] {name} ({:.1}s): {detail}", k + 1, if ok { "PASS" } else { "FAIL" }, t0.elapsed().as_secs_f64());
    }
    println!("acceptance: {passed}/8 criteria pass");
}
