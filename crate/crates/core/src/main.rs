//! `sgs-dmft` command-line driver.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sgs_dmft::circuit::{build_hadamard_test, build_trotter_circuit, cnot_count, Axis, Circuit, HadamardOptions, ResourceReport, TrotterPlan};
use sgs_dmft::config::{RunConfig, RunRecorder, SolverName};
use sgs_dmft::dmft::{self, Bath, DmftOptions, Solver, SolverKind};
use sgs_dmft::fgs::GaussianState;
use sgs_dmft::fock::{self, FockSector, Lehmann};
use sgs_dmft::greens;
use sgs_dmft::linalg::{phase_distance, RMat, C64};
use sgs_dmft::model::{half_filling_shift, BetheLattice, ImpurityModel};
use sgs_dmft::signal::{self, PoleOptions, TimeSeries};
use sgs_dmft::simulator::{run_from, StateVector};
use sgs_dmft::subspace::{self, BasisFile, SgsBasis};
use sgs_dmft::{par, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "sgs-dmft", version, about = "Gaussian-subspace impurity solver and DMFT workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Seed for stochastic stages (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (overrides `workers` in the config).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Exact ground state and Green's function.
    Ed,
    /// Gaussian-subspace basis and energy-error report, or a rank sweep.
    Sgs,
    /// Green's function from SGS correlators with the configured engine.
    Greens,
    /// Compressed Trotter circuit with an equivalence certificate.
    Compress,
    /// CNOT formula against an emitted Hadamard-test circuit.
    Resources,
    /// PSD denoising, extension, spectrum and poles of a time series.
    Denoise,
    /// Bethe-lattice DMFT loop.
    Dmft,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Ed => "ed",
            Command::Sgs => "sgs",
            Command::Greens => "greens",
            Command::Compress => "compress",
            Command::Resources => "resources",
            Command::Denoise => "denoise",
            Command::Dmft => "dmft",
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if cli.output.is_some() {
        cfg.output = cli.output.clone();
    }
    cfg.validate()?;
    if let Some(w) = cfg.workers.filter(|&w| w > 0) {
        par::set_workers(w);
    }
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    let effective = serde_json::to_string(&cfg).map_err(|e| Error::Parse(e.to_string()))?;
    let mut rec = RunRecorder::new(&dir, cli.command.name(), &effective, cfg.seed)?;
    let out = match cli.command {
        Command::Ed => cmd_ed(&cfg, &mut rec),
        Command::Sgs => cmd_sgs(&cfg, &mut rec),
        Command::Greens => cmd_greens(&cfg, &mut rec),
        Command::Compress => cmd_compress(&cfg, &mut rec),
        Command::Resources => cmd_resources(&cfg, &mut rec),
        Command::Denoise => cmd_denoise(&cfg, &mut rec),
        Command::Dmft => cmd_dmft(&cfg, &mut rec),
    };
    // The manifest is written whether or not the run succeeded.
    if let Err(e) = &out {
        rec.fail("setup", e);
    }
    let manifest = rec.finish()?;
    info!("wrote {} outputs to {}", manifest.outputs.len(), dir.display());
    out
}

fn complex_csv(header: &str, x: &[f64], y: &[C64]) -> String {
    let mut s = format!("{header},re,im\n");
    for (a, b) in x.iter().zip(y) {
        let _ = writeln!(s, "{a:.12e},{:.12e},{:.12e}", b.re, b.im);
    }
    s
}

fn real_csv(header: &str, x: &[f64], y: &[f64]) -> String {
    let mut s = format!("{header}\n");
    for (a, b) in x.iter().zip(y) {
        let _ = writeln!(s, "{a:.12e},{b:.12e}");
    }
    s
}

fn half_filling_sector(model: &ImpurityModel) -> Result<FockSector> {
    let (nu, nd) = subspace::half_filling_content(model);
    FockSector::new(model.n_orbitals(), nu, nd)
}

#[derive(Serialize)]
struct EdReport {
    energy: f64,
    n_up: usize,
    n_dn: usize,
    degeneracy: usize,
    sector_dim: usize,
    lehmann: Lehmann,
}

fn cmd_ed(cfg: &RunConfig, rec: &mut RunRecorder) -> Result<()> {
    let model = cfg.model()?;
    let sector = half_filling_sector(&model)?;
    let gs = rec.stage("ground-state", |_| fock::ground_state(&model, &sector))?;
    let (orb, spin) = (cfg.greens.orbital, cfg.greens.spin);
    let l = rec.stage("lehmann", |_| fock::lehmann(&model, &gs, orb, spin))?;
    rec.stage("export", |r| {
        let t = cfg.grid.t_grid();
        let gt: Vec<C64> = t.iter().map(|&x| l.time(x)).collect();
        r.write("greens_time.csv", &greens::to_csv(&t, &gt))?;
        let wn = fock::matsubara_grid(cfg.grid.beta, cfg.grid.n_max);
        r.write("greens_matsubara.csv", &complex_csv("omega_n", &wn, &l.matsubara(cfg.grid.beta, cfg.grid.n_max)))?;
        let w = cfg.grid.omegas();
        let a: Vec<f64> = w.iter().map(|&x| -l.freq(x, cfg.grid.eta).im / std::f64::consts::PI).collect();
        r.write("spectrum.csv", &real_csv("omega,a", &w, &a))?;
        r.write_json(
            "ed.json",
            &EdReport { energy: gs.energy, n_up: gs.n_up, n_dn: gs.n_dn, degeneracy: gs.degeneracy, sector_dim: sector.dim(), lehmann: l.clone() },
        )
    })
}

#[derive(Serialize)]
struct SgsReport {
    rank: usize,
    sector_dim: usize,
    rank_fraction: f64,
    energy: f64,
    exact_energy: f64,
    energy_error: f64,
    pool_size: usize,
}

#[derive(Serialize)]
struct SweepRow {
    n_bath: usize,
    mean_fraction: f64,
    min_fraction: f64,
    max_fraction: f64,
    max_energy_error: f64,
    all_reached: bool,
}

fn build_basis(cfg: &RunConfig, model: &ImpurityModel, exact: f64) -> Result<SgsBasis> {
    if let Some(path) = &cfg.subspace.basis {
        let text = std::fs::read_to_string(path)?;
        let file: BasisFile = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        return file.to_basis(model);
    }
    let pool = subspace::generate_pool(model, cfg.subspace.pool_size, cfg.seed()?)?;
    subspace::select_subspace(&pool, model, &cfg.subspace.select_options(Some(exact)))
}

fn cmd_sgs(cfg: &RunConfig, rec: &mut RunRecorder) -> Result<()> {
    if let Some(sweep) = &cfg.sweep {
        let seed = cfg.seed()?;
        let samples = rec.stage("rank-study", |_| {
            subspace::rank_study(&sweep.n_bath, sweep.instances, sweep.u, cfg.subspace.pool_size, sweep.tol, seed)
        })?;
        return rec.stage("export", |r| {
            let mut csv = String::from("n_bath,instance,rank,dim,fraction,energy_error,reached\n");
            for s in &samples {
                let _ = writeln!(csv, "{},{},{},{},{:.6},{:.6e},{}", s.n_bath, s.instance, s.rank, s.dim, s.fraction, s.energy_error, s.reached);
            }
            r.write("rank_samples.csv", &csv)?;
            let rows: Vec<SweepRow> = sweep
                .n_bath
                .iter()
                .map(|&nb| {
                    let g: Vec<_> = samples.iter().filter(|s| s.n_bath == nb).collect();
                    let f: Vec<f64> = g.iter().map(|s| s.fraction).collect();
                    SweepRow {
                        n_bath: nb,
                        mean_fraction: f.iter().sum::<f64>() / f.len().max(1) as f64,
                        min_fraction: f.iter().copied().fold(f64::INFINITY, f64::min),
                        max_fraction: f.iter().copied().fold(0.0, f64::max),
                        max_energy_error: g.iter().map(|s| s.energy_error).fold(0.0, f64::max),
                        all_reached: g.iter().all(|s| s.reached),
                    }
                })
                .collect();
            let mut table = String::from("n_bath,mean_fraction,min_fraction,max_fraction,max_energy_error,all_reached\n");
            for w in &rows {
                let _ = writeln!(
                    table,
                    "{},{:.6},{:.6},{:.6},{:.6e},{}",
                    w.n_bath, w.mean_fraction, w.min_fraction, w.max_fraction, w.max_energy_error, w.all_reached
                );
            }
            r.write("rank_table.csv", &table)
        });
    }
    let model = cfg.model()?;
    let sector = half_filling_sector(&model)?;
    let exact = rec.stage("exact", |_| fock::ground_state(&model, &sector))?.energy;
    let basis = rec.stage("select", |_| build_basis(cfg, &model, exact))?;
    rec.stage("export", |r| {
        r.write_json("basis.json", &BasisFile::from_basis(&basis))?;
        r.write_json(
            "sgs.json",
            &SgsReport {
                rank: basis.rank(),
                sector_dim: sector.dim(),
                rank_fraction: basis.rank() as f64 / sector.dim() as f64,
                energy: basis.energy,
                exact_energy: exact,
                energy_error: subspace::energy_error(basis.energy, exact)?,
                pool_size: cfg.subspace.pool_size,
            },
        )
    })
}

fn cmd_greens(cfg: &RunConfig, rec: &mut RunRecorder) -> Result<()> {
    let model = cfg.model()?;
    let opts = cfg.greens_options();
    let engine = cfg.engine()?;
    let sector = half_filling_sector(&model)?;
    let exact = rec.stage("exact", |_| fock::ground_state(&model, &sector))?.energy;
    let basis = rec.stage("basis", |_| build_basis(cfg, &model, exact))?;
    let series = rec.stage("correlators", |_| greens::correlator_series(&model, &basis.states, &opts, &engine))?;
    rec.stage("export", |r| {
        let g = greens::recombine(&series, &basis.alpha)?;
        r.write("greens_time.csv", &greens::to_csv(&series.t_grid, &g))?;
        let blocks: &[usize] = match opts.spin {
            fock::Spin::Up => &[0],
            fock::Spin::Down => &[1],
            fock::Spin::Averaged => &[0, 1],
        };
        let jobs: Vec<_> = blocks.iter().flat_map(|&b| greens::jobs(&model, basis.rank(), &opts, b)).collect();
        r.write_json("circuits.json", &greens::circuit_manifest(&jobs, &opts))?;
        r.write_json("basis.json", &BasisFile::from_basis(&basis))
    })
}

/// Largest register for which the dense certificate is attempted.
const CERTIFY_MAX_QUBITS: usize = 12;

#[derive(Serialize)]
struct Certificate {
    n_qubits: usize,
    steps: usize,
    dt: f64,
    matchgates_compressed: usize,
    matchgates_uncompressed: usize,
    cnots_compressed: usize,
    cnots_uncompressed: usize,
    /// Frobenius distance up to global phase, per unit norm; `None` above the size limit.
    unitary_distance: Option<f64>,
    equivalent: Option<bool>,
}

fn unitary_columns(c: &Circuit) -> Result<Vec<C64>> {
    let cols: Vec<Result<Vec<C64>>> = par::map_indexed(1 << c.n_qubits, |k| Ok(run_from(c, StateVector::basis(c.n_qubits, k)?)?.amplitudes));
    Ok(cols.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

fn cmd_compress(cfg: &RunConfig, rec: &mut RunRecorder) -> Result<()> {
    let model = cfg.model()?;
    let plan = TrotterPlan::new(cfg.circuit.dt, cfg.circuit.steps)?;
    let compressed = rec.stage("compress", |_| build_trotter_circuit(&model, &plan, true))?;
    let plain = rec.stage("reference", |_| build_trotter_circuit(&model, &plan, false))?;
    let distance = rec.stage("certify", |_| {
        if compressed.n_qubits > CERTIFY_MAX_QUBITS {
            warn!("{} qubits: skipping the dense certificate", compressed.n_qubits);
            return Ok(None);
        }
        let (a, b) = (unitary_columns(&compressed)?, unitary_columns(&plain)?);
        Ok(Some(phase_distance(&a, &b) / ((1usize << compressed.n_qubits) as f64).sqrt()))
    })?;
    rec.stage("export", |r| {
        r.write("compressed.gates", &compressed.to_gatelist())?;
        r.write("uncompressed.gates", &plain.to_gatelist())?;
        r.write_json(
            "certificate.json",
            &Certificate {
                n_qubits: compressed.n_qubits,
                steps: plan.steps,
                dt: plan.dt,
                matchgates_compressed: compressed.matchgate_count(),
                matchgates_uncompressed: plain.matchgate_count(),
                cnots_compressed: compressed.cnot_tally(),
                cnots_uncompressed: plain.cnot_tally(),
                unitary_distance: distance,
                equivalent: distance.map(|d| d < 1e-9),
            },
        )
    })?;
    match distance {
        Some(d) if d >= 1e-9 => Err(Error::Numerical(format!("compressed circuit deviates by {d:.3e}"))),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct ResourcesOut {
    n_imp: usize,
    lambda: usize,
    r: usize,
    formula: usize,
    formula_valid: bool,
    /// Emitted Hadamard-test circuit (single impurity only).
    emitted: Option<ResourceReport>,
}

/// Deterministic demo: half-filled star model with `lambda` bath sites and two
/// random Slater determinants (fixed seed unless one is configured).
fn demo_hadamard(lambda: usize, r: usize, dt: f64, compressed: bool, seed: u64) -> Result<Circuit> {
    let bath = Bath::initial(lambda, 1.0);
    let model = half_filling_shift(&ImpurityModel::single(0.0, 5.337, &bath.eps, &bath.v)?);
    let n = model.n_orbitals();
    let (nu, nd) = subspace::half_filling_content(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = || {
        use rand::Rng;
        let m = RMat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        GaussianState::from_hopping(&(&m + m.transpose()), nu, nd)
    };
    let (a, b) = (state()?, state()?);
    let plan = TrotterPlan::new(dt, r)?;
    Ok(build_hadamard_test(&model, &a, &b, 0, 0, Some(&plan), Axis::X, HadamardOptions { compressed, ..Default::default() })?.circuit)
}

fn cmd_resources(cfg: &RunConfig, rec: &mut RunRecorder) -> Result<()> {
    let rc = cfg.resources.ok_or_else(|| Error::Invalid("config has no [resources] section".into()))?;
    let formula = cnot_count(rc.n_imp, rc.lambda, rc.r);
    let emitted = rec.stage("emit", |_| {
        if rc.n_imp != 1 {
            return Ok(None);
        }
        let c = demo_hadamard(rc.lambda, rc.r, cfg.circuit.dt, cfg.circuit.compressed, cfg.seed.unwrap_or(0))?;
        Ok(Some((ResourceReport::of(&c, Some(formula)), c)))
    })?;
    rec.stage("export", |r| {
        if let Some((_, c)) = &emitted {
            r.write("hadamard.gates", &c.to_gatelist())?;
        }
        r.write_json(
            "resources.json",
            &ResourcesOut {
                n_imp: rc.n_imp,
                lambda: rc.lambda,
                r: rc.r,
                formula: formula.count,
                formula_valid: formula.valid,
                emitted: emitted.map(|(rep, _)| rep),
            },
        )
    })
}

#[derive(Serialize)]
struct DenoiseSummary {
    n_in: usize,
    n_out: usize,
    dt: f64,
    rms_change: f64,
    peaks: Vec<f64>,
    bin: f64,
}

fn cmd_denoise(cfg: &RunConfig, rec: &mut RunRecorder) -> Result<()> {
    let dc = &cfg.denoise;
    let path = dc.input.as_ref().ok_or_else(|| Error::Invalid("denoise.input is required".into()))?;
    let (t, g) = greens::from_csv(&std::fs::read_to_string(path)?)?;
    let raw = signal::positive_form(&TimeSeries::new(t, g)?);
    let dt = raw.step()?;
    let clean = rec.stage("project", |_| signal::psd_denoise(&raw))?;
    let extended = rec.stage("extend", |_| signal::psd_extend(&clean, dc.n_extra))?;
    let omega = signal::frequency_grid(dt, extended.len().max(256));
    let spec = rec.stage("spectrum", |_| signal::spectrum(&extended, cfg.grid.eta, &omega))?;
    let popts = PoleOptions { max_poles: dc.max_poles, amp_floor: dc.amp_floor, renormalize: dc.renormalize, ..Default::default() };
    let poles = rec.stage("poles", |_| signal::extract_poles(&clean, &popts))?;
    rec.stage("export", |r| {
        let c = signal::greens_form(&clean);
        r.write("denoised.csv", &greens::to_csv(&c.t, &c.y))?;
        let e = signal::greens_form(&extended);
        r.write("extended.csv", &greens::to_csv(&e.t, &e.y))?;
        r.write("spectrum.csv", &real_csv("omega,a", &spec.omega, &spec.value))?;
        r.write_json("poles.json", &poles)?;
        let rms = (raw.y.iter().zip(&clean.y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / raw.len() as f64).sqrt();
        r.write_json(
            "denoise.json",
            &DenoiseSummary { n_in: raw.len(), n_out: extended.len(), dt, rms_change: rms, peaks: spec.peaks(4), bin: spec.bin() },
        )
    })
}

#[derive(Serialize)]
struct DmftSummary {
    converged: bool,
    iterations: usize,
    z: f64,
    residual: f64,
    bethe_residual: f64,
    solver: SolverName,
    hopping: f64,
    u: f64,
    beta: f64,
}

fn cmd_dmft(cfg: &RunConfig, rec: &mut RunRecorder) -> Result<()> {
    let dc = cfg.dmft.as_ref().ok_or_else(|| Error::Invalid("config has no [dmft] section".into()))?;
    let lattice = BetheLattice::new(dc.hopping, dc.u, cfg.grid.beta)?;
    let kind = match dc.solver {
        SolverName::Ed => SolverKind::Ed,
        SolverName::Sgs => SolverKind::sgs(cfg.subspace.pool_size, cfg.seed()?, dc.max_rank),
    };
    let opts = DmftOptions { n_bath: dc.n_bath, n_max: cfg.grid.n_max, mixing: dc.mixing, tol: dc.tol, max_iter: dc.max_iter, ..Default::default() };
    let mut solver = Solver::new(kind);
    let run = rec.stage("loop", |_| dmft::run_loop(&lattice, &mut solver, &opts))?;
    rec.stage("export", |r| {
        r.write_json("history.json", &run.history)?;
        let w = &run.grid.omegas;
        r.write("sigma.csv", &complex_csv("omega_n", w, &run.state.sigma))?;
        r.write("g_imp.csv", &complex_csv("omega_n", w, &run.state.g_imp))?;
        r.write("g_latt.csv", &complex_csv("omega_n", w, &run.state.g_latt))?;
        let omega = cfg.grid.omegas();
        let dos = dmft::run_dos(&run, &lattice, &omega, cfg.grid.eta, opts.eps_imp)?;
        r.write("dos.csv", &real_csv("omega,dos", &omega, &dos))?;
        r.write_json(
            "dmft.json",
            &DmftSummary {
                converged: run.converged,
                iterations: run.history.len(),
                z: run.state.z,
                residual: run.state.residual,
                bethe_residual: dmft::bethe_residual(&run, dc.hopping),
                solver: dc.solver,
                hopping: dc.hopping,
                u: dc.u,
                beta: cfg.grid.beta,
            },
        )
    })?;
    if run.converged {
        Ok(())
    } else {
        Err(Error::Numerical(format!("DMFT did not converge in {} iterations (residual {:.3e})", dc.max_iter, run.state.residual)))
    }
}
