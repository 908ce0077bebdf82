//! Run configuration (TOML) and reproducibility manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::fock::Spin;
use crate::greens::{Engine, GreensOptions};
use crate::model::{ImpurityModel, ModelConfig};
use crate::signal::PoleOptions;
use crate::simulator::NoiseSpec;
use crate::subspace::SelectOptions;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Required by every stochastic stage.
    pub seed: Option<u64>,
    /// Worker threads (0 or absent: all cores).
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub subspace: SubspaceConfig,
    #[serde(default)]
    pub circuit: CircuitConfig,
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub greens: GreensConfig,
    pub dmft: Option<DmftConfig>,
    #[serde(default)]
    pub denoise: DenoiseConfig,
    pub resources: Option<ResourcesConfig>,
    pub sweep: Option<SweepConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub beta: f64,
    pub n_max: usize,
    pub n_t: usize,
    pub dt: f64,
    pub eta: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { beta: 64.0, n_max: 512, n_t: 20, dt: 0.3, eta: 0.05, omega_min: -8.0, omega_max: 8.0, n_omega: 801 }
    }
}

impl GridConfig {
    pub fn omegas(&self) -> Vec<f64> {
        let n = self.n_omega.max(2);
        (0..n).map(|k| self.omega_min + (self.omega_max - self.omega_min) * k as f64 / (n - 1) as f64).collect()
    }

    pub fn t_grid(&self) -> Vec<f64> {
        (0..self.n_t).map(|k| k as f64 * self.dt).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubspaceConfig {
    pub pool_size: usize,
    pub max_rank: usize,
    pub energy_tol: f64,
    pub window: usize,
    pub cond_max: f64,
    /// Stop at this relative error against ED instead of the energy-change rule.
    pub target_tol: Option<f64>,
    /// Previously written basis to reuse.
    pub basis: Option<PathBuf>,
}

impl Default for SubspaceConfig {
    fn default() -> Self {
        let s = SelectOptions::default();
        Self {
            pool_size: crate::subspace::DEFAULT_POOL_SIZE,
            max_rank: s.max_rank,
            energy_tol: s.energy_tol,
            window: s.window,
            cond_max: s.cond_max,
            target_tol: None,
            basis: None,
        }
    }
}

impl SubspaceConfig {
    pub fn select_options(&self, exact: Option<f64>) -> SelectOptions {
        SelectOptions {
            max_rank: self.max_rank,
            energy_tol: self.energy_tol,
            window: self.window,
            cond_max: self.cond_max,
            target: self.target_tol.zip(exact).map(|(t, e)| (e, t)),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitConfig {
    pub dt: f64,
    pub steps: usize,
    pub compressed: bool,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self { dt: 0.3, steps: 18, compressed: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineName {
    Statevector,
    Shots,
    PfaffianOracle,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreensConfig {
    pub engine: EngineName,
    pub orbital: usize,
    pub spin: Spin,
    pub substeps: usize,
}

impl Default for GreensConfig {
    fn default() -> Self {
        Self { engine: EngineName::PfaffianOracle, orbital: 0, spin: Spin::Up, substeps: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverName {
    Ed,
    Sgs,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmftConfig {
    #[serde(default = "one")]
    pub hopping: f64,
    pub u: f64,
    #[serde(default = "three")]
    pub n_bath: usize,
    #[serde(default = "half")]
    pub mixing: f64,
    #[serde(default = "dmft_tol")]
    pub tol: f64,
    #[serde(default = "dmft_iter")]
    pub max_iter: usize,
    #[serde(default = "ed")]
    pub solver: SolverName,
    #[serde(default = "rank_cap")]
    pub max_rank: usize,
}

fn one() -> f64 {
    1.0
}
fn three() -> usize {
    3
}
fn half() -> f64 {
    0.5
}
fn dmft_tol() -> f64 {
    1e-5
}
fn dmft_iter() -> usize {
    300
}
fn ed() -> SolverName {
    SolverName::Ed
}
fn rank_cap() -> usize {
    24
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiseConfig {
    /// CSV with columns `t,re,im` holding `G_R(t)`.
    pub input: Option<PathBuf>,
    pub n_extra: usize,
    pub max_poles: usize,
    pub amp_floor: f64,
    pub renormalize: bool,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        let p = PoleOptions::default();
        Self { input: None, n_extra: 60, max_poles: p.max_poles, amp_floor: p.amp_floor, renormalize: p.renormalize }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourcesConfig {
    pub n_imp: usize,
    pub lambda: usize,
    pub r: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_bath: Vec<usize>,
    #[serde(default = "ten")]
    pub instances: usize,
    #[serde(default = "five")]
    pub u: f64,
    #[serde(default = "milli")]
    pub tol: f64,
}

fn ten() -> usize {
    10
}
fn five() -> f64 {
    5.0
}
fn milli() -> f64 {
    1e-3
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn model(&self) -> Result<ImpurityModel> {
        self.model.as_ref().ok_or_else(|| Error::Invalid("config has no [model] section".into()))?.to_model()
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Invalid("this stage is stochastic; set `seed`".into()))
    }

    /// Checks the fields shared by all stages.
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        let positive = [
            ("grid.beta", g.beta),
            ("grid.dt", g.dt),
            ("grid.eta", g.eta),
            ("subspace.energy_tol", self.subspace.energy_tol),
            ("subspace.cond_max", self.subspace.cond_max),
            ("circuit.dt", self.circuit.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return invalid(format!("{name} must be positive"));
            }
        }
        if let Some(t) = self.subspace.target_tol {
            if !(t > 0.0) {
                return invalid("subspace.target_tol must be positive");
            }
        }
        if let Some(d) = &self.dmft {
            if !(d.tol > 0.0) || !(d.hopping > 0.0) {
                return invalid("dmft.tol and dmft.hopping must be positive");
            }
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        if g.n_t == 0 || g.n_max == 0 || self.circuit.steps == 0 {
            return invalid("grid.n_t, grid.n_max and circuit.steps must be at least 1");
        }
        Ok(())
    }

    pub fn greens_options(&self) -> GreensOptions {
        GreensOptions {
            n_t: self.grid.n_t,
            dt: self.grid.dt,
            substeps: self.greens.substeps,
            orbital: self.greens.orbital,
            spin: self.greens.spin,
        }
    }

    pub fn engine(&self) -> Result<Engine> {
        Ok(match self.greens.engine {
            EngineName::Statevector => Engine::Statevector,
            EngineName::PfaffianOracle => Engine::PfaffianOracle,
            EngineName::Shots => Engine::Shots { noise: self.noise.unwrap_or_default(), seed: self.seed()? },
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: String,
    pub wall_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Per-run record: config hash, seeds, versions, stage timings, output digests.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub workers: usize,
    pub parallel: bool,
    pub stages: Vec<StageRecord>,
    pub outputs: BTreeMap<String, String>,
}

/// Writes outputs into a directory and keeps the manifest in step.
pub struct RunRecorder {
    dir: PathBuf,
    manifest: Manifest,
}

impl RunRecorder {
    pub fn new(dir: &Path, command: &str, config_text: &str, seed: Option<u64>) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                command: command.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                config_sha256: sha256_hex(config_text.as_bytes()),
                seed,
                workers: crate::par::workers(),
                parallel: crate::par::is_parallel(),
                stages: Vec::new(),
                outputs: BTreeMap::new(),
            },
        })
    }

    /// Runs one stage, recording its wall time and outcome.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f(self);
        let (status, error) = match &out {
            Ok(_) => ("ok", None),
            Err(e) => ("failed", Some(e.to_string())),
        };
        self.manifest.stages.push(StageRecord {
            name: name.to_string(),
            status: status.to_string(),
            wall_seconds: t0.elapsed().as_secs_f64(),
            error,
        });
        out
    }

    /// Marks a failure that happened outside any stage (e.g. configuration).
    pub fn fail(&mut self, name: &str, error: &Error) {
        if self.manifest.stages.iter().any(|s| s.status == "failed") {
            return;
        }
        self.manifest.stages.push(StageRecord {
            name: name.to_string(),
            status: "failed".to_string(),
            wall_seconds: 0.0,
            error: Some(error.to_string()),
        });
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.manifest.outputs.insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn finish(self) -> Result<Manifest> {
        let text = serde_json::to_string_pretty(&self.manifest).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(self.dir.join("manifest.json"), text + "\n")?;
        Ok(self.manifest)
    }
}
