//! End-to-end runs of the `sgs-dmft` binary.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

const MODEL: &str = r#"
[model]
n_imp = 1
n_bath = 2
u_intra = 4.0
u_inter = 4.0
eps = [[-0.8, 0.8]]
v = [[0.6, 0.6]]
half_filling = true

[grid]
n_t = 8
"#;

fn run(args: &[&str], config: &str, dir: &Path) -> (i32, Value) {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_sgs-dmft"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    let manifest = fs::read_to_string(out.join("manifest.json")).map(|s| serde_json::from_str(&s).unwrap()).unwrap_or(Value::Null);
    (status.code().unwrap(), manifest)
}

fn read_json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

#[test]
fn resources_reports_formula() {
    let d = tempfile::tempdir().unwrap();
    let (code, m) = run(&["resources"], "[resources]\nn_imp = 1\nlambda = 3\nr = 18\n", d.path());
    assert_eq!(code, 0);
    let r = read_json(d.path(), "resources.json");
    assert_eq!(r["formula"], 306);
    assert!(r["emitted"]["cnot_actual"].as_u64().unwrap() > 0);
    assert!(m["outputs"]["resources.json"].is_string());
}

#[test]
fn dmft_at_zero_interaction_converges_to_unit_weight() {
    let d = tempfile::tempdir().unwrap();
    let (code, _) = run(&["dmft"], "[grid]\nn_max = 256\n[dmft]\nu = 0.0\n", d.path());
    assert_eq!(code, 0);
    let h = read_json(d.path(), "history.json");
    let last = h.as_array().unwrap().last().unwrap();
    assert!((last["z"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(read_json(d.path(), "dmft.json")["converged"], true);
}

#[test]
fn deterministic_outputs_and_seed_dependence() {
    let digests = |cmd: &str, seed: u64| {
        let d = tempfile::tempdir().unwrap();
        let (code, m) = run(&[cmd, "--seed", &seed.to_string()], MODEL, d.path());
        assert_eq!(code, 0, "{cmd}");
        m["outputs"].clone()
    };
    assert_eq!(digests("ed", 1), digests("ed", 1));
    assert_eq!(digests("ed", 1), digests("ed", 2));
    let a = digests("sgs", 1);
    assert_eq!(a, digests("sgs", 1));
    assert_ne!(a["basis.json"], digests("sgs", 2)["basis.json"]);
}

#[test]
fn stochastic_stage_requires_seed() {
    let d = tempfile::tempdir().unwrap();
    let (code, m) = run(&["sgs"], MODEL, d.path());
    assert_eq!(code, 1);
    let last = m["stages"].as_array().unwrap().last().unwrap().clone();
    assert_eq!((last["name"].as_str(), last["status"].as_str()), (Some("select"), Some("failed")));
    assert!(m["outputs"].as_object().unwrap().is_empty());
}

#[test]
fn failed_stage_keeps_prior_outputs() {
    // An unreachable convergence target: the loop stage succeeds, outputs are
    // written, and the run exits as a numerical failure.
    let d = tempfile::tempdir().unwrap();
    let (code, m) = run(&["dmft"], "[grid]\nn_max = 64\n[dmft]\nu = 3.0\nmax_iter = 1\ntol = 1e-14\n", d.path());
    assert_eq!(code, 2);
    assert!(m["outputs"]["history.json"].is_string());
    assert!(d.path().join("out/dmft.json").exists());
}

#[test]
fn invalid_config_and_subcommand_exit_with_one() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&["ed"], "nonsense = 1\n", d.path()).0, 1);
    assert_eq!(run(&["ed"], "[grid]\nbeta = -1.0\n", d.path()).0, 1);
    let status = Command::new(env!("CARGO_BIN_EXE_sgs-dmft")).arg("bogus").status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn compress_certifies_small_circuits() {
    let d = tempfile::tempdir().unwrap();
    let (code, _) = run(&["compress"], &format!("{MODEL}\n[circuit]\nsteps = 3\n"), d.path());
    assert_eq!(code, 0);
    let c = read_json(d.path(), "certificate.json");
    assert_eq!(c["equivalent"], true);
    assert!(c["cnots_compressed"].as_u64() < c["cnots_uncompressed"].as_u64());
}

#[test]
fn greens_then_denoise_pipeline() {
    let d = tempfile::tempdir().unwrap();
    let (code, _) = run(&["greens", "--seed", "3"], MODEL, d.path());
    assert_eq!(code, 0);
    let series = d.path().join("series.csv");
    fs::copy(d.path().join("out/greens_time.csv"), &series).unwrap();
    let e = tempfile::tempdir().unwrap();
    let cfg = format!("[denoise]\ninput = {:?}\nn_extra = 20\n", series.to_str().unwrap());
    let (code, _) = run(&["denoise"], &cfg, e.path());
    assert_eq!(code, 0);
    let s = read_json(e.path(), "denoise.json");
    assert_eq!(s["n_out"], 28);
    let p = read_json(e.path(), "poles.json");
    assert!(!p["poles"].as_array().unwrap().is_empty());
}
