use std::fs::{self, File};
use std::path::Path;
use std::process::Command;

use laminate_hum::export::read_csv;
use laminate_hum_cli::{cmd_control, cmd_observability, cmd_simulate, cmd_sweep, CliError, RunConfig};
use serde_json::Value;

fn resolved(toml: &str) -> laminate_hum_cli::Resolved {
    RunConfig::from_toml(toml).unwrap().resolve().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_reader(File::open(path).unwrap()).unwrap()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (_, cols, rows) = read_csv(File::open(path).unwrap()).unwrap();
    let i = cols.iter().position(|c| c == name).unwrap();
    rows.iter().map(|r| r[i]).collect()
}

#[test]
fn simulate_zero_data_gives_zero_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("n = 16\nnt = 200\ninitial = \"zero\"\n");
    let out = cmd_simulate(&r, dir.path()).unwrap();
    assert_eq!(out.files.len(), 2);
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["relative_drift"].as_f64().unwrap(), 0.0);
    assert!(column(&dir.path().join("trajectory.csv"), "energy").iter().all(|&e| e == 0.0));
    assert!(column(&dir.path().join("trajectory.csv"), "w_L").iter().all(|&e| e == 0.0));
}

#[test]
fn simulate_mode_one_conserves_energy() {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("initial = \"mode:1\"\n");
    cmd_simulate(&r, dir.path()).unwrap();
    let s = json(&dir.path().join("summary.json"));
    assert!(s["relative_drift"].as_f64().unwrap() <= 1e-10);
    assert_eq!(s["format_version"], 1);
    assert_eq!(s["config"]["initial"], "mode:1");
}

#[test]
fn simulate_damped_energy_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("n = 16\nbeta = 0.5\ndamped = true\ninitial = \"random\"\nseed = 3\n");
    cmd_simulate(&r, dir.path()).unwrap();
    let e = column(&dir.path().join("trajectory.csv"), "energy");
    assert!(e.windows(2).all(|w| w[1] <= w[0]));
    assert!(e.last().unwrap() < &e[0]);
    assert_eq!(json(&dir.path().join("summary.json"))["energy_non_increasing"], true);
}

#[test]
fn simulate_writes_snapshot_and_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("n = 8\nnt = 20\nsnapshot = true\nexport_matrices = true\n");
    let out = cmd_simulate(&r, dir.path()).unwrap();
    assert_eq!(out.files.len(), 7);
    let snap = laminate_hum::export::read_snapshot(&mut File::open(dir.path().join("snapshot.bin")).unwrap()).unwrap();
    assert_eq!(snap.n, 8);
    assert_eq!(snap.states.len(), 21);
    let mass = fs::read_to_string(dir.path().join("mass.mtx")).unwrap();
    assert!(mass.starts_with("%%MatrixMarket matrix coordinate real symmetric"));
}

#[test]
fn observability_single_mode_is_scalar_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("n = 16\nm = 1\nnt = 400\nsamples = 4\n");
    cmd_observability(&r, dir.path()).unwrap();
    let rep = json(&dir.path().join("observability.json"));
    assert_eq!(rep["scalar_consistency"], true);
    assert!(rep["mu_min"].as_f64().unwrap() > 0.0);
    assert_eq!(column(&dir.path().join("samples.csv"), "index").len(), 4);
}

#[test]
fn observability_default_is_positive() {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("n = 16\nnt = 800\nsamples = 4\n");
    cmd_observability(&r, dir.path()).unwrap();
    let rep = json(&dir.path().join("observability.json"));
    assert!(rep["mu_min"].as_f64().unwrap() > 0.0);
    assert_eq!(rep["positive"], true);
}

#[test]
fn observability_rejects_zero_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("n = 16\ngamma = 0.0\n");
    let err = cmd_observability(&r, dir.path()).unwrap_err();
    assert!(matches!(err, CliError::Core(laminate_hum::Error::PhaseSpace)), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn control_lowest_mode_reaches_rest() {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("initial = \"mode:1\"\nm = 10\nnt = 1000\n");
    cmd_control(&r, dir.path()).unwrap();
    let d = json(&dir.path().join("diagnostics.json"));
    assert_eq!(d["converged"], true);
    let ratio = d["final_filtered_energy"].as_f64().unwrap() / d["initial_energy"].as_f64().unwrap();
    assert!(ratio <= 1e-6, "{ratio}");
    assert!(d["filtered_ratio"].as_f64().unwrap() <= 1e-6);
    let u1 = column(&dir.path().join("controls.csv"), "u1");
    assert_eq!(u1.len(), 1001);
}

#[test]
fn control_iteration_cap_fails_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("n = 16\nnt = 400\nmax_iter = 1\n");
    let err = cmd_control(&r, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let d = json(&dir.path().join("diagnostics.json"));
    assert_eq!(d["converged"], false);
    assert_eq!(d["iterations"], 1);
    assert!(dir.path().join("controls.csv").exists());
    assert!(dir.path().join("trajectory.csv").exists());
}

#[test]
fn control_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let r = resolved("n = 16\nnt = 400\nseed = 11\n");
    let fa = cmd_control(&r, a.path()).unwrap();
    cmd_control(&r, b.path()).unwrap();
    for f in &fa.files {
        let name = f.file_name().unwrap();
        assert_eq!(fs::read(f).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?}");
    }
}

#[test]
fn single_cell_sweep_matches_control() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let r = resolved("n = 16\nnt = 400\nseed = 5\nsweep_n = [16]\n");
    cmd_control(&r, a.path()).unwrap();
    let (_, rows) = cmd_sweep(&r, b.path()).unwrap();
    assert_eq!(rows.len(), 1);
    let v = rows[0].result.as_ref().unwrap();
    let d = json(&a.path().join("diagnostics.json"));
    assert_eq!(v.control_norm, d["control_norm"].as_f64().unwrap());
    assert_eq!(v.mu_min, d["mu_min"].as_f64().unwrap());
    assert_eq!(v.filtered_ratio, d["filtered_ratio"].as_f64().unwrap());
    assert_eq!(v.cg_iterations as u64, d["iterations"].as_u64().unwrap());
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(b.path().join("sweep.csv"))
        .unwrap();
    let rec = rd.records().next().unwrap().unwrap();
    assert_eq!(&rec[6], "ok");
    assert_eq!(rec[11].parse::<f64>().unwrap(), v.control_norm);
}

#[test]
fn sweep_records_failing_cells_and_keeps_order() {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("n = 8\nnt = 200\nsweep_gamma = [1.0, 0.0, 2.0]\n");
    let (_, rows) = cmd_sweep(&r, dir.path()).unwrap();
    assert_eq!(rows.iter().map(|r| r.cell).collect::<Vec<_>>(), vec![0, 1, 2]);
    assert!(rows[0].result.is_ok());
    assert!(rows[1].result.is_err());
    assert!(rows[2].result.is_ok());
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains(",error,")).count(), 1);
}

#[test]
fn sweep_refinement_keeps_observability_constant() {
    let dir = tempfile::tempdir().unwrap();
    let r = resolved("m = 10\nnt = 1000\nsweep_n = [32, 64]\n");
    let (_, rows) = cmd_sweep(&r, dir.path()).unwrap();
    let c: Vec<f64> = rows.iter().map(|r| r.result.as_ref().unwrap().c_obs).collect();
    assert!((c[0] - c[1]).abs() / c[1] <= 0.2, "{c:?}");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_laminate-hum"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "n = 8\nnt = 100\ngamma = 0.0\n").unwrap();
    let out = dir.path().join("out");

    let st = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(out.join("trajectory.csv").exists());

    let st = bin().args(["observability", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(2));

    let st = bin().args(["simulate", "--n", "2", "--out"]).arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(2));

    let st = bin()
        .args(["control", "--n", "8", "--nt", "100", "--max-iter", "1", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(3));
    assert!(out.join("diagnostics.json").exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "n = 8\nnt = 100\nseed = 1\n").unwrap();
    let out = dir.path().join("out");
    let st = bin()
        .args(["simulate", "--n", "12", "--seed", "4", "--T", "0.5", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let s = json(&out.join("summary.json"));
    assert_eq!(s["config"]["n"], "12");
    assert_eq!(s["config"]["seed"], "4");
    assert_eq!(s["n"], 12);
    assert_eq!(s["horizon"], 0.5);
}
