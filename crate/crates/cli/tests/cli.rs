use std::path::Path;
use std::process::Command as Proc;

use epilab::engine::{synth_saturating_trace, DecayParams};
use epilab_cli::config::{Command, ExperimentConfig};
use epilab_cli::{exit_code, run, RunManifest, RunReport};

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_epilab"))
}

fn write_trace(dir: &Path) -> std::path::PathBuf {
    let p = DecayParams::new(1.0, 1.0, 0.0, 1.0).with_range(1e-3, 1.0);
    let t = synth_saturating_trace(&p, 0.2, 60).unwrap();
    let path = dir.join("trace.csv");
    t.write_csv_path(&path).unwrap();
    path
}

#[test]
fn derive_constants_prints_one_twelfth() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["derive-constants", "--c-e", "1", "--epsilon", "1", "--gamma", "0", "--alpha", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("δ = 1/12"));
}

#[test]
fn verify_trace_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(Command::VerifyTrace);
    cfg.trace = Some(write_trace(dir.path()));
    cfg.out = Some(dir.path().join("runs/vt"));
    let m = run(&cfg).unwrap();
    assert!(m.pass);
    assert!(m.verify(&dir.path().join("runs/vt")).unwrap().is_empty());
    let r = RunReport::read(&dir.path().join("runs/vt/report.json")).unwrap();
    let names: Vec<&str> = r.series.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["G_observed", "G_bound"]);

    let mut agg = ExperimentConfig::new(Command::Report);
    agg.reports = Some(dir.path().join("runs"));
    agg.out = Some(dir.path().join("plots"));
    let m = run(&agg).unwrap();
    assert_eq!(m.artifacts.len(), 4);
    let traces = std::fs::read_to_string(dir.path().join("plots/traces.csv")).unwrap();
    let series: std::collections::BTreeSet<&str> =
        traces.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(series.into_iter().collect::<Vec<_>>(), ["G_bound", "G_observed"]);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let trace = write_trace(dir.path());
    let mut sums = Vec::new();
    for k in 0..2 {
        let mut cfg = ExperimentConfig::new(Command::VerifyTrace);
        cfg.trace = Some(trace.clone());
        cfg.seed = 11;
        cfg.out = Some(dir.path().join(format!("run{k}")));
        let m = run(&cfg).unwrap();
        sums.push(m.artifacts);
    }
    assert_eq!(sums[0], sums[1]);
}

#[test]
fn epi_sweep_has_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cone.json"), r#"{"theta_e": 0.0, "n_theta": 128}"#).unwrap();
    std::fs::write(dir.path().join("pert.json"), r#"{"modes": [{"k": 2, "c": 0.05}]}"#).unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args(["epi-check", "--cone", "cone.json", "--perturbation", "pert.json", "--rho", "0.25,0.5,0.75", "--out", "epi"])
        .output()
        .unwrap();
    // ρ = 1/2 and 3/4 fall short of the default ε_min
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let r = RunReport::read(&dir.path().join("epi/report.json")).unwrap();
    assert_eq!(r.epsilon.len(), 3);
    let third = r.values["outer_ratio_no_cutoff"].unwrap();
    assert!((third - 1.0 / 3.0).abs() < 1e-3);
    let eps: Vec<f64> = r.epsilon.iter().map(|e| e.epsilon.unwrap()).collect();
    assert!(eps[0] > 0.2 && eps[1] > 0.0 && eps[2] < 0.0, "{eps:?}");
}

#[test]
fn loja_flow_case_tag() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["loja-flow", "--objective", "model:1", "--start", "0.1", "--b", "0.25", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = RunReport::read(&dir.path().join("report.json")).unwrap();
    assert_eq!(r.tags["case"], "PositiveLong");
    assert!(r.series.iter().any(|s| s.name == "decrease"));
    let out = bin().args(["loja-flow", "--objective", "model:x", "--start", "0.1"]).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn obstacle_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("family.json");
    std::fs::write(&fam, r#"{"n": 256, "profile": {"rank_one": 0.0}, "members": [[[2, 0.0, 0.01]], [[3, 0.004, 0.0], [1, 0.0, 0.01]]]}"#).unwrap();
    let mut cfg = ExperimentConfig::new(Command::ObstacleCheck);
    cfg.family = Some(fam);
    cfg.out = Some(dir.path().join("ob"));
    let m = run(&cfg).unwrap();
    assert!(m.pass);
    cfg.d = Some(3);
    let r = run(&cfg);
    assert_eq!(exit_code(&r), 2);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "command = \"derive-constants\"\nsmoothing = 3\n").unwrap();
    let out = bin().arg("run").arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("smoothing"));
    std::fs::write(&path, "command = \"verify-trace\"\ntrace = \"missing.csv\"\n").unwrap();
    let out = bin().arg("run").arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`trace`"));
}

#[test]
fn env_overrides_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "command = \"derive-constants\"\nout = \"from-file\"\n").unwrap();
    let out = bin().arg("run").arg("--config").arg(&cfg).env("EPILAB_OUT", &target).env("EPILAB_THREADS", "1").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("manifest.json").exists());
    assert!(!dir.path().join("from-file").exists());
    let m: RunManifest = serde_json::from_str(&std::fs::read_to_string(target.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.config.threads, Some(1));
}

#[test]
fn ac_run_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let n = 32;
    let mut text = String::from("theta,u\n");
    for j in 0..n {
        let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let c = th.cos();
        text += &format!("{th},{}\n", if c > 1e-13 { c } else { 0.0 });
    }
    std::fs::write(dir.path().join("b.csv"), text).unwrap();
    let cfg_path = dir.path().join("ac.toml");
    std::fs::write(&cfg_path, "command = \"ac-run\"\nboundary = \"b.csv\"\nout = \"ac\"\nrestarts = 1\nseed = 5\nsamples = 12\nr_lo = 0.05\n").unwrap();
    let m = run(&ExperimentConfig::from_path(&cfg_path).unwrap()).unwrap();
    let names: Vec<&str> = m.artifacts.iter().map(|a| a.path.as_str()).collect();
    assert_eq!(names, ["field.txt", "free_boundary.csv", "report.json", "trace.csv"]);
    let r = RunReport::read(&dir.path().join("ac/report.json")).unwrap();
    assert_eq!(r.seed, 5);
    assert_eq!(r.values["hausdorff_cells"], Some(0.0));
    assert!(m.pass, "{:?}", r.checks);
}
