use std::path::Path;
use std::process::Command;

fn tslab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tslab"));
    c.env_remove("TSL_OUT");
    c
}

fn run(args: &[&str], out: &Path) -> i32 {
    tslab().args(args).arg("--out").arg(out).arg("--quiet").status().unwrap().code().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL_SIM: &str = "d = 2\nn = 8\nt_end = 0.5\ndt = 0.01\nsample_every = 5\n[initial]\nkind = \"random\"\nband = 2\n";

#[test]
fn spectrum_writes_csv_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["spectrum", "--nu", "1", "--kmax", "8"], dir.path()), 0);
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("k1,k2,k3,k_sq,"));
    assert_eq!(csv.lines().count(), 17usize.pow(3));
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["spectrum", "--bogus"], dir.path()), 2);
    assert_eq!(tslab().arg("frobnicate").status().unwrap().code(), Some(2));
    let cfg = write_config(dir.path(), "dt = -1.0\n");
    assert_eq!(run(&["simulate", "--config", &cfg], dir.path()), 2);
    assert_eq!(run(&["simulate", "--config", "/nonexistent/cfg.toml"], dir.path()), 2);
    assert_eq!(tslab().arg("--help").status().unwrap().code(), Some(0));
}

#[test]
fn simulate_csv_header_is_golden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_SIM);
    let out = dir.path().join("out");
    assert_eq!(run(&["simulate", "--config", &cfg], &out), 0);
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "t,energy,hminus1,dissipation,mass,momentum_1,momentum_2,max_rho,min_rho,div_v_inf,div_v_int,\
         budget_s1,budget_s2,budget_s3,budget_s4,budget_s5,budget_s6,budget_total"
    );
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.lines().all(|l| l.split(',').count() == 18));
    assert!(out.join("dat/energy.dat").exists());
    let (rho, meta) = tslab::io::read_field(&out.join("rho_final.tslf")).unwrap();
    assert_eq!(rho.grid().n(), 8);
    assert_eq!(meta.unwrap().label, "rho");
}

#[test]
fn same_seed_gives_identical_output_and_seed_matters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_SIM);
    let read = |d: &str| std::fs::read(dir.path().join(d).join("diagnostics.csv")).unwrap();
    for (d, seed) in [("a", "3"), ("b", "3"), ("c", "4")] {
        assert_eq!(run(&["simulate", "--config", &cfg, "--seed", seed], &dir.path().join(d)), 0);
    }
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn tsl_out_overrides_out() {
    let dir = tempfile::tempdir().unwrap();
    let env_out = dir.path().join("env");
    let status = tslab()
        .env("TSL_OUT", &env_out)
        .args(["spectrum", "--kmax", "2", "--quiet", "--out"])
        .arg(dir.path().join("flag"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(env_out.join("spectrum.csv").exists());
    assert!(!dir.path().join("flag").exists());
}

#[test]
fn failing_experiment_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    // resolution too coarse for the residual tolerance
    let cfg = write_config(dir.path(), "k2_max = 4\nt_end = 2.0\nsteps = 200\nn = 8\nsystem_steps = 20\n");
    assert_eq!(run(&["linear-verify", "--config", &cfg], &dir.path().join("o")), 1);
    let summary = std::fs::read_to_string(dir.path().join("o/summary.json")).unwrap();
    assert!(summary.contains("\"passed\": false"));
}

#[test]
fn small_sweep_writes_per_run_directories() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("epsilons = [2e-3, 1e-3]\ncontrol_epsilon = 1e-2\n[sim]\n{SMALL_SIM}").replace("[initial]", "[sim.initial]");
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("o");
    let code = run(&["sweep", "--config", &cfg, "--jobs", "2"], &out);
    assert!(code == 0 || code == 1);
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    for i in 0..3 {
        assert!(out.join(format!("run_{i}/diagnostics.csv")).exists());
    }
}
