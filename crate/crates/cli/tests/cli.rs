use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn gradflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn info_lists_registered_names() {
    let out = gradflow(&["info"]);
    assert!(out.status.success());
    let s = text(&out.stdout);
    for name in [
        "allen-cahn",
        "cahn-hilliard",
        "cahn-hilliard-stabilized",
        "pfc",
        "sav",
        "ieq",
        "3s-sav",
        "3s-ieq",
        "3s-sav-sqrt",
        "sinprod",
        "two-bubbles",
        "random-uniform",
        "constant",
        "C = -E(phi0) - 1",
    ] {
        assert!(s.contains(name), "missing {name}");
    }
}

#[test]
fn run_writes_a_monotone_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("example1-allen-cahn.conf");
    let out = gradflow(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "grid.nx=32",
        "--set",
        "grid.ny=32",
        "--set",
        "scheme.t_end=0.0032",
        "--set",
        "output.snapshots=0.0016",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let summary = text(&out.stdout);
    assert_eq!(summary.lines().count(), 1);
    assert!(summary.contains("steps 20"), "{summary}");

    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("t,e_total,e_linear,e_nonlinear,e_modified,mass,aux,solve_count\n"));
    let e = column(&csv, "e_modified");
    assert_eq!(e.len(), 21);
    assert!(e
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-10 * w[0].abs().max(1.0)));
    let snaps: Vec<_> = std::fs::read_dir(dir.path().join("snapshots"))
        .unwrap()
        .collect();
    assert_eq!(snaps.len(), 1);
}

#[test]
fn unknown_key_is_rejected_by_name() {
    let cfg = configs().join("example1-allen-cahn.conf");
    let out = gradflow(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "epslion=0.1",
        "--dry-run",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("epslion"));
}

#[test]
fn sqrt_scheme_failure_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = gradflow(&[
        "run",
        "--set",
        "model.name=allen-cahn",
        "--set",
        "model.epsilon=0.1",
        "--set",
        "scheme.kind=3s-sav-sqrt",
        "--set",
        "scheme.dt=10",
        "--set",
        "scheme.t_end=1000",
        "--set",
        "grid.lx=2pi",
        "--set",
        "grid.ly=2pi",
        "--set",
        "grid.nx=16",
        "--set",
        "grid.ny=16",
        "--set",
        "init.preset=random-uniform",
        "--set",
        "init.mean=0",
        "--set",
        "init.amplitude=2",
        "--set",
        "init.seed=77",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.contains("radicand"), "{err}");
    assert!(err.contains("step "), "{err}");
}

#[test]
fn dry_run_prints_resolved_constant() {
    let cfg = configs().join("example2-bubbles.conf");
    let out = gradflow(&["run", "--config", cfg.to_str().unwrap(), "--dry-run"]);
    assert!(out.status.success());
    let s = text(&out.stdout);
    assert!(s.contains("auto C = -E(phi0) - 1 ->"), "{s}");
    assert!(s.contains("steps = 3800"));
}

#[test]
fn single_dt_study_prints_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("example1-allen-cahn.conf");
    let out = gradflow(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "grid.nx=16",
        "--set",
        "grid.ny=16",
        "--set",
        "scheme.t_end=0.0032",
        "--dts",
        "1.6e-4",
        "--ref-dt",
        "1e-5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "dt,l2_error,rate,wall_time_s,solves_per_step");
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').nth(2), Some(""));
    assert!(text(&out.stdout).contains("1.600e-4"));
}

#[test]
fn converge_rejects_bad_reference() {
    let cfg = configs().join("example1-allen-cahn.conf");
    let out = gradflow(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--dts",
        "1e-4",
        "--ref-dt",
        "1e-3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

fn compare(schemes: &str, dir: &Path) -> String {
    let cfg = configs().join("example1-allen-cahn.conf");
    let out = gradflow(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "grid.nx=32",
        "--set",
        "grid.ny=32",
        "--set",
        "scheme.t_end=0.0032",
        "--schemes",
        schemes,
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    text(&out.stdout)
}

#[test]
fn self_comparison_has_no_discrepancy() {
    let dir = tempfile::tempdir().unwrap();
    let s = compare("3s-sav,3s-sav", dir.path());
    assert!(
        s.contains("max relative energy discrepancy 0.000000e0"),
        "{s}"
    );
    assert!(dir.path().join("a_3s-sav/trace_a_3s-sav.csv").exists());
    assert!(dir.path().join("b_3s-sav/trace_b_3s-sav.csv").exists());
    assert!(dir.path().join("compare.txt").exists());
}

#[test]
fn sav_needs_twice_the_solves() {
    let dir = tempfile::tempdir().unwrap();
    let s = compare("sav,3s-sav", dir.path());
    assert!(s.contains("solves per step 2.000 vs 1.000"), "{s}");
    assert!(s.contains("ratio"));
}

#[test]
fn config_files_resolve() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let out = gradflow(&["run", "--config", path.to_str().unwrap(), "--dry-run"]);
        assert!(
            out.status.success(),
            "{}: {}",
            path.display(),
            text(&out.stderr)
        );
    }
}

#[test]
fn usage_errors() {
    assert_eq!(gradflow(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(gradflow(&["run", "--set", "oops"]).status.code(), Some(2));
    let missing = gradflow(&["run", "--config", "/nonexistent/file.conf"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(gradflow(&["--help"]).status.success());
}
