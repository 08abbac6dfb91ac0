//! End-to-end tests of the command-line surface: config parsing, CSV output,
//! Matrix Market export, and permutation exchange.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn optoss(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optoss"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_MODEL: &str = r#"
[model]
delta = -0.3
g0 = 0.2
drive = 0.15
kappa = 0.4
q_mech = 1e2
n_th = 0.7
n_cavity = 2
n_mech = 4
"#;

#[test]
fn structure_reports_golden_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let repo_config = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/structure.toml");
    let out = optoss(
        &["structure", "--config", repo_config.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("nnz      8957"), "stdout: {stdout}");
    assert!(stdout.contains("reduction"), "stdout: {stdout}");
}

#[test]
fn sweep_single_point_dense_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.toml",
        &format!(
            "{SMALL_MODEL}
[sweep]
variable = \"detuning\"
values = [0.25]
methods = [\"dense_oracle\"]
repetitions = 1
"
        ),
    );
    let out = optoss(
        &["sweep", "--config", &cfg, "--output", "out.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "csv: {csv}");
    assert!(lines[0].starts_with("sweep_value,method,fill_factor,iterations,condest,wall_time"));
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "0.25");
    assert_eq!(fields[1], "dense_oracle");
    assert_eq!(fields[3], "1", "iterations: {csv}");
    assert_eq!(fields[7], "true", "converged: {csv}");
}

#[test]
fn sweep_physics_columns_independent_of_method_order() {
    let dir = tempfile::tempdir().unwrap();
    let body = |methods: &str| {
        format!(
            "{SMALL_MODEL}
[sweep]
variable = \"detuning\"
values = [-0.5, 0.0, 0.5]
methods = {methods}
repetitions = 1

[ilu]
drop_tol = 1e-8
fill_factor = 100.0
"
        )
    };
    let cfg1 = write_config(dir.path(), "a.toml", &body("[\"direct_lu\", \"gmres_ilu_rcm\"]"));
    let cfg2 = write_config(dir.path(), "b.toml", &body("[\"gmres_ilu_rcm\", \"direct_lu\"]"));
    assert!(optoss(&["sweep", "--config", &cfg1, "--output", "a.csv"], dir.path())
        .status
        .success());
    assert!(optoss(&["sweep", "--config", &cfg2, "--output", "b.csv"], dir.path())
        .status
        .success());
    let physics = |path: &Path| -> Vec<Vec<String>> {
        let text = fs::read_to_string(path).unwrap();
        let mut rows: Vec<Vec<String>> = text
            .lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                // sweep_value, method, fill_factor, iterations, residual & structure
                vec![
                    f[0].to_string(),
                    f[1].to_string(),
                    f[2].to_string(),
                    f[3].to_string(),
                    f[7].to_string(),
                    f[9].to_string(),
                    f[10].to_string(),
                    f[11].to_string(),
                    f[12].to_string(),
                    f[13].to_string(),
                ]
            })
            .collect();
        rows.sort();
        rows
    };
    assert_eq!(
        physics(&dir.path().join("a.csv")),
        physics(&dir.path().join("b.csv")),
        "physics columns must not depend on method order"
    );
    // speedup column populated for the iterative method when direct ran
    let csv = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[1] == "gmres_ilu_rcm" {
            assert!(!f[6].is_empty(), "speedup missing: {line}");
            assert!(f[6].parse::<f64>().unwrap() > 0.0);
        }
    }
}

#[test]
fn sweep_exit_code_honors_allow_failures() {
    let dir = tempfile::tempdir().unwrap();
    // an impossible tolerance cannot converge: max_iterations = 1 with a
    // useless preconditioner
    let cfg = write_config(
        dir.path(),
        "cfg.toml",
        &format!(
            "{SMALL_MODEL}
[sweep]
variable = \"detuning\"
values = [0.1]
methods = [\"gmres_ilu_rcm\"]
repetitions = 1

[ilu]
drop_tol = 0.9
fill_factor = 1.0

[solver]
max_iterations = 1
tolerance = 1e-15
"
        ),
    );
    let out = optoss(&["sweep", "--config", &cfg, "--output", "f.csv"], dir.path());
    assert!(!out.status.success(), "non-converged sweep must exit nonzero");
    let out = optoss(
        &[
            "sweep",
            "--config",
            &cfg,
            "--output",
            "f.csv",
            "--allow-failures",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "--allow-failures must exit zero");
}

#[test]
fn solve_exports_and_permutation_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.toml", SMALL_MODEL);
    let out = optoss(
        &[
            "solve",
            "--config",
            &cfg,
            "--export-mm",
            "mm",
            "--perm-out",
            "perm.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    for name in [
        "mm/liouvillian.mtx",
        "mm/trace.mtx",
        "mm/constrained.mtx",
        "mm/constrained_rcm.mtx",
        "perm.json",
    ] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let header = fs::read_to_string(dir.path().join("mm/constrained.mtx")).unwrap();
    assert!(header.starts_with("%%MatrixMarket matrix coordinate complex general\n"));

    // feeding the emitted permutation back reproduces the observables
    let out2 = optoss(
        &["solve", "--config", &cfg, "--perm-in", "perm.json"],
        dir.path(),
    );
    assert!(out2.status.success());
    let stdout2 = String::from_utf8(out2.stdout).unwrap();
    let grab = |s: &str, tag: &str| -> String {
        s.lines()
            .find(|l| l.contains(tag))
            .unwrap_or_else(|| panic!("no '{tag}' in: {s}"))
            .split_whitespace()
            .last()
            .unwrap()
            .to_string()
    };
    let a1: f64 = grab(&stdout, "<a'a>").parse().unwrap();
    let a2: f64 = grab(&stdout2, "<a'a>").parse().unwrap();
    assert!((a1 - a2).abs() < 1e-9, "observables differ: {a1} vs {a2}");
}

#[test]
fn figure5_desk_scale_smoke() {
    // reduced phase-space run: Nc=3, Nm=60, E=0.2, n_th=2, other ratios kept
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.toml",
        r#"
[model]
delta = -0.1
g0 = 0.32
drive = 0.2
kappa = 0.05
q_mech = 1e4
n_th = 2.0
n_cavity = 3
n_mech = 60

[ilu]
drop_tol = 1e-4
fill_factor = 100.0

[figure5]
points = 101
wigner_path = "wigner.csv"
distribution_path = "distribution.csv"
"#,
    );
    let out = optoss(&["figure5", "--config", &cfg], dir.path());
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dist = fs::read_to_string(dir.path().join("distribution.csv")).unwrap();
    assert_eq!(dist.lines().count(), 61, "header + one row per Fock level");
    let wigner = fs::read_to_string(dir.path().join("wigner.csv")).unwrap();
    assert_eq!(wigner.lines().count(), 101 * 101 + 1);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("Fano factor"), "stdout: {stdout}");
}

#[test]
fn figure5_vacuum_toy_is_positive() {
    // no drive: mechanical steady state is thermal, Wigner everywhere
    // positive, negativity zero
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.toml",
        r#"
[model]
delta = -0.1
g0 = 0.1
drive = 0.0
kappa = 0.2
q_mech = 1e3
n_th = 1.0
n_cavity = 2
n_mech = 12

[figure5]
points = 101
wigner_path = "w.csv"
distribution_path = "d.csv"
"#,
    );
    let out = optoss(&["figure5", "--config", &cfg], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let neg_line = stdout
        .lines()
        .find(|l| l.contains("negativity"))
        .unwrap()
        .to_string();
    let neg: f64 = neg_line
        .split_whitespace()
        .nth(4)
        .unwrap()
        .parse()
        .unwrap();
    assert!(neg.abs() < 1e-12, "negativity {neg} for a thermal state");
}
