use std::path::Path;
use std::process::{Command, Output};

use radelast::cli_io::{read_diagnostics, Manifest};

const HOMOGENEOUS: &str = r#"
tau = 1e-3
steps = 3
lambda = 1.0
[grid]
n = 16
[preset]
kind = "homogeneous"
"#;

const PERTURBED: &str = r#"
seed = 4
tau = 1e-3
steps = 5
lambda = 1.0
[grid]
n = 32
[preset]
kind = "perturbed"
modes = 2
[output]
snapshot_every = 2
"#;

fn cli(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_radelast"));
    c.current_dir(dir).args(args);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn write_config(dir: &Path, text: &str) {
    std::fs::write(dir.join("run.toml"), text).unwrap();
}

fn manifest(dir: &Path) -> Manifest {
    toml::from_str(&std::fs::read_to_string(dir.join("manifest.toml")).unwrap()).unwrap()
}

#[test]
fn homogeneous_run_keeps_energy_eight() {
    let d = tempfile::tempdir().unwrap();
    write_config(d.path(), HOMOGENEOUS);
    let o = cli(d.path(), &["--config", "run.toml", "--quiet", "run"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let diag = read_diagnostics(&d.path().join("out/diagnostics.csv")).unwrap();
    assert_eq!(diag.len(), 4);
    for r in &diag {
        assert!((r.energy - 8.0).abs() < 1e-12, "{}", r.energy);
    }
    let m = manifest(&d.path().join("out"));
    assert_eq!(m.status, "ok");
    assert_eq!(m.outputs.len(), 3);
}

#[test]
fn identical_runs_are_bit_identical() {
    let d = tempfile::tempdir().unwrap();
    write_config(d.path(), PERTURBED);
    for out in ["a", "b"] {
        let o = cli(
            d.path(),
            &["--config", "run.toml", "--out", out, "run"],
            &[],
        );
        assert!(o.status.success());
    }
    let a = std::fs::read(d.path().join("a/diagnostics.csv")).unwrap();
    let b = std::fs::read(d.path().join("b/diagnostics.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        manifest(&d.path().join("a")).outputs,
        manifest(&d.path().join("b")).outputs
    );
}

#[test]
fn seed_flag_and_env_change_the_run() {
    let d = tempfile::tempdir().unwrap();
    write_config(d.path(), PERTURBED);
    assert!(cli(
        d.path(),
        &["--config", "run.toml", "--out", "a", "run"],
        &[]
    )
    .status
    .success());
    assert!(cli(
        d.path(),
        &["--config", "run.toml", "--out", "b", "--seed", "5", "run"],
        &[]
    )
    .status
    .success());
    let o = cli(
        d.path(),
        &["--config", "run.toml", "--out", "c", "run"],
        &[("RADELAST_STEPS", "2")],
    );
    assert!(o.status.success());
    assert_eq!(manifest(&d.path().join("b")).config.seed, 5);
    assert_ne!(
        manifest(&d.path().join("a")).outputs,
        manifest(&d.path().join("b")).outputs
    );
    assert_eq!(manifest(&d.path().join("c")).steps_completed, 2);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    write_config(d.path(), HOMOGENEOUS);
    let code = |args: &[&str], env: &[(&str, &str)]| cli(d.path(), args, env).status.code();
    assert_eq!(code(&["--config", "missing.toml", "run"], &[]), Some(4));
    assert_eq!(
        code(&["--config", "run.toml", "run"], &[("RADELAST_TAU", "-1")]),
        Some(2)
    );
    assert_eq!(
        code(
            &["--config", "run.toml", "run"],
            &[("RADELAST_GRID__N", "2")]
        ),
        Some(2)
    );
    assert_eq!(code(&["run"], &[]), Some(2));
    assert_eq!(code(&["--bogus"], &[]), Some(2));
    assert_eq!(code(&["--out", "nowhere", "plot"], &[]), Some(4));
}

#[test]
fn solver_failure_keeps_completed_steps() {
    let d = tempfile::tempdir().unwrap();
    write_config(d.path(), PERTURBED);
    let o = cli(
        d.path(),
        &["--config", "run.toml", "run"],
        &[("RADELAST_SOLVER__MAX_ITERATIONS", "1")],
    );
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let m = manifest(&d.path().join("out"));
    assert_ne!(m.status, "ok");
    assert!(m.outputs.contains_key("diagnostics.csv"));
}

#[test]
fn audit_and_identity_reports() {
    let d = tempfile::tempdir().unwrap();
    let o = cli(d.path(), &["audit-model"], &[]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    assert!(!text.contains("FAIL"));

    let o = cli(d.path(), &["check-identities", "--levels", "16,32"], &[]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("null-Lagrangian 7") && text.contains("transport 1"));
}

#[test]
fn plot_writes_svg_files() {
    let d = tempfile::tempdir().unwrap();
    write_config(d.path(), PERTURBED);
    assert!(cli(d.path(), &["--config", "run.toml", "run"], &[])
        .status
        .success());
    let o = cli(d.path(), &["--config", "run.toml", "plot"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["energy.svg", "alpha.svg", "velocity.svg"] {
        let s = std::fs::read_to_string(d.path().join("out").join(f)).unwrap();
        assert!(s.starts_with("<svg"));
    }
}
