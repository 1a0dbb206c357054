use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_noisy-recall");

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const SMALL_SWEEP: &str = r#"
[experiment]
kind = "ser_sweep"
trials = 4

[noise]
epsilon_grid = [0.05, 0.1]
nu_grid = [0.0, 0.25]
"#;

#[test]
fn successful_run_lists_outputs_and_writes_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(&cfg, SMALL_SWEEP);
    let out = dir.path().join("out");
    let (code, stdout, stderr) = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("sweep.csv"));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("epsilon,upsilon,nu,trials,ser_mean,per_mean,mean_iterations,failure_rate\n"));
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 5);
    let manifest = std::fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("model_sha256"));
    assert!(manifest.contains("version"));
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(&cfg, SMALL_SWEEP);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let (code, _, e) = run(&["--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--workers", "1"]);
    assert_eq!(code, 0, "{e}");
    let manifest = a.join("manifest.toml");
    let (code, _, e) = run(&["--config", manifest.to_str().unwrap(), "--out", b.to_str().unwrap(), "--workers", "3"]);
    assert_eq!(code, 0, "{e}");
    for f in ["sweep.csv", "model.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(run(&["--config", missing.to_str().unwrap()]).0, 1);
    let bad = dir.path().join("bad.toml");
    write(&bad, "[experiment]\nkind = \"ser_sweep\"\nbogus = 3\n");
    assert_eq!(run(&["--config", bad.to_str().unwrap()]).0, 1);
    write(&bad, "[noise]\nepsilon_grid = [1.5]\n");
    assert_eq!(run(&["--config", bad.to_str().unwrap()]).0, 1);
    assert_eq!(run(&["--experiment", "no_such_kind"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn infeasible_generation_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    // six latent vertices offer 15 pairs for 40 neurons
    write(
        &cfg,
        "[experiment]\nkind = \"ser_sweep\"\ntrials = 1\n[generator]\nn = 40\nl = 10\nr = 0.15\nmean_cluster_size = 8.0\nmean_constraints = 2.0\n",
    );
    let out = dir.path().join("out");
    let (code, _, stderr) = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2, "{stderr}");
}

#[test]
fn unwritable_output_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(&cfg, SMALL_SWEEP);
    let blocker = dir.path().join("file");
    write(&blocker, "x");
    let out = blocker.join("sub");
    let (code, _, stderr) = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3, "{stderr}");
}

#[test]
fn tampered_manifest_hash_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(&cfg, SMALL_SWEEP);
    let a = dir.path().join("a");
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]).0, 0);
    let text = std::fs::read_to_string(a.join("manifest.toml")).unwrap();
    let line = text.lines().find(|l| l.starts_with("model_sha256")).unwrap();
    let tampered = text.replace(line, "model_sha256 = \"00\"");
    let m = dir.path().join("m.toml");
    write(&m, &tampered);
    assert_eq!(run(&["--config", m.to_str().unwrap(), "--out", dir.path().join("b").to_str().unwrap()]).0, 1);
}
