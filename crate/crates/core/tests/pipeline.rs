use std::path::{Path, PathBuf};
use std::process::Command;

use tmperc::harness::Table;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn tmperc(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_tmperc"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "tmperc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_to(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> PathBuf {
    let path = configs().join(config);
    let mut args = vec![
        sub,
        "--config",
        path.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    tmperc(&args);
    dir.join(config.trim_end_matches(".toml"))
}

#[test]
fn every_preset_parses() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        tmperc::harness::ExperimentConfig::load(&path)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let da = run_to(a.path(), "dichotomy", "smoke.toml", &["--jobs", "4"]);
    let db = run_to(b.path(), "dichotomy", "smoke.toml", &["--jobs", "1"]);
    for file in ["dichotomy_runs.csv", "dichotomy_summary.csv", "config.toml"] {
        assert_eq!(
            std::fs::read(da.join(file)).unwrap(),
            std::fs::read(db.join(file)).unwrap(),
            "{file}"
        );
    }
    let (runs, hash) = Table::load(&da.join("dichotomy_runs.csv")).unwrap();
    assert_eq!(runs.rows.len(), 2 * 2 * 2);
    assert_eq!(hash.len(), 64);
}

#[test]
fn seed_override_changes_hash_and_rows() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let da = run_to(a.path(), "dichotomy", "smoke.toml", &["--format", "jsonl"]);
    let db = run_to(
        b.path(),
        "dichotomy",
        "smoke.toml",
        &["--format", "jsonl", "--seed", "99"],
    );
    let (ta, ha) = Table::load(&da.join("dichotomy_runs.jsonl")).unwrap();
    let (tb, hb) = Table::load(&db.join("dichotomy_runs.jsonl")).unwrap();
    assert_ne!(ha, hb);
    assert_ne!(ta, tb);
}

#[test]
fn analytic_and_validate_subcommands() {
    let path = configs().join("smoke.toml");
    let out = tmperc(&["analytic", "--config", path.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# config_hash="));
    assert_eq!(text.lines().count(), 3);
    let out = tmperc(&["validate", "--instances", "50"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(",true")).count(), 2);
}

#[test]
fn bad_config_is_rejected_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[graph]\nn = 100\np = 0.1\ntemplate = { kind = \"single\" }\n[thresholds]\nkind = \"uniform\"\nr = 2\ntypo = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tmperc"))
        .args(["dichotomy", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo"));
}
