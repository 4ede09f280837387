//! End-to-end runs of the `voterdyn` binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use voterdyn::experiment::{EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_IO, EXIT_PASS};

const SMALL: &str = "[model]
kind = one_way
n = 10
horizon = 2

[patterns]
edge_pp = V=2; opinions=++; edges=0-1

[run]
times = 0.5, 1, 2
replications = 1
seed = 11
";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voterdyn"))
        .args(args)
        .current_dir(dir)
        .env_remove("VOTERDYN_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.ini");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn checksums(out: &Path) -> BTreeMap<String, String> {
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    serde_json::from_value(manifest["checksums"].clone()).unwrap()
}

#[test]
fn single_replication_writes_one_row_per_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = run(dir.path(), &["simulate", "--config", &config, "--out", "a"]);
    assert_eq!(
        out.status.code(),
        Some(EXIT_PASS),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("a/counts.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    for (row, t) in rows.iter().zip(["0.5", "1", "2"]) {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(&fields[..3], &["0", t, "edge_pp"]);
        fields[3].parse::<u64>().unwrap();
    }
    for name in ["estimates.jsonl", "report.txt", "manifest.json"] {
        assert!(dir.path().join("a").join(name).exists(), "{name}");
    }
}

#[test]
fn reruns_and_worker_counts_reproduce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &SMALL.replace("replications = 1", "replications = 40"));
    let a = run(
        dir.path(),
        &["simulate", "--config", &config, "--out", "a", "--workers", "1"],
    );
    let b = run(
        dir.path(),
        &["simulate", "--config", &config, "--out", "b", "--workers", "1"],
    );
    let c = run(
        dir.path(),
        &["simulate", "--config", &config, "--out", "c", "--workers", "8"],
    );
    for o in [&a, &b, &c] {
        assert_eq!(o.status.code(), Some(EXIT_PASS));
    }
    let sums = checksums(&dir.path().join("a"));
    assert_eq!(sums, checksums(&dir.path().join("b")));
    assert_eq!(sums, checksums(&dir.path().join("c")));
    assert_eq!(a.stdout, c.stdout);
    let other = run(
        dir.path(),
        &["simulate", "--config", &config, "--out", "d", "--seed", "12"],
    );
    assert_ne!(checksums(&dir.path().join("d"))["counts.csv"], sums["counts.csv"]);
    assert_eq!(other.status.code(), Some(EXIT_PASS));
}

#[test]
fn invalid_configuration_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    for (bad, diagnostic) in [
        (SMALL.replace("n = 10", "n = ten"), "line 3"),
        (SMALL.replace("horizon = 2", "horizon = 2\nlambda = 3"), "line 5"),
        (SMALL.replace("opinions=++", "opinions=+"), "line 7"),
        (SMALL.replace("times = 0.5, 1, 2", "times = 0.5, 3"), "run.times"),
    ] {
        let config = write_config(dir.path(), &bad);
        let out = run(dir.path(), &["simulate", "--config", &config, "--out", "x"]);
        assert_eq!(out.status.code(), Some(EXIT_CONFIG), "{bad}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(diagnostic), "{stderr}");
    }
}

#[test]
fn unwritable_output_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = run(dir.path(), &["simulate", "--config", &config, "--out", "blocker/out"]);
    assert_eq!(out.status.code(), Some(EXIT_IO));
    let missing = run(dir.path(), &["simulate", "--config", "no_such.ini"]);
    assert_eq!(missing.status.code(), Some(EXIT_IO));
}

#[test]
fn suites_refuse_underpowered_or_undersized_runs() {
    let dir = tempfile::tempdir().unwrap();
    let two_patterns = SMALL.replace(
        "edge_pp = V=2; opinions=++; edges=0-1",
        "edge_pp = V=2; opinions=++; edges=0-1\nedge_pm = V=2; opinions=+-; edges=0-1",
    );
    let config = write_config(
        dir.path(),
        &two_patterns.replace("replications = 1", "replications = 199"),
    );
    let out = run(dir.path(), &["fclt-check", "--config", &config, "--out", "x"]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));

    let table = "[model]\nkind = two_way\nn = 20\n[run]\ntimes = 1\nreplications = 50\ntable_sizes = 3\n";
    let config = write_config(dir.path(), table);
    let out = run(dir.path(), &["two-way-table", "--config", &config, "--out", "x"]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn failing_check_exits_with_check_code() {
    // a single table size cannot show the constants shrinking with n
    let dir = tempfile::tempdir().unwrap();
    let table = "[model]\nkind = two_way\nn = 12\n[run]\ntimes = 1\nreplications = 50\ntable_sizes = 12\n";
    let config = write_config(dir.path(), table);
    let out = run(dir.path(), &["two-way-table", "--config", &config, "--out", "t"]);
    assert_eq!(
        out.status.code(),
        Some(EXIT_CHECK_FAILED),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = fs::read_to_string(dir.path().join("t/report.txt")).unwrap();
    assert!(report.contains("FAIL"), "{report}");
}
