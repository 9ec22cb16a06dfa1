//! End-to-end CLI checks: exit codes, idempotent scans, pipeline
//! determinism of the persisted CSV/JSON bytes.

use std::path::Path;
use std::process::Command;

fn lfunc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lfunc"))
}

fn run_in(dir: &Path, args: &[&str]) -> std::process::Output {
    lfunc()
        .args(["--store", dir.join("scans").to_str().unwrap()])
        .args(["--out", dir.join("out").to_str().unwrap()])
        .args(args)
        .output()
        .expect("spawn lfunc")
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    // Unknown family: validation error (1).
    let out = run_in(t.path(), &["scan", "nofamily", "--x", "10"]);
    assert_eq!(out.status.code(), Some(1), "{:?}", out);
    // Empty elliptic window: validation error (1).
    let out = run_in(t.path(), &["scan", "elliptic", "--x", "27"]);
    assert_eq!(out.status.code(), Some(1));
    // Missing ingest file: validation error (1).
    let out = run_in(t.path(), &["ingest", "/nonexistent.csv"]);
    assert_eq!(out.status.code(), Some(1));
    // Happy path: 0.
    let out = run_in(t.path(), &["scan", "dirichlet", "--x", "30"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn scan_cache_hit() {
    let t = tempfile::tempdir().unwrap();
    let first = run_in(t.path(), &["scan", "dihedral", "--x", "2000"]);
    assert!(first.status.success());
    assert!(String::from_utf8_lossy(&first.stdout).contains("computed"));
    let second = run_in(t.path(), &["scan", "dihedral", "--x", "2000"]);
    assert!(String::from_utf8_lossy(&second.stdout).contains("cached"));
}

#[test]
fn pipeline_is_byte_deterministic() {
    let t1 = tempfile::tempdir().unwrap();
    let t2 = tempfile::tempdir().unwrap();
    for t in [&t1, &t2] {
        let out = run_in(t.path(), &["--seed", "5", "scan", "elliptic", "--x", "5000"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let out = run_in(t.path(), &["--seed", "5", "simulate", "lemma5", "--trials", "20000"]);
        assert!(out.status.success());
        let out = run_in(t.path(), &["--seed", "5", "simulate", "xsum", "--trials", "500", "--s", "0.8"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    // Compare every CSV/JSON byte-for-byte across the two runs.
    let mut compared = 0;
    for sub in ["scans", "out"] {
        compare_trees(&t1.path().join(sub), &t2.path().join(sub), &mut compared);
    }
    assert!(compared >= 6, "expected to compare several artifacts, got {compared}");
}

fn compare_trees(a: &Path, b: &Path, compared: &mut usize) {
    for entry in std::fs::read_dir(a).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name();
        let pa = entry.path();
        let pb = b.join(&name);
        if pa.is_dir() {
            compare_trees(&pa, &pb, compared);
            continue;
        }
        let ext = pa.extension().and_then(|e| e.to_str()).unwrap_or("");
        if ext == "csv" || ext == "json" {
            let ba = std::fs::read(&pa).unwrap();
            let bb = std::fs::read(&pb).unwrap_or_else(|_| panic!("missing {pb:?}"));
            assert_eq!(ba, bb, "bytes differ for {name:?}");
            *compared += 1;
        }
    }
}

#[test]
fn ingest_and_sym_scan() {
    let t = tempfile::tempdir().unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../lfunc/tests/data/newforms.csv");
    let out = run_in(t.path(), &["ingest", fixture.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run_in(
        t.path(),
        &["scan", "sym", "--file", fixture.to_str().unwrap(), "--r", "2"],
    );
    assert!(out.status.success());
    // Bad row: validation exit code.
    let bad = t.path().join("bad.csv");
    std::fs::write(&bad, "label,level,weight,p,lambda\nx,11,2,3,9.0\n").unwrap();
    let out = run_in(t.path(), &["ingest", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
