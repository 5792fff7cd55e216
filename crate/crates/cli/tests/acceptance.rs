//! Acceptance suite: one pass/fail line per criterion, non-zero exit on any failure.
//!
//! Criteria 1-11 run in-process. Criterion 12 invokes the built binary twice for
//! `selftest`, `simulate` and `run` and compares every output file byte for byte.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use mvpose_cli::selftest;

const BINARY: &str = env!("CARGO_BIN_EXE_mvpose");

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .expect("output directory exists")
        .map(|e| {
            let e = e.expect("directory entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).expect("readable output"),
            )
        })
        .collect();
    files.sort();
    files
}

fn invoke(args: &[&str], out: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let status = Command::new(BINARY)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("MVPOSE_OUT")
        .output()
        .map_err(|e| format!("cannot start {BINARY}: {e}"))?;
    if !status.status.success() {
        return Err(format!(
            "`mvpose {}` exited with {:?}: {}",
            args.join(" "),
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        ));
    }
    Ok(read_dir_sorted(out))
}

fn binary_determinism() -> (bool, String) {
    let tmp = tempfile::tempdir().expect("temp dir");
    let config = tmp.path().join("reference.toml");
    let text = mvpose_cli::REFERENCE_CONFIG.replace("seed_range = [0, 100]", "seed_range = [0, 10]");
    fs::write(&config, text).expect("write config");
    let config = config.to_str().expect("utf-8 path");

    let mut compared = 0;
    for (name, args) in [
        ("selftest", vec!["selftest"]),
        ("simulate", vec!["simulate", "--config", config]),
        ("run", vec!["run", "--config", config]),
    ] {
        let runs: Result<Vec<_>, String> = (0..2)
            .map(|i| invoke(&args, &tmp.path().join(format!("{name}-{i}"))))
            .collect();
        let runs = match runs {
            Ok(r) => r,
            Err(e) => return (false, e),
        };
        if runs[0].is_empty() || runs[0] != runs[1] {
            return (false, format!("`{name}` outputs differ between invocations"));
        }
        compared += runs[0].len();
    }
    (
        true,
        format!("{compared} files byte-identical across two invocations of selftest, simulate and run"),
    )
}

fn main() {
    let mut failures = Vec::new();
    for id in selftest::ids().into_iter().filter(|&id| id != 12) {
        let t = selftest::run_criterion(id).expect("known criterion");
        println!("{}", t.line());
        if !t.ok() {
            failures.push(id);
        }
    }

    let start = Instant::now();
    let (passed, detail) = binary_determinism();
    let elapsed = start.elapsed().as_secs_f64();
    let ok = passed && elapsed < 60.0;
    let status = match (passed, elapsed < 60.0) {
        (true, true) => "PASS",
        (true, false) => "FAIL (over budget)",
        _ => "FAIL",
    };
    println!("[{status}] 12. Determinism ({elapsed:.2} s / 60 s): {detail}");
    if !ok {
        failures.push(12);
    }

    if failures.is_empty() {
        println!("acceptance: all 12 criteria passed");
    } else {
        println!("acceptance: failed criteria {failures:?}");
        std::process::exit(1);
    }
}
