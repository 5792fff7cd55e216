use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BINARY: &str = env!("CARGO_BIN_EXE_mvpose");

const MINIMAL: &str = r#"
seeds = [1, 2]

[scene]
random_objects = 2

[[scene.models]]
name = "block"
shape = { kind = "cuboid", size = [0.06, 0.04, 0.03] }
"#;

fn mvpose(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(BINARY);
    cmd.args(args).env_remove("MVPOSE_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_minimal_config_writes_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MINIMAL);
    let out = dir.path().join("out");
    let o = mvpose(&["simulate", "--config", &config, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for name in ["session-1.json", "truth-1.json", "session-2.json", "truth-2.json"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
}

#[test]
fn malformed_config_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &MINIMAL.replace("random_objects = 2", "random_objects = 2\nbogus = 1"),
    );
    let o = mvpose(
        &["simulate", "--config", &config, "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert!(msg.contains("bogus") && msg.contains("line"), "{msg}");

    let config = write_config(dir.path(), "seeds = [1\n");
    assert_eq!(code(&mvpose(&["run", "--config", &config], &[])), 2);
}

#[test]
fn same_config_gives_same_session_digests() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MINIMAL);
    let run = |sub: &str| {
        let o = mvpose(
            &[
                "simulate",
                "--config",
                &config,
                "--out",
                dir.path().join(sub).to_str().unwrap(),
            ],
            &[],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        String::from_utf8(o.stdout)
            .unwrap()
            .lines()
            .filter(|l| l.contains("sha256"))
            .map(str::to_string)
            .collect::<Vec<_>>()
    };
    let a = run("a");
    assert_eq!(a.len(), 3, "{a:?}");
    assert_eq!(a, run("b"));
}

#[test]
fn missing_session_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("session-9.json");
    let o = mvpose(
        &[
            "run",
            "--session",
            missing.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = mvpose(&["simulate", "--config", "/nonexistent/config.toml"], &[]);
    assert_eq!(code(&o), 3);
}

#[test]
fn stored_session_runs_and_zero_noise_is_correct() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MINIMAL);
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    assert_eq!(
        code(&mvpose(&["simulate", "--config", &config, "--out", out_s], &[])),
        0
    );

    let session = out.join("session-2.json");
    let res = dir.path().join("res");
    let o = mvpose(
        &[
            "run",
            "--session",
            session.to_str().unwrap(),
            "--out",
            res.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let mut rdr = csv::Reader::from_path(res.join("summary.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (views, correct, correct_sym) = (col("views"), col("correct"), col("correct_symmetric"));
    let mut final_rows = 0;
    for row in rdr.records() {
        let row = row.unwrap();
        if &row[views] == "8" {
            final_rows += 1;
            assert_eq!(&row[correct], "true");
            assert_eq!(&row[correct_sym], "true");
        }
    }
    assert_eq!(final_rows, 2);
}

#[test]
fn sweep_rejects_bad_grids() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MINIMAL);
    let out = dir.path().to_str().unwrap();
    for grid in ["", "rig.bogus=1,2"] {
        let o = mvpose(&["sweep", "--config", &config, "--grid", grid, "--out", out], &[]);
        assert_eq!(code(&o), 2, "grid {grid:?}: {}", stderr(&o));
    }
}

#[test]
fn view_count_sweep_has_row_per_point_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MINIMAL);
    let out = dir.path().join("out");
    let o = mvpose(
        &[
            "sweep",
            "--config",
            &config,
            "--grid",
            "rig.count=2,4,8",
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv::Reader::from_path(out.join("sweep.csv")).unwrap().records().count();
    assert_eq!(rows, 3 * 2);
}

#[test]
fn rates_report_four_and_eight_views() {
    let dir = tempfile::tempdir().unwrap();
    let text = mvpose_cli::REFERENCE_CONFIG.replace("seed_range = [0, 100]", "seed_range = [0, 3]");
    let config = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let o = mvpose(&["run", "--config", &config, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(out.join("rates.csv")).unwrap();
    let views: Vec<String> = rdr.records().map(|r| r.unwrap()[2].to_string()).collect();
    assert_eq!(views, ["4", "8"]);
}

#[test]
fn output_directory_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MINIMAL);
    let env_out = dir.path().join("from-env");
    let o = mvpose(&["simulate", "--config", &config], &[("MVPOSE_OUT", &env_out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(env_out.join("session-1.json").is_file());
}

#[test]
fn selftest_subset_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = mvpose(
        &["selftest", "--only", "1,9", "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("selftest.json").is_file());
    let o = mvpose(
        &["selftest", "--only", "13", "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&o), 2);
}
