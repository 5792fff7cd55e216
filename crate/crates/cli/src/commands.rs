//! Subcommand implementations. Each produces named output files in memory so
//! that the binary and the determinism check share one code path.

use std::path::{Path, PathBuf};

use mvpose::simulator::{GroundTruthRecord, Session};
use rayon::prelude::*;

use crate::config::{digest, EvaluationConfig, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::output::{json_bytes, rates_csv, read_json, summary_csv, write_file, Envelope};
use crate::runner::{build_models, run_seed, run_session, summarize, RunReport, RESULT_VERSION};
use crate::selftest::{self, SelftestReport, Timed};
use crate::sweep::{self, Grid};

pub const SESSION_KIND: &str = "mvpose.session";
pub const TRUTH_KIND: &str = "mvpose.ground_truth";
pub const RESULTS_KIND: &str = "mvpose.results";
pub const SELFTEST_KIND: &str = "mvpose.selftest";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outputs {
    /// `(file name, contents)` in write order.
    pub files: Vec<(String, Vec<u8>)>,
    /// Human-readable lines for stdout.
    pub messages: Vec<String>,
}

impl Outputs {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        for (name, bytes) in &self.files {
            write_file(&dir.join(name), bytes)?;
        }
        Ok(())
    }
}

fn load(text: &str) -> Result<(ExperimentConfig, String)> {
    let config = ExperimentConfig::from_toml(text)?;
    Ok((config, digest(text.as_bytes())))
}

pub fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes `session-<seed>.json` and `truth-<seed>.json` for every seed.
pub fn simulate(config_text: &str) -> Result<Outputs> {
    let (config, digest) = load(config_text)?;
    let mut out = Outputs::default();
    let sessions = config
        .seed_list()
        .into_par_iter()
        .map(|seed| crate::runner::simulate_seed(&config, seed).map(|s| (seed, s)))
        .collect::<Result<Vec<_>>>()?;
    for (seed, (session, truth)) in sessions {
        let session_bytes = json_bytes(&Envelope::new(SESSION_KIND, session.version, &digest, seed, session));
        let truth_bytes = json_bytes(&Envelope::new(TRUTH_KIND, truth.version, &digest, seed, truth));
        out.messages.push(format!(
            "seed {seed}: session sha256 {}",
            crate::config::digest(&session_bytes)
        ));
        out.files.push((format!("session-{seed}.json"), session_bytes));
        out.files.push((format!("truth-{seed}.json"), truth_bytes));
    }
    out.messages.push(format!("config sha256 {digest}"));
    Ok(out)
}

fn result_outputs(eval: &EvaluationConfig, digest: &str, reports: &[RunReport]) -> Outputs {
    let mut out = Outputs::default();
    for r in reports {
        out.files.push((
            format!("results-{}.json", r.seed),
            json_bytes(&Envelope::new(RESULTS_KIND, RESULT_VERSION, digest, r.seed, r)),
        ));
    }
    out.files.push(("summary.csv".into(), summary_csv(reports)));
    let mut views: Vec<usize> = reports
        .iter()
        .flat_map(|r| r.checkpoints.iter().map(|c| c.views))
        .collect();
    views.sort_unstable();
    views.dedup();
    let rates: Vec<_> = views
        .iter()
        .filter_map(|&v| summarize(reports, v, eval.bootstrap_resamples, eval.confidence_level))
        .collect();
    for s in &rates {
        out.messages.push(format!(
            "{} views: detection rate {:.3} (symmetric {:.3}, 95% CI {:.3}-{:.3}) over {} objects",
            s.views, s.detection_rate, s.detection_rate_symmetric, s.ci_low, s.ci_high, s.instances
        ));
    }
    out.files.push(("rates.csv".into(), rates_csv(digest, &rates)));
    out
}

/// Simulates and runs every seed of a config.
pub fn run_config(config_text: &str) -> Result<Outputs> {
    let (config, digest) = load(config_text)?;
    let models = build_models(&config.scene.models)?;
    let reports = config
        .seed_list()
        .into_par_iter()
        .map(|seed| run_seed(&config, &models, seed, &digest))
        .collect::<Result<Vec<_>>>()?;
    Ok(result_outputs(&config.evaluation, &digest, &reports))
}

/// Ground-truth file next to a session file: `session-7.json` → `truth-7.json`.
pub fn sibling_truth_path(session: &Path) -> PathBuf {
    let name = session
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let truth = if name.contains("session") {
        name.replacen("session", "truth", 1)
    } else {
        format!("truth-{name}")
    };
    session.with_file_name(truth)
}

/// Runs a stored session; estimator settings come from `config_text` if given.
pub fn run_stored(session_path: &Path, truth_path: &Path, config_text: Option<&str>) -> Result<Outputs> {
    let session: Envelope<Session> = read_json(session_path)?;
    let truth: Envelope<GroundTruthRecord> = read_json(truth_path)?;
    if session.kind != SESSION_KIND || truth.kind != TRUTH_KIND {
        return Err(CliError::Config(
            "input files are not a session and its ground truth".into(),
        ));
    }
    if session.seed != truth.seed || session.config_digest != truth.config_digest {
        return Err(CliError::Config(
            "session and ground truth come from different runs".into(),
        ));
    }
    let config = match config_text {
        Some(text) => Some(ExperimentConfig::from_toml(text)?),
        None => None,
    };
    let (tracker, eval) = match &config {
        Some(c) => (c.estimator.tracker(), c.evaluation.clone()),
        None => (Default::default(), Default::default()),
    };
    let models = build_models(&truth.data.models)?;
    let report = run_session(
        &session.data,
        &truth.data,
        &models,
        tracker,
        &eval.checkpoints,
        &session.config_digest,
    )?;
    Ok(result_outputs(&eval, &session.config_digest, &[report]))
}

/// Writes `sweep.csv` and `sweep_summary.csv`.
pub fn sweep(config_text: &str, grid_spec: &str) -> Result<Outputs> {
    let grid = Grid::parse(grid_spec)?;
    let (config, digest) = load(config_text)?;
    let result = sweep::run(&config, &grid, &digest)?;
    let mut out = Outputs::default();
    for p in &result.points {
        out.messages.push(format!(
            "[{}] {}: detection rate {:.3} (symmetric {:.3}) over {} seeds",
            p.grid_point, p.params, p.detection_rate, p.detection_rate_symmetric, p.seeds
        ));
    }
    out.files
        .push(("sweep.csv".into(), sweep::rows_csv(&digest, &result.rows)));
    out.files
        .push(("sweep_summary.csv".into(), sweep::points_csv(&digest, &result.points)));
    Ok(out)
}

/// Runs the selected acceptance criteria (all when `only` is empty).
pub fn selftest(only: &[u32]) -> Result<(Outputs, Vec<Timed>)> {
    let ids: Vec<u32> = if only.is_empty() {
        selftest::ids()
    } else {
        only.to_vec()
    };
    let mut timed = Vec::with_capacity(ids.len());
    for id in ids {
        let t = selftest::run_criterion(id).ok_or_else(|| CliError::Config(format!("no acceptance criterion {id}")))?;
        timed.push(t);
    }
    let report = SelftestReport {
        passed: timed.iter().all(|t| t.result.passed),
        criteria: timed.iter().map(|t| t.result.clone()).collect(),
    };
    let digest = digest(crate::REFERENCE_CONFIG.as_bytes());
    let out = Outputs {
        files: vec![(
            "selftest.json".into(),
            json_bytes(&Envelope::new(SELFTEST_KIND, RESULT_VERSION, &digest, 0, report)),
        )],
        messages: timed.iter().map(Timed::line).collect(),
    };
    Ok((out, timed))
}
