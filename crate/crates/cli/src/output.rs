//! File formats. JSON files are wrapped in an [`Envelope`] carrying the config
//! digest and seed; CSV summaries are RFC 4180 with fixed, versioned columns.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::runner::{RateSummary, RunReport, RESULT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub kind: String,
    pub version: u32,
    pub config_digest: String,
    pub seed: u64,
    pub data: T,
}

impl<T> Envelope<T> {
    pub fn new(kind: &str, version: u32, config_digest: &str, seed: u64, data: T) -> Self {
        Self {
            kind: kind.to_string(),
            version,
            config_digest: config_digest.to_string(),
            seed,
            data,
        }
    }
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
    bytes.push(b'\n');
    bytes
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Reads a JSON file; a missing file is an I/O error, bad content a config error.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const SUMMARY_COLUMNS: [&str; 16] = [
    "version",
    "config_digest",
    "seed",
    "views",
    "object",
    "model",
    "track",
    "status",
    "add",
    "add_symmetric",
    "rotation_error_deg",
    "translation_error_m",
    "diameter",
    "correct",
    "correct_symmetric",
    "rotation_components",
];

/// One row per (run, checkpoint, object).
pub fn summary_csv(reports: &[RunReport]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_COLUMNS).expect("in-memory write");
    for r in reports {
        for cp in &r.checkpoints {
            for o in &cp.objects {
                w.write_record([
                    RESULT_VERSION.to_string(),
                    r.config_digest.clone(),
                    r.seed.to_string(),
                    cp.views.to_string(),
                    o.object.to_string(),
                    o.model.clone(),
                    o.track.map(|t| t.to_string()).unwrap_or_default(),
                    o.status.as_str().to_string(),
                    opt(o.add),
                    opt(o.add_symmetric),
                    opt(o.rotation_error_deg),
                    opt(o.translation_error_m),
                    o.diameter.to_string(),
                    o.correct.to_string(),
                    o.correct_symmetric.to_string(),
                    o.rotation_components.to_string(),
                ])
                .expect("in-memory write");
            }
        }
    }
    w.into_inner().expect("in-memory flush")
}

pub const RATE_COLUMNS: [&str; 10] = [
    "version",
    "config_digest",
    "views",
    "instances",
    "detection_rate",
    "detection_rate_symmetric",
    "ci_low",
    "ci_high",
    "mean_add",
    "median_add",
];

/// One row per view count, e.g. the 4-view and 8-view detection rates.
pub fn rates_csv(digest: &str, rates: &[RateSummary]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RATE_COLUMNS).expect("in-memory write");
    for s in rates {
        w.write_record([
            RESULT_VERSION.to_string(),
            digest.to_string(),
            s.views.to_string(),
            s.instances.to_string(),
            s.detection_rate.to_string(),
            s.detection_rate_symmetric.to_string(),
            s.ci_low.to_string(),
            s.ci_high.to_string(),
            s.mean_add.to_string(),
            s.median_add.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
