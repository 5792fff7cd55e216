//! Parameter sweeps.
//!
//! A grid is written `key=v1,v2;key=v1,v2` and expands to the cartesian
//! product of its axes. Every (grid point, seed) pair is an independent job;
//! jobs run in parallel and rows are emitted sorted by (grid point, seed).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::runner::{build_models, run_seed, summarize, RunReport, RESULT_VERSION};

/// Parameters a grid may vary.
pub const PARAMETERS: [&str; 14] = [
    "rig.count",
    "rig.radius",
    "noise.center_sigma_px",
    "noise.center_outlier_rate",
    "noise.rotation_sigma_deg",
    "noise.spurious_mode_rate",
    "noise.symmetry_aliasing",
    "estimator.huber_delta",
    "estimator.gate_px",
    "estimator.acceptance_threshold_deg",
    "estimator.refresh_canonicalization",
    "estimator.rotation_max_iterations",
    "estimator.translation_max_iterations",
    "scene.random_objects",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<GridAxis>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        other => Err(CliError::Config(format!("invalid value `{other}` for `{key}`"))),
    }
}

/// Sets one documented parameter on `config`.
pub fn apply(config: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "rig.count" => config.rig.count = parse_value(key, value)?,
        "rig.radius" => config.rig.radius = parse_value(key, value)?,
        "noise.center_sigma_px" => config.noise.center_sigma_px = parse_value(key, value)?,
        "noise.center_outlier_rate" => config.noise.center_outlier_rate = parse_value(key, value)?,
        "noise.rotation_sigma_deg" => config.noise.rotation_sigma_deg = parse_value(key, value)?,
        "noise.spurious_mode_rate" => config.noise.spurious_mode_rate = parse_value(key, value)?,
        "noise.symmetry_aliasing" => config.noise.symmetry_aliasing = parse_bool(key, value)?,
        "estimator.huber_delta" => config.estimator.huber_delta = parse_value(key, value)?,
        "estimator.gate_px" => config.estimator.gate_px = parse_value(key, value)?,
        "estimator.acceptance_threshold_deg" => config.estimator.acceptance_threshold_deg = parse_value(key, value)?,
        "estimator.refresh_canonicalization" => config.estimator.refresh_canonicalization = parse_bool(key, value)?,
        "estimator.rotation_max_iterations" => config.estimator.rotation_max_iterations = parse_value(key, value)?,
        "estimator.translation_max_iterations" => {
            config.estimator.translation_max_iterations = parse_value(key, value)?
        }
        "scene.random_objects" => config.scene.random_objects = parse_value(key, value)?,
        other => return Err(CliError::UnknownParameter(other.to_string())),
    }
    Ok(())
}

impl Grid {
    pub fn parse(spec: &str) -> Result<Self> {
        let mut axes: Vec<GridAxis> = Vec::new();
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("grid axis `{part}` is not `key=v1,v2`")))?;
            let key = key.trim();
            if !PARAMETERS.contains(&key) {
                return Err(CliError::UnknownParameter(key.to_string()));
            }
            if axes.iter().any(|a| a.key == key) {
                return Err(CliError::Config(format!("grid repeats `{key}`")));
            }
            let values: Vec<String> = values
                .split(',')
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            if values.is_empty() {
                return Err(CliError::Config(format!("grid axis `{key}` has no values")));
            }
            axes.push(GridAxis {
                key: key.to_string(),
                values,
            });
        }
        if axes.is_empty() {
            return Err(CliError::Config("grid is empty".into()));
        }
        Ok(Self { axes })
    }

    /// Grid points in row-major order, last axis fastest.
    pub fn points(&self) -> Vec<Vec<(String, String)>> {
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push((axis.key.clone(), v.clone()));
                        q
                    })
                })
                .collect();
        }
        points
    }
}

fn label(point: &[(String, String)]) -> String {
    point
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub grid_point: usize,
    pub params: String,
    pub seed: u64,
    pub views: usize,
    pub objects: usize,
    pub mean_add: f64,
    pub median_add: f64,
    pub detection_rate: f64,
    pub detection_rate_symmetric: f64,
    pub mean_rotation_error_deg: f64,
    pub mean_translation_error_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPointSummary {
    pub grid_point: usize,
    pub params: String,
    pub seeds: usize,
    pub views: usize,
    pub detection_rate: f64,
    pub detection_rate_symmetric: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_add: f64,
    pub median_add: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub points: Vec<SweepPointSummary>,
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn row(grid_point: usize, params: &str, r: &RunReport) -> SweepRow {
    let cp = r.final_checkpoint();
    let mut adds: Vec<f64> = cp.objects.iter().filter_map(|o| o.add).collect();
    adds.sort_by(f64::total_cmp);
    let median_add = match adds.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => adds[n / 2],
        n => 0.5 * (adds[n / 2 - 1] + adds[n / 2]),
    };
    let rot: Vec<f64> = cp.objects.iter().filter_map(|o| o.rotation_error_deg).collect();
    let trans: Vec<f64> = cp.objects.iter().filter_map(|o| o.translation_error_m).collect();
    SweepRow {
        grid_point,
        params: params.to_string(),
        seed: r.seed,
        views: cp.views,
        objects: cp.objects.len(),
        mean_add: mean(&adds),
        median_add,
        detection_rate: cp.detection_rate,
        detection_rate_symmetric: cp.detection_rate_symmetric,
        mean_rotation_error_deg: mean(&rot),
        mean_translation_error_m: mean(&trans),
    }
}

pub fn run(base: &ExperimentConfig, grid: &Grid, digest: &str) -> Result<SweepResult> {
    let points = grid.points();
    let configs = points
        .iter()
        .map(|p| {
            let mut c = base.clone();
            for (k, v) in p {
                apply(&mut c, k, v)?;
            }
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let models = build_models(&base.scene.models)?;
    let seeds = base.seed_list();
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|g| seeds.iter().map(move |&s| (g, s)))
        .collect();
    let reports = jobs
        .par_iter()
        .map(|&(g, seed)| run_seed(&configs[g], &models, seed, digest).map(|r| (g, r)))
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<SweepRow> = reports.iter().map(|(g, r)| row(*g, &label(&points[*g]), r)).collect();
    rows.sort_by_key(|r| (r.grid_point, r.seed));

    let mut summaries = Vec::with_capacity(points.len());
    for (g, point) in points.iter().enumerate() {
        let runs: Vec<RunReport> = reports
            .iter()
            .filter(|(p, _)| *p == g)
            .map(|(_, r)| r.clone())
            .collect();
        let views = runs[0].final_checkpoint().views;
        let eval = &configs[g].evaluation;
        let s = summarize(&runs, views, eval.bootstrap_resamples, eval.confidence_level)
            .expect("every run has a final checkpoint");
        summaries.push(SweepPointSummary {
            grid_point: g,
            params: label(point),
            seeds: runs.len(),
            views,
            detection_rate: s.detection_rate,
            detection_rate_symmetric: s.detection_rate_symmetric,
            ci_low: s.ci_low,
            ci_high: s.ci_high,
            mean_add: s.mean_add,
            median_add: s.median_add,
        });
    }
    Ok(SweepResult {
        rows,
        points: summaries,
    })
}

/// `sweep.csv`: one row per (grid point, seed).
pub fn rows_csv(digest: &str, rows: &[SweepRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "version",
        "config_digest",
        "grid_point",
        "params",
        "seed",
        "views",
        "objects",
        "mean_add",
        "median_add",
        "detection_rate",
        "detection_rate_symmetric",
        "mean_rotation_error_deg",
        "mean_translation_error_m",
    ])
    .expect("in-memory write");
    for r in rows {
        w.write_record([
            RESULT_VERSION.to_string(),
            digest.to_string(),
            r.grid_point.to_string(),
            r.params.clone(),
            r.seed.to_string(),
            r.views.to_string(),
            r.objects.to_string(),
            r.mean_add.to_string(),
            r.median_add.to_string(),
            r.detection_rate.to_string(),
            r.detection_rate_symmetric.to_string(),
            r.mean_rotation_error_deg.to_string(),
            r.mean_translation_error_m.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// `sweep_summary.csv`: aggregates per grid point.
pub fn points_csv(digest: &str, points: &[SweepPointSummary]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "version",
        "config_digest",
        "grid_point",
        "params",
        "seeds",
        "views",
        "detection_rate",
        "detection_rate_symmetric",
        "ci_low",
        "ci_high",
        "mean_add",
        "median_add",
    ])
    .expect("in-memory write");
    for p in points {
        w.write_record([
            RESULT_VERSION.to_string(),
            digest.to_string(),
            p.grid_point.to_string(),
            p.params.clone(),
            p.seeds.to_string(),
            p.views.to_string(),
            p.detection_rate.to_string(),
            p.detection_rate_symmetric.to_string(),
            p.ci_low.to_string(),
            p.ci_high.to_string(),
            p.mean_add.to_string(),
            p.median_add.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
