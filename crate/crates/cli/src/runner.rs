//! Runs sessions through the tracker and scores the estimates.
//!
//! Each ground-truth object is scored against the track that received most of
//! its detections (ties go to the lower track id). Scoring happens after the
//! first `n` frames for every configured checkpoint `n`.

use mvpose::evaluation::{add_metric, add_symmetric, bootstrap_interval, is_correct};
use mvpose::simulator::{generate_session, BuiltModel, GroundTruthRecord, ModelSpec, Session};
use mvpose::tracker::{Tracker, TrackerConfig};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// Version of the result JSON and summary CSV layouts.
pub const RESULT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseOut {
    pub translation: [f64; 3],
    /// Unit quaternion `[w, x, y, z]`.
    pub rotation: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationDiagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub final_cost: f64,
    pub n_measurements: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectStatus {
    Ok,
    NotReady,
    Untracked,
}

impl ObjectStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectStatus::Ok => "ok",
            ObjectStatus::NotReady => "not_ready",
            ObjectStatus::Untracked => "untracked",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectReport {
    pub object: usize,
    pub model: String,
    pub track: Option<usize>,
    pub status: ObjectStatus,
    pub pose: Option<PoseOut>,
    pub weights: Vec<f64>,
    pub translation: Option<TranslationDiagnostics>,
    pub rotation_components: usize,
    pub errors: Vec<String>,
    pub add: Option<f64>,
    pub add_symmetric: Option<f64>,
    /// Symmetry-aware rotation error, degrees.
    pub rotation_error_deg: Option<f64>,
    pub translation_error_m: Option<f64>,
    pub diameter: f64,
    pub correct: bool,
    pub correct_symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointReport {
    pub views: usize,
    pub detection_rate: f64,
    pub detection_rate_symmetric: f64,
    pub tracks: usize,
    pub objects: Vec<ObjectReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub config_digest: String,
    pub seed: u64,
    pub checkpoints: Vec<CheckpointReport>,
}

impl RunReport {
    pub fn final_checkpoint(&self) -> &CheckpointReport {
        self.checkpoints.last().expect("at least one checkpoint")
    }

    pub fn checkpoint(&self, views: usize) -> Option<&CheckpointReport> {
        self.checkpoints.iter().find(|c| c.views == views)
    }
}

pub fn build_models(specs: &[ModelSpec]) -> Result<Vec<BuiltModel>> {
    Ok(specs.iter().map(ModelSpec::build).collect::<mvpose::Result<_>>()?)
}

/// Sorted, deduplicated view counts within the session, always ending at its length.
fn checkpoint_views(checkpoints: &[usize], frames: usize) -> Vec<usize> {
    let mut views: Vec<usize> = checkpoints.iter().copied().filter(|&c| c < frames).collect();
    views.push(frames);
    views.sort_unstable();
    views.dedup();
    views
}

fn score(tracker: &Tracker, truth: &GroundTruthRecord, models: &[BuiltModel], views: usize) -> CheckpointReport {
    // votes[object][track] = detections of `object` assigned to `track`
    let mut votes = vec![vec![0usize; tracker.objects().len()]; truth.objects.len()];
    for obj in tracker.objects() {
        for &(frame, det) in &obj.history {
            let source = truth.detection_sources[frame as usize][det];
            votes[source.object][obj.id] += 1;
        }
    }
    let objects: Vec<ObjectReport> = truth
        .objects
        .iter()
        .enumerate()
        .map(|(j, gt)| {
            let model = &models[gt.model];
            let track = votes[j]
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0)
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(t, _)| t);
            let mut report = ObjectReport {
                object: j,
                model: model.name.clone(),
                track,
                status: ObjectStatus::Untracked,
                pose: None,
                weights: Vec::new(),
                translation: None,
                rotation_components: 0,
                errors: Vec::new(),
                add: None,
                add_symmetric: None,
                rotation_error_deg: None,
                translation_error_m: None,
                diameter: gt.diameter,
                correct: false,
                correct_symmetric: false,
            };
            let Some(t) = track else { return report };
            let obj = &tracker.objects()[t];
            let st = obj.translation.state();
            report.translation = Some(TranslationDiagnostics {
                converged: st.converged,
                iterations: st.iterations,
                final_cost: st.final_cost,
                n_measurements: st.n_measurements,
                skipped: st.skipped,
            });
            report.rotation_components = obj.rotation.len();
            report.errors = obj.errors.clone();
            match tracker.get_pose(t) {
                Ok(est) => {
                    let add = add_metric(&model.points, &gt.pose, &est.pose);
                    let add_sym = add_symmetric(&model.points, &model.symmetry, &gt.pose, &est.pose);
                    report.status = ObjectStatus::Ok;
                    report.pose = Some(PoseOut {
                        translation: est.pose.translation.into(),
                        rotation: est.pose.rotation.to_wxyz(),
                    });
                    report.weights = est.weights;
                    report.add = Some(add);
                    report.add_symmetric = Some(add_sym);
                    report.rotation_error_deg = Some(
                        model
                            .symmetry
                            .symmetry_aware_angle(&est.pose.rotation, &gt.pose.rotation)
                            .to_degrees(),
                    );
                    report.translation_error_m = Some((est.pose.translation - gt.pose.translation).norm());
                    report.correct = is_correct(add, gt.diameter);
                    report.correct_symmetric = is_correct(add_sym, gt.diameter);
                }
                Err(_) => report.status = ObjectStatus::NotReady,
            }
            report
        })
        .collect();
    let n = objects.len().max(1) as f64;
    CheckpointReport {
        views,
        detection_rate: objects.iter().filter(|o| o.correct).count() as f64 / n,
        detection_rate_symmetric: objects.iter().filter(|o| o.correct_symmetric).count() as f64 / n,
        tracks: tracker.objects().len(),
        objects,
    }
}

/// Runs one session and scores it after each checkpoint's number of frames.
pub fn run_session(
    session: &Session,
    truth: &GroundTruthRecord,
    models: &[BuiltModel],
    tracker_config: TrackerConfig,
    checkpoints: &[usize],
    config_digest: &str,
) -> Result<RunReport> {
    if truth.detection_sources.len() != session.frames.len() {
        return Err(CliError::Config(
            "ground truth does not match the session's frames".into(),
        ));
    }
    if session.frames.iter().enumerate().any(|(i, f)| f.frame_id != i as u64) {
        return Err(CliError::Config("session frame ids must be 0, 1, 2, ...".into()));
    }
    if models.len() != session.models.len() {
        return Err(CliError::Config(
            "ground truth does not match the session's models".into(),
        ));
    }
    let views = checkpoint_views(checkpoints, session.frames.len());
    let mut tracker = Tracker::new(session.models.clone(), tracker_config);
    let mut reports = Vec::with_capacity(views.len());
    let mut next = views.iter().peekable();
    for (i, frame) in session.frames.iter().enumerate() {
        tracker.ingest_frame(frame)?;
        if next.peek() == Some(&&(i + 1)) {
            next.next();
            reports.push(score(&tracker, truth, models, i + 1));
        }
    }
    Ok(RunReport {
        version: RESULT_VERSION,
        config_digest: config_digest.to_string(),
        seed: session.seed,
        checkpoints: reports,
    })
}

/// Simulates and runs one seed of an experiment.
pub fn run_seed(config: &ExperimentConfig, models: &[BuiltModel], seed: u64, digest: &str) -> Result<RunReport> {
    let (session, truth) = simulate_seed(config, seed)?;
    run_session(
        &session,
        &truth,
        models,
        config.estimator.tracker(),
        &config.evaluation.checkpoints,
        digest,
    )
}

pub fn simulate_seed(config: &ExperimentConfig, seed: u64) -> Result<(Session, GroundTruthRecord)> {
    let scene = config.scene(seed)?;
    let rig = config.rig(&scene)?;
    Ok(generate_session(&scene, &rig, &config.noise.model(seed))?)
}

/// Detection-rate aggregate over many runs at one view count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub views: usize,
    pub instances: usize,
    pub detection_rate: f64,
    pub detection_rate_symmetric: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_add: f64,
    pub median_add: f64,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Pools all object instances of `reports` at `views`; the interval is a
/// percentile bootstrap of the symmetric detection rate.
pub fn summarize(reports: &[RunReport], views: usize, resamples: usize, level: f64) -> Option<RateSummary> {
    let objects: Vec<&ObjectReport> = reports
        .iter()
        .filter_map(|r| r.checkpoint(views))
        .flat_map(|c| c.objects.iter())
        .collect();
    if objects.is_empty() {
        return None;
    }
    let n = objects.len() as f64;
    let flags: Vec<bool> = objects.iter().map(|o| o.correct_symmetric).collect();
    let (ci_low, ci_high) = bootstrap_interval(&flags, resamples, level, 0).ok()?;
    let mut adds: Vec<f64> = objects.iter().filter_map(|o| o.add).collect();
    let mean_add = adds.iter().sum::<f64>() / adds.len().max(1) as f64;
    Some(RateSummary {
        views,
        instances: objects.len(),
        detection_rate: objects.iter().filter(|o| o.correct).count() as f64 / n,
        detection_rate_symmetric: flags.iter().filter(|&&f| f).count() as f64 / n,
        ci_low,
        ci_high,
        mean_add,
        median_add: median(&mut adds),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_noise_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::from_toml(crate::REFERENCE_CONFIG).unwrap();
        c.noise = Default::default();
        c.seed_range = Some([0, 3]);
        c
    }

    #[test]
    fn checkpoints_are_clamped_to_the_session() {
        assert_eq!(checkpoint_views(&[4, 8], 8), vec![4, 8]);
        assert_eq!(checkpoint_views(&[8, 4, 4], 6), vec![4, 6]);
        assert_eq!(checkpoint_views(&[], 3), vec![3]);
    }

    #[test]
    fn zero_noise_run_is_all_correct() {
        let c = zero_noise_config();
        let models = build_models(&c.scene.models).unwrap();
        for seed in c.seed_list() {
            let r = run_seed(&c, &models, seed, "d").unwrap();
            assert_eq!(r.checkpoints.len(), 2);
            for cp in &r.checkpoints {
                assert_eq!(cp.tracks, 5);
                for o in &cp.objects {
                    assert_eq!(o.status, ObjectStatus::Ok);
                    assert!(o.correct && o.correct_symmetric);
                    assert!(o.translation_error_m.unwrap() < 1e-6);
                    assert!(o.rotation_error_deg.unwrap().to_radians() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn single_view_session_reports_not_ready() {
        let mut c = zero_noise_config();
        c.rig.count = 1;
        let models = build_models(&c.scene.models).unwrap();
        let r = run_seed(&c, &models, 0, "d").unwrap();
        assert_eq!(r.checkpoints.len(), 1);
        assert!(r
            .final_checkpoint()
            .objects
            .iter()
            .all(|o| o.status == ObjectStatus::NotReady && !o.correct));
        assert_eq!(r.final_checkpoint().detection_rate, 0.0);
    }

    #[test]
    fn summary_pools_instances() {
        let c = zero_noise_config();
        let models = build_models(&c.scene.models).unwrap();
        let reports: Vec<RunReport> = c
            .seed_list()
            .iter()
            .map(|&s| run_seed(&c, &models, s, "d").unwrap())
            .collect();
        let s = summarize(&reports, 8, 200, 0.95).unwrap();
        assert_eq!(s.instances, 15);
        assert_eq!(s.detection_rate, 1.0);
        assert_eq!((s.ci_low, s.ci_high), (1.0, 1.0));
        assert!(summarize(&reports, 5, 200, 0.95).is_none());
    }
}
