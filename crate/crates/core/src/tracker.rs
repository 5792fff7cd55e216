//! Frame-by-frame orchestration of the two estimation steps.
//!
//! Each frame: detections are associated with tracked objects, center
//! observations update the translation estimates, unmatched detections open new
//! tracks, and rotation measurements are handed to the rotation mixture only
//! once the owning object's translation has converged. Earlier rotation
//! measurements are buffered and replayed in arrival order.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hat, roi_side, BoundingBox, CameraIntrinsics, Pixel2, RigidTransform};
use crate::rotation::{RotationConfig, RotationMeasurement, RotationMixtureState};
use crate::symmetry::SymmetryGroup;
use crate::translation::{init_from_bbox, CenterMeasurement, TranslationConfig, TranslationEstimator};

/// Version of the serialized [`Tracker`] layout.
pub const STATE_VERSION: u32 = 1;

/// Fraction by which a detection box is inflated when checking its center.
pub const BOX_CENTER_MARGIN: f64 = 0.2;

/// One per-frame detection: box, 2D center and an optional rotation measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Index into the model catalog.
    pub model: usize,
    pub bbox: BoundingBox,
    pub center: CenterMeasurement,
    pub rotation: Option<RotationMeasurement>,
}

impl Detection {
    pub fn validate(&self) -> Result<()> {
        if !self.bbox.inflated(BOX_CENTER_MARGIN).contains(&self.center.u) {
            return Err(Error::InvalidInput(format!(
                "center ({:.1}, {:.1}) lies outside its inflated box",
                self.center.u.x, self.center.u.y
            )));
        }
        self.center.validate()?;
        if let Some(r) = &self.rotation {
            r.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameInput {
    pub frame_id: u64,
    /// Camera-to-world pose `T_wc`.
    pub camera_pose: RigidTransform,
    pub intrinsics: CameraIntrinsics,
    pub detections: Vec<Detection>,
}

/// Known object model: the tracker needs its size and symmetry group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    pub diameter: f64,
    pub symmetry: SymmetryGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoiConfig {
    /// Template RoI side at training time, pixels.
    pub template_side_px: f64,
    /// Canonical template distance, meters.
    pub template_distance: f64,
}

impl Default for RoiConfig {
    fn default() -> Self {
        Self {
            template_side_px: 128.0,
            template_distance: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Association gate for reprojection and epipolar distances, pixels.
    pub gate_px: f64,
    /// Depth used to seed a track whose detection box is unusable, meters.
    pub fallback_depth: f64,
    pub translation: TranslationConfig,
    pub rotation: RotationConfig,
    pub roi: RoiConfig,
    /// Record the translation state seen by every rotation ingest.
    pub record_ingest_log: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            gate_px: 30.0,
            fallback_depth: 1.0,
            translation: TranslationConfig::default(),
            rotation: RotationConfig::default(),
            roi: RoiConfig::default(),
            record_ingest_log: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IngestRecord {
    pub frame_id: u64,
    pub measurement_frame: u64,
    pub translation_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedObject {
    pub id: usize,
    pub model: usize,
    pub translation: TranslationEstimator,
    pub rotation: RotationMixtureState,
    pub symmetry: SymmetryGroup,
    pub model_diameter: f64,
    pub frames_seen: usize,
    /// Rotation measurements waiting for the translation to converge.
    pub pending_rotations: Vec<RotationMeasurement>,
    /// Depth-scaled RoI side at the most recent observation, pixels.
    pub roi_side_px: Option<f64>,
    /// `(frame_id, detection index)` of every detection assigned to this track.
    pub history: Vec<(u64, usize)>,
    pub errors: Vec<String>,
    pub ingest_log: Vec<IngestRecord>,
}

impl TrackedObject {
    pub fn is_converged(&self) -> bool {
        self.translation.state().converged
    }

    fn last_center(&self) -> Option<&CenterMeasurement> {
        self.translation.measurements().last()
    }
}

/// Pose readout of one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub pose: RigidTransform,
    pub weights: Vec<f64>,
    pub best_component: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub detection: usize,
    pub object: usize,
    pub distance_px: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Association {
    pub matches: Vec<Match>,
    pub unmatched: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectError {
    pub object: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameReport {
    pub frame_id: u64,
    pub matches: Vec<Match>,
    pub new_tracks: Vec<usize>,
    pub rotation_ingests: usize,
    pub errors: Vec<ObjectError>,
}

/// Multi-object session state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tracker {
    pub version: u32,
    pub config: TrackerConfig,
    pub models: Vec<ModelInfo>,
    pub objects: Vec<TrackedObject>,
    pub last_frame_id: Option<u64>,
}

/// Distance from `u` to the epipolar line of `prior` in the view `(pose, k)`.
///
/// Returns `None` when the triangulated point would lie behind either camera.
fn epipolar_distance(
    prior: &CenterMeasurement,
    pose: &RigidTransform,
    k: &CameraIntrinsics,
    u: &Pixel2,
) -> Option<f64> {
    let r1 = prior.camera_pose.rotation;
    let r2 = pose.rotation;
    let d1 = r1.rotate(&prior.intrinsics.ray(&prior.u));
    let d2 = r2.rotate(&k.ray(u));
    let baseline = prior.camera_pose.translation - pose.translation;

    if baseline.norm() < 1e-9 {
        // pure rotation: compare against the vanishing point of the prior ray
        let p = r2.inverse().rotate(&d1);
        let v = k.project(&p).ok()?;
        return Some(v.distance(u));
    }

    // cheirality: closest points on both rays must lie in front of the cameras
    let (aa, ab, bb) = (d1.dot(&d1), d1.dot(&d2), d2.dot(&d2));
    let (d, e) = (d1.dot(&baseline), d2.dot(&baseline));
    let den = aa * bb - ab * ab;
    if den > 1e-12 * aa * bb {
        let s = (ab * e - bb * d) / den;
        let t = (aa * e - ab * d) / den;
        if s <= 0.0 || t <= 0.0 {
            return None;
        }
    }

    // F = K2⁻ᵀ [t]× R K1⁻¹ with x2 = R·x1 + t mapping camera 1 into camera 2
    let r21 = (r2.inverse() * r1).matrix();
    let t21 = r2.inverse().rotate(&baseline);
    let k1_inv = intrinsics_inverse(&prior.intrinsics);
    let k2_inv = intrinsics_inverse(k);
    let f = k2_inv.transpose() * hat(&t21) * r21 * k1_inv;
    let line = f * Vector3::new(prior.u.x, prior.u.y, 1.0);
    let norm = line.x.hypot(line.y);
    if norm < 1e-15 {
        return None;
    }
    Some((line.dot(&Vector3::new(u.x, u.y, 1.0))).abs() / norm)
}

fn intrinsics_inverse(k: &CameraIntrinsics) -> Matrix3<f64> {
    Matrix3::new(
        1.0 / k.fx,
        0.0,
        -k.cx / k.fx,
        0.0,
        1.0 / k.fy,
        -k.cy / k.fy,
        0.0,
        0.0,
        1.0,
    )
}

impl Tracker {
    pub fn new(models: Vec<ModelInfo>, config: TrackerConfig) -> Self {
        Self {
            version: STATE_VERSION,
            config,
            models,
            objects: Vec::new(),
            last_frame_id: None,
        }
    }

    pub fn objects(&self) -> &[TrackedObject] {
        &self.objects
    }

    /// Association distance between a track and a detection, if gated in.
    ///
    /// Converged tracks use the reprojection of the current estimate; others
    /// use the epipolar line of their latest center observation.
    fn distance(&self, obj: &TrackedObject, frame: &FrameInput, det: &Detection) -> Option<f64> {
        if obj.model != det.model {
            return None;
        }
        let dist = if obj.is_converged() {
            let p = frame
                .camera_pose
                .inverse()
                .transform_point(&obj.translation.state().t_wo);
            frame.intrinsics.project(&p).ok()?.distance(&det.center.u)
        } else {
            let prior = obj.last_center()?;
            epipolar_distance(prior, &frame.camera_pose, &frame.intrinsics, &det.center.u)?
        };
        (dist < self.config.gate_px).then_some(dist)
    }

    /// Greedy nearest-first assignment, one detection per object.
    pub fn associate(&self, frame: &FrameInput) -> Association {
        let mut candidates = Vec::new();
        for (oi, obj) in self.objects.iter().enumerate() {
            for (di, det) in frame.detections.iter().enumerate() {
                if let Some(d) = self.distance(obj, frame, det) {
                    candidates.push(Match {
                        detection: di,
                        object: oi,
                        distance_px: d,
                    });
                }
            }
        }
        candidates.sort_by(|a, b| {
            a.distance_px
                .total_cmp(&b.distance_px)
                .then(a.object.cmp(&b.object))
                .then(a.detection.cmp(&b.detection))
        });
        let mut det_used = vec![false; frame.detections.len()];
        let mut obj_used = vec![false; self.objects.len()];
        let mut matches = Vec::new();
        for c in candidates {
            if !det_used[c.detection] && !obj_used[c.object] {
                det_used[c.detection] = true;
                obj_used[c.object] = true;
                matches.push(c);
            }
        }
        matches.sort_by_key(|m| m.object);
        let unmatched = (0..frame.detections.len()).filter(|d| !det_used[*d]).collect();
        Association { matches, unmatched }
    }

    fn validate_frame(&self, frame: &FrameInput) -> Result<()> {
        if let Some(last) = self.last_frame_id {
            if frame.frame_id <= last {
                return Err(Error::InvalidInput(format!(
                    "frame id {} does not follow {last}",
                    frame.frame_id
                )));
            }
        }
        frame.intrinsics.validate()?;
        for det in &frame.detections {
            if det.model >= self.models.len() {
                return Err(Error::InvalidInput(format!("unknown model index {}", det.model)));
            }
            det.validate()?;
        }
        Ok(())
    }

    fn spawn(&mut self, frame: &FrameInput, det_index: usize, report: &mut FrameReport) {
        let det = &frame.detections[det_index];
        let model = &self.models[det.model];
        let id = self.objects.len();
        let mut errors = Vec::new();
        let init = match init_from_bbox(&det.bbox, &frame.intrinsics, &frame.camera_pose, model.diameter) {
            Ok(t) => t,
            Err(e) => {
                errors.push(format!("frame {}: {e}", frame.frame_id));
                let t_co = frame.intrinsics.ray(&det.center.u) * self.config.fallback_depth;
                frame.camera_pose.transform_point(&t_co)
            }
        };
        let mut obj = TrackedObject {
            id,
            model: det.model,
            translation: TranslationEstimator::new(init, self.config.translation),
            rotation: RotationMixtureState::new(self.config.rotation),
            symmetry: model.symmetry.clone(),
            model_diameter: model.diameter,
            frames_seen: 0,
            pending_rotations: Vec::new(),
            roi_side_px: None,
            history: Vec::new(),
            errors,
            ingest_log: Vec::new(),
        };
        observe(&mut obj, frame, det_index, &self.config.roi, report);
        self.objects.push(obj);
        report.new_tracks.push(id);
    }

    /// Runs one frame through association, translation and rotation updates.
    ///
    /// Estimator failures are recorded per object and in the report; only an
    /// invalid frame is an error.
    pub fn ingest_frame(&mut self, frame: &FrameInput) -> Result<FrameReport> {
        self.validate_frame(frame)?;
        let mut report = FrameReport {
            frame_id: frame.frame_id,
            ..Default::default()
        };
        let association = self.associate(frame);
        for m in &association.matches {
            observe(
                &mut self.objects[m.object],
                frame,
                m.detection,
                &self.config.roi,
                &mut report,
            );
        }
        report.matches = association.matches.clone();
        for &d in &association.unmatched {
            self.spawn(frame, d, &mut report);
        }

        let config = self.config;
        for obj in &mut self.objects {
            if !obj.is_converged() || obj.pending_rotations.is_empty() {
                continue;
            }
            for m in std::mem::take(&mut obj.pending_rotations) {
                if config.record_ingest_log {
                    obj.ingest_log.push(IngestRecord {
                        frame_id: frame.frame_id,
                        measurement_frame: m.frame_id,
                        translation_converged: obj.is_converged(),
                    });
                }
                report.rotation_ingests += 1;
                if let Err(e) = obj.rotation.ingest(m, &obj.symmetry) {
                    let message = format!("frame {}: rotation: {e}", frame.frame_id);
                    obj.errors.push(message.clone());
                    report.errors.push(ObjectError {
                        object: obj.id,
                        message,
                    });
                }
            }
        }
        self.last_frame_id = Some(frame.frame_id);
        Ok(report)
    }

    pub fn get_pose(&self, id: usize) -> Result<PoseEstimate> {
        let obj = self.objects.get(id).ok_or(Error::NotReady { id })?;
        if !obj.is_converged() || obj.rotation.is_empty() {
            return Err(Error::NotReady { id });
        }
        let (rotation, _) = obj.rotation.map_estimate()?;
        Ok(PoseEstimate {
            pose: RigidTransform::new(rotation, obj.translation.state().t_wo),
            weights: obj.rotation.weights(),
            best_component: obj.rotation.best_index().unwrap_or(0),
        })
    }
}

/// Feeds one detection into a track: center update, RoI scale, rotation buffering.
fn observe(obj: &mut TrackedObject, frame: &FrameInput, det_index: usize, roi: &RoiConfig, report: &mut FrameReport) {
    let det = &frame.detections[det_index];
    obj.frames_seen += 1;
    obj.history.push((frame.frame_id, det_index));
    if let Err(e) = obj.translation.add_measurement(det.center.clone()) {
        let message = format!("frame {}: translation: {e}", frame.frame_id);
        obj.errors.push(message.clone());
        report.errors.push(ObjectError {
            object: obj.id,
            message,
        });
    }
    if let Some(r) = &det.rotation {
        obj.pending_rotations.push(r.clone());
    }
    if obj.is_converged() {
        let t_co = frame
            .camera_pose
            .inverse()
            .transform_point(&obj.translation.state().t_wo);
        obj.roi_side_px = roi_side(roi.template_side_px, roi.template_distance, t_co.z).ok();
    }
}
