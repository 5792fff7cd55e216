//! Deterministic synthetic measurement streams with known ground truth.
//!
//! Randomness comes from ChaCha8 streams. Every `(frame, object, channel)`
//! triple gets its own stream: the generator is seeded from the session seed and
//! switched to stream `frame << 32 | object << 8 | channel`. Each draw site
//! consumes a fixed number of variates whatever the noise flags are, so toggling
//! one effect (aliasing, outliers) leaves every other draw unchanged.

use nalgebra::{Matrix2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{ModelPoints, ModelShape, DEFAULT_MODEL_POINTS};
use crate::geometry::{BoundingBox, CameraIntrinsics, Pixel2, RigidTransform, Rotation3};
use crate::rotation::RotationMeasurement;
use crate::symmetry::{SymmetryGroup, SymmetrySpec};
use crate::tracker::{Detection, FrameInput, ModelInfo};
use crate::translation::CenterMeasurement;

/// Version of the serialized [`Session`] and [`GroundTruthRecord`] layouts.
pub const SESSION_VERSION: u32 = 1;

/// Added to every reported center covariance, pixels².
pub const SIGMA_FLOOR: f64 = 1e-4;

/// Random-stream channel identifiers.
pub mod channel {
    pub const CENTER: u8 = 0;
    pub const ROTATION: u8 = 1;
    pub const SCENE: u8 = 2;
}

/// RNG for one `(frame, object, channel)` triple of a session.
pub fn stream_rng(seed: u64, frame: u32, object: u32, channel: u8) -> ChaCha8Rng {
    assert!(object < (1 << 24), "object index exceeds the stream layout");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(frame) << 32) | (u64::from(object) << 8) | u64::from(channel));
    rng
}

/// Uniformly distributed rotation (normalized Gaussian quaternion).
pub fn uniform_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation3 {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-6 {
            return Rotation3::from_quaternion(q[0] / n, q[1] / n, q[2] / n, q[3] / n).expect("normalized quaternion");
        }
    }
}

fn gaussian3<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Vector3<f64> {
    let v = Vector3::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
    );
    v * sigma
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub shape: ModelShape,
    #[serde(default)]
    pub symmetry: SymmetrySpec,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    DEFAULT_MODEL_POINTS
}

/// A model with its derived point set and symmetry group.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltModel {
    pub name: String,
    pub points: ModelPoints,
    pub symmetry: SymmetryGroup,
}

impl BuiltModel {
    pub fn info(&self) -> ModelInfo {
        ModelInfo {
            name: self.name.clone(),
            diameter: self.points.diameter(),
            symmetry: self.symmetry.clone(),
        }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<BuiltModel> {
        Ok(BuiltModel {
            name: self.name.clone(),
            points: ModelPoints::sample(&self.shape, self.points)?,
            symmetry: self.symmetry.build()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub model: usize,
    /// Ground-truth object-to-world pose `T_wo`.
    pub pose: RigidTransform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceBounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl WorkspaceBounds {
    pub fn centered(half_extent: f64) -> Self {
        Self {
            min: [-half_extent; 3],
            max: [half_extent; 3],
        }
    }

    pub fn center(&self) -> Vector3<f64> {
        (Vector3::from(self.min) + Vector3::from(self.max)) / 2.0
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub models: Vec<ModelSpec>,
    pub objects: Vec<ObjectSpec>,
    pub bounds: WorkspaceBounds,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::InvalidInput("scene has no models".into()));
        }
        for (i, m) in self.models.iter().enumerate() {
            m.shape.validate()?;
            if m.points < 2 {
                return Err(Error::InvalidInput(format!("model {i} needs at least 2 points")));
            }
        }
        for i in 0..3 {
            if !(self.bounds.min[i] < self.bounds.max[i]) {
                return Err(Error::InvalidInput("workspace bounds are empty".into()));
            }
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.model >= self.models.len() {
                return Err(Error::InvalidInput(format!(
                    "object {i} uses unknown model {}",
                    o.model
                )));
            }
            if !self.bounds.contains(&o.pose.translation) {
                return Err(Error::InvalidInput(format!("object {i} lies outside the workspace")));
            }
        }
        Ok(())
    }

    pub fn build_models(&self) -> Result<Vec<BuiltModel>> {
        self.models.iter().map(ModelSpec::build).collect()
    }

    /// Random placement of `count` objects cycling through `models`.
    ///
    /// Positions are uniform in `bounds` and rejection-sampled so that object
    /// centers are at least `min_separation` apart; rotations are uniform.
    pub fn random(
        models: Vec<ModelSpec>,
        count: usize,
        bounds: WorkspaceBounds,
        min_separation: f64,
        seed: u64,
    ) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::InvalidInput("scene has no models".into()));
        }
        let mut objects: Vec<ObjectSpec> = Vec::with_capacity(count);
        for j in 0..count {
            let mut rng = stream_rng(seed, 0, j as u32, channel::SCENE);
            let mut placed = None;
            for _ in 0..1000 {
                let p = Vector3::from_fn(|i, _| rng.random_range(bounds.min[i]..=bounds.max[i]));
                if objects
                    .iter()
                    .all(|o| (o.pose.translation - p).norm() >= min_separation)
                {
                    placed = Some(p);
                    break;
                }
            }
            let p = placed
                .ok_or_else(|| Error::InvalidInput(format!("cannot place {count} objects {min_separation} m apart")))?;
            objects.push(ObjectSpec {
                model: j % models.len(),
                pose: RigidTransform::new(uniform_rotation(&mut rng), p),
            });
        }
        let spec = Self {
            models,
            objects,
            bounds,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RigPattern {
    /// Evenly spaced azimuths at a fixed elevation above the workspace center.
    Ring { elevation_deg: f64 },
    /// Fibonacci lattice over the upper hemisphere, above `min_elevation_deg`.
    Sphere { min_elevation_deg: f64 },
}

impl Default for RigPattern {
    fn default() -> Self {
        RigPattern::Ring { elevation_deg: 40.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RigSpec {
    pub radius: f64,
    pub count: usize,
    pub pattern: RigPattern,
}

impl Default for RigSpec {
    fn default() -> Self {
        Self {
            radius: 0.8,
            count: 8,
            pattern: RigPattern::default(),
        }
    }
}

impl RigSpec {
    /// Camera eye positions relative to the look-at center.
    pub fn eye_offsets(&self) -> Result<Vec<Vector3<f64>>> {
        if !(self.radius > 0.0) || self.count == 0 {
            return Err(Error::InvalidInput(
                "rig needs a positive radius and at least one view".into(),
            ));
        }
        let n = self.count as f64;
        let offsets = match self.pattern {
            RigPattern::Ring { elevation_deg } => {
                let el = elevation_deg.to_radians();
                (0..self.count)
                    .map(|k| {
                        let az = 2.0 * std::f64::consts::PI * k as f64 / n;
                        Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()) * self.radius
                    })
                    .collect()
            }
            RigPattern::Sphere { min_elevation_deg } => {
                let z_min = min_elevation_deg.to_radians().sin();
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..self.count)
                    .map(|k| {
                        let z = 1.0 - (1.0 - z_min) * (k as f64 + 0.5) / n;
                        let r = (1.0 - z * z).sqrt();
                        let az = golden * k as f64;
                        Vector3::new(r * az.cos(), r * az.sin(), z) * self.radius
                    })
                    .collect()
            }
        };
        Ok(offsets)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    pub intrinsics: CameraIntrinsics,
    /// Camera-to-world poses `T_wc,k`.
    pub viewpoints: Vec<RigidTransform>,
}

impl CameraRig {
    /// Builds a rig and checks that every object center is visible in every view.
    pub fn new(intrinsics: CameraIntrinsics, viewpoints: Vec<RigidTransform>, scene: &SceneSpec) -> Result<Self> {
        intrinsics.validate()?;
        let rig = Self { intrinsics, viewpoints };
        rig.check_visibility(scene)?;
        Ok(rig)
    }

    /// Rig of `spec.count` cameras on a ring or sphere, all looking at the workspace center.
    pub fn from_spec(intrinsics: CameraIntrinsics, spec: &RigSpec, scene: &SceneSpec) -> Result<Self> {
        let center = scene.bounds.center();
        let views = spec
            .eye_offsets()?
            .into_iter()
            .map(|d| RigidTransform::look_at(&(center + d), &center, &Vector3::z()))
            .collect();
        Self::new(intrinsics, views, scene)
    }

    pub fn check_visibility(&self, scene: &SceneSpec) -> Result<()> {
        for (view, pose) in self.viewpoints.iter().enumerate() {
            let inv = pose.inverse();
            for (object, o) in scene.objects.iter().enumerate() {
                self.project_center(&inv, &o.pose.translation)
                    .ok_or(Error::ProjectionOutOfImage { view, object })?;
            }
        }
        Ok(())
    }

    fn project_center(&self, t_cw: &RigidTransform, p_w: &Vector3<f64>) -> Option<Pixel2> {
        let u = self.intrinsics.project(&t_cw.transform_point(p_w)).ok()?;
        self.intrinsics.contains(&u).then_some(u)
    }
}

/// What a spurious rotation measurement looks like.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpuriousMode {
    /// An independent uniformly random rotation per measurement.
    #[default]
    Uniform,
    /// A fixed model-frame offset from the truth, identical across views.
    Fixed { axis: [f64; 3], angle_deg: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfidenceModel {
    pub base: f64,
    /// Confidence lost per radian of rotation noise.
    pub noise_penalty: f64,
    /// Confidence lost by a spurious measurement.
    pub spurious_penalty: f64,
}

impl Default for ConfidenceModel {
    fn default() -> Self {
        Self {
            base: 0.9,
            noise_penalty: 1.0,
            spurious_penalty: 0.3,
        }
    }
}

impl ConfidenceModel {
    pub fn confidence(&self, noise_angle: f64, spurious: bool) -> f64 {
        let penalty = if spurious { self.spurious_penalty } else { 0.0 };
        (self.base - self.noise_penalty * noise_angle - penalty).clamp(0.05, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub center_sigma_px: f64,
    pub center_outlier_rate: f64,
    /// Side of the box around the truth in which outlier centers fall, pixels.
    pub outlier_box_px: f64,
    pub rotation_sigma_deg: f64,
    pub spurious_mode_rate: f64,
    pub spurious_mode: SpuriousMode,
    pub symmetry_aliasing: bool,
    pub confidence: ConfidenceModel,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless(0)
    }
}

impl NoiseModel {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            center_sigma_px: 0.0,
            center_outlier_rate: 0.0,
            outlier_box_px: 200.0,
            rotation_sigma_deg: 0.0,
            spurious_mode_rate: 0.0,
            spurious_mode: SpuriousMode::Uniform,
            symmetry_aliasing: false,
            confidence: ConfidenceModel::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rate = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        rate("center_outlier_rate", self.center_outlier_rate)?;
        rate("spurious_mode_rate", self.spurious_mode_rate)?;
        for (name, v) in [
            ("center_sigma_px", self.center_sigma_px),
            ("rotation_sigma_deg", self.rotation_sigma_deg),
            ("outlier_box_px", self.outlier_box_px),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if let SpuriousMode::Fixed { axis, .. } = self.spurious_mode {
            if Vector3::from(axis).norm() < 1e-9 {
                return Err(Error::InvalidInput("spurious mode axis is zero".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterSample {
    pub u: Pixel2,
    pub sigma: Matrix2<f64>,
    pub outlier: bool,
}

/// Noisy 2D center observation of `truth`.
///
/// Always consumes one uniform and four further variates. The reported
/// covariance is the configured one plus [`SIGMA_FLOOR`], outlier or not.
pub fn simulate_center<R: Rng + ?Sized>(truth: &Pixel2, noise: &NoiseModel, rng: &mut R) -> CenterSample {
    let coin: f64 = rng.random();
    let gx: f64 = rng.sample(StandardNormal);
    let gy: f64 = rng.sample(StandardNormal);
    let half = noise.outlier_box_px / 2.0;
    let ox = rng.random_range(-1.0..=1.0) * half;
    let oy = rng.random_range(-1.0..=1.0) * half;
    let outlier = coin < noise.center_outlier_rate;
    let u = if outlier {
        Pixel2::new(truth.x + ox, truth.y + oy)
    } else {
        let s = noise.center_sigma_px;
        Pixel2::new(truth.x + s * gx, truth.y + s * gy)
    };
    let var = noise.center_sigma_px * noise.center_sigma_px + SIGMA_FLOOR;
    CenterSample {
        u,
        sigma: Matrix2::identity() * var,
        outlier,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSample {
    pub measurement: RotationMeasurement,
    /// Index of the group element applied to the truth.
    pub alias: usize,
    pub noise: Vector3<f64>,
    pub spurious: bool,
}

/// Noisy camera-frame rotation observation of `true_r_co`.
///
/// Draw order: alias index, noise vector, spurious coin, uniform rotation.
pub fn simulate_rotation<R: Rng + ?Sized>(
    frame_id: u64,
    true_r_co: &Rotation3,
    camera_rotation: &Rotation3,
    group: &SymmetryGroup,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<RotationSample> {
    let alias_draw = rng.random_range(0..group.len());
    let eps = gaussian3(rng, noise.rotation_sigma_deg.to_radians());
    let coin: f64 = rng.random();
    let random_rotation = uniform_rotation(rng);

    let alias = if noise.symmetry_aliasing { alias_draw } else { 0 };
    let spurious = coin < noise.spurious_mode_rate;
    let noisy = *true_r_co * group.elements()[alias] * Rotation3::exp(&eps);
    let r_co = match (spurious, noise.spurious_mode) {
        (false, _) => noisy,
        (true, SpuriousMode::Uniform) => random_rotation,
        (true, SpuriousMode::Fixed { axis, angle_deg }) => {
            let axis = Vector3::from(axis).normalize();
            *true_r_co * Rotation3::from_axis_angle(&axis, angle_deg.to_radians()) * Rotation3::exp(&eps)
        }
    };
    let confidence = noise.confidence.confidence(eps.norm(), spurious);
    Ok(RotationSample {
        measurement: RotationMeasurement::new(frame_id, r_co, confidence, *camera_rotation)?,
        alias,
        noise: eps,
        spurious,
    })
}

/// Serialized measurement stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub version: u32,
    pub seed: u64,
    pub models: Vec<ModelInfo>,
    pub frames: Vec<FrameInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub model: usize,
    pub pose: RigidTransform,
    pub diameter: f64,
}

/// Provenance of one emitted detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionSource {
    pub object: usize,
    pub center_outlier: bool,
    pub spurious_rotation: bool,
    pub alias: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub version: u32,
    /// Model definitions, so estimates can be scored without the scene config.
    pub models: Vec<ModelSpec>,
    pub objects: Vec<GroundTruthObject>,
    /// Per frame, the source of each detection in emission order.
    pub detection_sources: Vec<Vec<DetectionSource>>,
}

/// Generates one detection per object per viewpoint.
pub fn generate_session(
    scene: &SceneSpec,
    rig: &CameraRig,
    noise: &NoiseModel,
) -> Result<(Session, GroundTruthRecord)> {
    scene.validate()?;
    noise.validate()?;
    let models = scene.build_models()?;
    let mut frames = Vec::with_capacity(rig.viewpoints.len());
    let mut sources = Vec::with_capacity(rig.viewpoints.len());
    for (k, pose) in rig.viewpoints.iter().enumerate() {
        let frame_id = k as u64;
        let t_cw = pose.inverse();
        let mut detections = Vec::with_capacity(scene.objects.len());
        let mut frame_sources = Vec::with_capacity(scene.objects.len());
        for (j, obj) in scene.objects.iter().enumerate() {
            let model = &models[obj.model];
            let truth = rig
                .project_center(&t_cw, &obj.pose.translation)
                .ok_or(Error::ProjectionOutOfImage { view: k, object: j })?;

            let mut rng = stream_rng(noise.seed, k as u32, j as u32, channel::CENTER);
            let c = simulate_center(&truth, noise, &mut rng);
            let t_co = t_cw.compose(&obj.pose);
            let projected = model
                .points
                .points()
                .iter()
                .filter_map(|p| rig.intrinsics.project(&t_co.transform_point(p)).ok());
            let bbox = BoundingBox::enclosing(projected)
                .ok_or(Error::ProjectionOutOfImage { view: k, object: j })?
                .expanded_to(&c.u);

            let mut rng = stream_rng(noise.seed, k as u32, j as u32, channel::ROTATION);
            let r = simulate_rotation(
                frame_id,
                &t_co.rotation,
                &pose.rotation,
                &model.symmetry,
                noise,
                &mut rng,
            )?;

            detections.push(Detection {
                model: obj.model,
                bbox,
                center: CenterMeasurement::new(frame_id, c.u, c.sigma, *pose, rig.intrinsics)?,
                rotation: Some(r.measurement),
            });
            frame_sources.push(DetectionSource {
                object: j,
                center_outlier: c.outlier,
                spurious_rotation: r.spurious,
                alias: r.alias,
            });
        }
        frames.push(FrameInput {
            frame_id,
            camera_pose: *pose,
            intrinsics: rig.intrinsics,
            detections,
        });
        sources.push(frame_sources);
    }
    let session = Session {
        version: SESSION_VERSION,
        seed: noise.seed,
        models: models.iter().map(BuiltModel::info).collect(),
        frames,
    };
    let truth = GroundTruthRecord {
        version: SESSION_VERSION,
        models: scene.models.clone(),
        objects: scene
            .objects
            .iter()
            .map(|o| GroundTruthObject {
                model: o.model,
                pose: o.pose,
                diameter: models[o.model].points.diameter(),
            })
            .collect(),
        detection_sources: sources,
    };
    Ok((session, truth))
}
