//! Experiment configuration (TOML). Unknown keys are rejected everywhere.
//! Angles are given in degrees.
//!
//! ```toml
//! seed_range = [0, 100]          # or: seeds = [1, 2, 3]
//!
//! [scene]
//! random_objects = 5             # or explicit [[scene.objects]] entries
//! min_separation = 0.09
//!
//! [[scene.models]]
//! name = "bolt"
//! shape = { kind = "cylinder", radius = 0.02, height = 0.09 }
//! symmetry = { kind = "revolution", axis = [0.0, 0.0, 1.0] }
//!
//! [rig]
//! radius = 0.8
//! count = 8
//! pattern = { kind = "ring", elevation_deg = 40.0 }
//!
//! [noise]
//! center_sigma_px = 1.0
//! rotation_sigma_deg = 5.0
//! ```

use std::path::PathBuf;

use mvpose::geometry::{CameraIntrinsics, RigidTransform, Rotation3};
use mvpose::nalgebra::Vector3;
use mvpose::rotation::{PruneConfig, RotationConfig};
use mvpose::simulator::{
    CameraRig, ConfidenceModel, ModelSpec, NoiseModel, ObjectSpec, RigSpec, SceneSpec, SpuriousMode, WorkspaceBounds,
};
use mvpose::tracker::{RoiConfig, TrackerConfig};
use mvpose::translation::TranslationConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Half-open seed interval `[start, end)`, alternative to `seeds`.
    #[serde(default)]
    pub seed_range: Option<[u64; 2]>,
    pub scene: SceneConfig,
    #[serde(default)]
    pub camera: CameraConfig,
    #[serde(default)]
    pub rig: RigSpec,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub objects: Vec<ObjectConfig>,
    /// Number of randomly placed objects, drawn per seed.
    #[serde(default)]
    pub random_objects: usize,
    #[serde(default = "default_bounds")]
    pub bounds: WorkspaceBounds,
    #[serde(default = "default_separation")]
    pub min_separation: f64,
}

fn default_bounds() -> WorkspaceBounds {
    WorkspaceBounds::centered(0.12)
}

fn default_separation() -> f64 {
    0.09
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    /// Model name.
    pub model: String,
    pub position: [f64; 3],
    /// Axis-angle vector, degrees.
    #[serde(default)]
    pub rotation_deg: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            fx: 600.0,
            fy: 600.0,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
        }
    }
}

/// Noise model without the seed, which comes from the seed list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub center_sigma_px: f64,
    pub center_outlier_rate: f64,
    pub outlier_box_px: f64,
    pub rotation_sigma_deg: f64,
    pub spurious_mode_rate: f64,
    pub spurious_mode: SpuriousMode,
    pub symmetry_aliasing: bool,
    pub confidence: ConfidenceModel,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let n = NoiseModel::noiseless(0);
        Self {
            center_sigma_px: n.center_sigma_px,
            center_outlier_rate: n.center_outlier_rate,
            outlier_box_px: n.outlier_box_px,
            rotation_sigma_deg: n.rotation_sigma_deg,
            spurious_mode_rate: n.spurious_mode_rate,
            spurious_mode: n.spurious_mode,
            symmetry_aliasing: n.symmetry_aliasing,
            confidence: n.confidence,
        }
    }
}

impl NoiseConfig {
    pub fn model(&self, seed: u64) -> NoiseModel {
        NoiseModel {
            center_sigma_px: self.center_sigma_px,
            center_outlier_rate: self.center_outlier_rate,
            outlier_box_px: self.outlier_box_px,
            rotation_sigma_deg: self.rotation_sigma_deg,
            spurious_mode_rate: self.spurious_mode_rate,
            spurious_mode: self.spurious_mode,
            symmetry_aliasing: self.symmetry_aliasing,
            confidence: self.confidence,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub huber_delta: f64,
    pub translation_max_iterations: usize,
    pub translation_step_tolerance: f64,
    pub gate_px: f64,
    pub acceptance_threshold_deg: f64,
    pub rotation_max_iterations: usize,
    pub rotation_step_tolerance: f64,
    pub refresh_canonicalization: bool,
    /// Drop components below this weight once older than `prune_min_age` frames.
    pub prune_min_weight: Option<f64>,
    pub prune_min_age: u64,
    pub template_side_px: f64,
    pub template_distance: f64,
    pub fallback_depth: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        let t = TranslationConfig::default();
        let r = RotationConfig::default();
        let tr = TrackerConfig::default();
        Self {
            huber_delta: t.huber_delta,
            translation_max_iterations: t.max_iterations,
            translation_step_tolerance: t.step_tolerance,
            gate_px: tr.gate_px,
            acceptance_threshold_deg: r.acceptance_threshold.to_degrees(),
            rotation_max_iterations: r.max_iterations,
            rotation_step_tolerance: r.step_tolerance,
            refresh_canonicalization: r.refresh_canonicalization,
            prune_min_weight: None,
            prune_min_age: PruneConfig::default().min_age,
            template_side_px: tr.roi.template_side_px,
            template_distance: tr.roi.template_distance,
            fallback_depth: tr.fallback_depth,
        }
    }
}

impl EstimatorConfig {
    pub fn tracker(&self) -> TrackerConfig {
        let translation = TranslationConfig {
            huber_delta: self.huber_delta,
            max_iterations: self.translation_max_iterations,
            step_tolerance: self.translation_step_tolerance,
            ..Default::default()
        };
        let rotation = RotationConfig {
            acceptance_threshold: self.acceptance_threshold_deg.to_radians(),
            refresh_canonicalization: self.refresh_canonicalization,
            max_iterations: self.rotation_max_iterations,
            step_tolerance: self.rotation_step_tolerance,
            prune: self.prune_min_weight.map(|min_weight| PruneConfig {
                min_weight,
                min_age: self.prune_min_age,
            }),
            ..Default::default()
        };
        TrackerConfig {
            gate_px: self.gate_px,
            fallback_depth: self.fallback_depth,
            translation,
            rotation,
            roi: RoiConfig {
                template_side_px: self.template_side_px,
                template_distance: self.template_distance,
            },
            record_ingest_log: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// View counts at which poses are scored; the full session is always scored.
    pub checkpoints: Vec<usize>,
    pub bootstrap_resamples: usize,
    pub confidence_level: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            checkpoints: vec![4, 8],
            bootstrap_resamples: 1000,
            confidence_level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    /// Parses and validates; TOML diagnostics carry line, column and key.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seed_list(&self) -> Vec<u64> {
        match self.seed_range {
            Some([a, b]) => (a..b).collect(),
            None => self.seeds.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed_range.is_some() && !self.seeds.is_empty() {
            return Err(config_error("give either `seeds` or `seed_range`, not both"));
        }
        if self.seed_list().is_empty() {
            return Err(config_error("no seeds configured"));
        }
        let s = &self.scene;
        if s.models.is_empty() {
            return Err(config_error("scene.models is empty"));
        }
        for (i, m) in s.models.iter().enumerate() {
            if s.models[..i].iter().any(|o| o.name == m.name) {
                return Err(config_error(format!("duplicate model name `{}`", m.name)));
            }
            m.shape
                .validate()
                .map_err(|e| config_error(format!("model `{}`: {e}", m.name)))?;
            m.symmetry
                .build()
                .map_err(|e| config_error(format!("model `{}`: {e}", m.name)))?;
        }
        match (s.objects.is_empty(), s.random_objects) {
            (true, 0) => return Err(config_error("scene has neither `objects` nor `random_objects`")),
            (false, n) if n > 0 => return Err(config_error("give either `objects` or `random_objects`, not both")),
            _ => {}
        }
        for o in &s.objects {
            self.model_index(&o.model)?;
        }
        self.intrinsics()?;
        self.rig.eye_offsets().map_err(|e| config_error(format!("rig: {e}")))?;
        self.noise
            .model(0)
            .validate()
            .map_err(|e| config_error(format!("noise: {e}")))?;
        let e = &self.estimator;
        if !(e.huber_delta > 0.0 && e.gate_px > 0.0 && e.acceptance_threshold_deg > 0.0) {
            return Err(config_error("estimator thresholds must be positive"));
        }
        if !(e.acceptance_threshold_deg <= 180.0) {
            return Err(config_error("estimator.acceptance_threshold_deg exceeds 180"));
        }
        if self.evaluation.checkpoints.contains(&0) {
            return Err(config_error("evaluation.checkpoints must be positive"));
        }
        if !(self.evaluation.confidence_level > 0.0 && self.evaluation.confidence_level < 1.0) {
            return Err(config_error("evaluation.confidence_level must lie in (0, 1)"));
        }
        Ok(())
    }

    fn model_index(&self, name: &str) -> Result<usize> {
        self.scene
            .models
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| config_error(format!("unknown model `{name}`")))
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics> {
        let c = &self.camera;
        CameraIntrinsics::new(c.fx, c.fy, c.cx, c.cy, c.width, c.height)
            .map_err(|e| config_error(format!("camera: {e}")))
    }

    /// Scene for one seed: explicit objects, or a seeded random placement.
    pub fn scene(&self, seed: u64) -> Result<SceneSpec> {
        let s = &self.scene;
        let scene = if s.random_objects > 0 {
            SceneSpec::random(s.models.clone(), s.random_objects, s.bounds, s.min_separation, seed)?
        } else {
            let objects = s
                .objects
                .iter()
                .map(|o| {
                    let rv = Vector3::from(o.rotation_deg).map(f64::to_radians);
                    Ok(ObjectSpec {
                        model: self.model_index(&o.model)?,
                        pose: RigidTransform::new(Rotation3::exp(&rv), Vector3::from(o.position)),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            SceneSpec {
                models: s.models.clone(),
                objects,
                bounds: s.bounds,
            }
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn rig(&self, scene: &SceneSpec) -> Result<CameraRig> {
        Ok(CameraRig::from_spec(self.intrinsics()?, &self.rig, scene)?)
    }
}

/// Hex SHA-256 of raw config bytes.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seeds = [1]

[scene]
random_objects = 1

[[scene.models]]
name = "block"
shape = { kind = "cuboid", size = [0.06, 0.04, 0.03] }
"#;

    #[test]
    fn minimal_config_uses_documented_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.rig, RigSpec::default());
        assert_eq!(c.camera, CameraConfig::default());
        assert_eq!(c.estimator.tracker(), TrackerConfig::default());
        assert_eq!(c.noise.model(1), NoiseModel::noiseless(1));
        assert_eq!(c.evaluation.checkpoints, vec![4, 8]);
        assert_eq!(c.scene.models[0].points, 512);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = MINIMAL.replace("random_objects = 1", "random_objects = 1\nbogus = 3");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn seeds_and_range_are_exclusive() {
        let text = MINIMAL.replace("seeds = [1]", "seeds = [1]\nseed_range = [0, 4]");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = MINIMAL.replace("seeds = [1]", "seed_range = [2, 5]");
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap().seed_list(), vec![2, 3, 4]);
    }

    #[test]
    fn explicit_objects_resolve_model_names() {
        let text = MINIMAL.replace(
            "random_objects = 1",
            "objects = [{ model = \"block\", position = [0.01, 0.0, 0.0], rotation_deg = [0.0, 0.0, 90.0] }]",
        );
        let c = ExperimentConfig::from_toml(&text).unwrap();
        let scene = c.scene(1).unwrap();
        let r = scene.objects[0].pose.rotation;
        assert!((r.angle() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let bad = text.replace("model = \"block\"", "model = \"nope\"");
        assert!(ExperimentConfig::from_toml(&bad)
            .unwrap_err()
            .to_string()
            .contains("nope"));
    }

    #[test]
    fn bundled_reference_config_parses() {
        let c = ExperimentConfig::from_toml(crate::REFERENCE_CONFIG).unwrap();
        assert_eq!(c.seed_list().len(), 100);
        assert_eq!(c.scene.random_objects, 5);
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::from_toml(crate::REFERENCE_CONFIG).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
