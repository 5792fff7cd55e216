//! Multi-view 6D object pose estimation.
//!
//! Poses are estimated in two decoupled steps. The object translation is
//! triangulated from per-view 2D center observations with a robust
//! Gauss-Newton solver ([`translation`]). With the translation fixed, per-view
//! rotation measurements are fused into a max-mixture of modes on SO(3) that
//! accounts for the object's rotational symmetries ([`rotation`],
//! [`symmetry`]). The [`tracker`] drives both steps frame by frame,
//! [`simulator`] produces deterministic synthetic measurement streams and
//! [`evaluation`] scores estimates with the ADD metric.
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod rotation;
pub mod simulator;
pub mod symmetry;
pub mod tracker;
pub mod translation;

pub use error::{Error, Result};
pub use evaluation::{ModelPoints, ModelShape};
pub use geometry::{BoundingBox, CameraIntrinsics, Pixel2, RigidTransform, Rotation3};
pub use rotation::{Assignment, MixtureComponent, RotationConfig, RotationMeasurement, RotationMixtureState};
pub use simulator::{CameraRig, GroundTruthRecord, NoiseModel, SceneSpec, Session};
pub use symmetry::{SymmetryGroup, SymmetrySpec};
pub use tracker::{Detection, FrameInput, ModelInfo, PoseEstimate, Tracker, TrackerConfig};
pub use translation::{CenterMeasurement, TranslationConfig, TranslationEstimator, TranslationState};

pub use nalgebra;
