//! Object translation from multi-view 2D center observations.
//!
//! The world-frame object origin `t_wo` is found by minimizing the
//! Huber-robustified Mahalanobis reprojection error of the observed object
//! centers with iteratively reweighted Gauss-Newton. Camera poses are known.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, SymmetricEigen, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, CameraIntrinsics, Pixel2, RigidTransform};

/// One 2D object-center observation with its pixel covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterMeasurement {
    pub frame_id: u64,
    pub u: Pixel2,
    /// Covariance of `u`, pixels².
    pub sigma: Matrix2<f64>,
    /// Camera-to-world pose `T_wc` of the observing camera.
    pub camera_pose: RigidTransform,
    pub intrinsics: CameraIntrinsics,
}

impl CenterMeasurement {
    pub fn new(
        frame_id: u64,
        u: Pixel2,
        sigma: Matrix2<f64>,
        camera_pose: RigidTransform,
        intrinsics: CameraIntrinsics,
    ) -> Result<Self> {
        let m = Self {
            frame_id,
            u,
            sigma,
            camera_pose,
            intrinsics,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks that the covariance is symmetric positive-definite.
    pub fn validate(&self) -> Result<()> {
        let s = &self.sigma;
        if !(self.u.x.is_finite() && self.u.y.is_finite()) {
            return Err(Error::InvalidInput("center is not finite".into()));
        }
        if (s[(0, 1)] - s[(1, 0)]).abs() > 1e-12 * s.norm().max(1.0) {
            return Err(Error::InvalidInput("center covariance is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(*s).eigenvalues;
        if !(eig.min() > 1e-12) {
            return Err(Error::InvalidInput(format!(
                "center covariance is not positive-definite (eigenvalues {:?})",
                eig.as_slice()
            )));
        }
        Ok(())
    }

    pub fn information(&self) -> Matrix2<f64> {
        self.sigma.try_inverse().unwrap_or_else(Matrix2::zeros)
    }

    /// Camera center in world coordinates.
    pub fn camera_center(&self) -> Vector3<f64> {
        self.camera_pose.translation
    }
}

/// Solver settings. Defaults: Huber knee 2.447 on the Mahalanobis norm
/// (square root of the 95% χ² quantile for 2 dof), 50 iterations, 1e-9 m step
/// tolerance, 8 step halvings, divergence after 5 consecutive cost increases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslationConfig {
    pub huber_delta: f64,
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub max_halvings: usize,
    pub max_cost_increases: usize,
    pub max_condition: f64,
}

impl Default for TranslationConfig {
    fn default() -> Self {
        Self {
            huber_delta: 2.447,
            max_iterations: 50,
            step_tolerance: 1e-9,
            max_halvings: 8,
            max_cost_increases: 5,
            max_condition: 1e8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationState {
    pub t_wo: Vector3<f64>,
    /// `Σ wₖ·Jₖᵀ Σₖ⁻¹ Jₖ` at the final linearization, with Huber weights `wₖ`.
    pub info_matrix: Matrix3<f64>,
    pub n_measurements: usize,
    pub converged: bool,
    pub final_cost: f64,
    pub iterations: usize,
    /// Measurements skipped at the final estimate because they lie behind their camera.
    pub skipped: usize,
}

impl TranslationState {
    /// An unconverged state holding an initial guess.
    pub fn initial(t_wo: Vector3<f64>, n_measurements: usize) -> Self {
        Self {
            t_wo,
            info_matrix: Matrix3::zeros(),
            n_measurements,
            converged: false,
            final_cost: 0.0,
            iterations: 0,
            skipped: 0,
        }
    }
}

/// Initial world-frame position from a detection box.
///
/// Depth is `f̄·diameter / diag(bbox)` with `f̄ = (fx + fy)/2`; the box center
/// is back-projected at that depth.
pub fn init_from_bbox(
    bbox: &BoundingBox,
    intrinsics: &CameraIntrinsics,
    camera_pose: &RigidTransform,
    model_diameter: f64,
) -> Result<Vector3<f64>> {
    let diagonal = bbox.diagonal();
    if !(diagonal >= 1.0) {
        return Err(Error::DegenerateBox { diagonal });
    }
    if !(model_diameter > 0.0) {
        return Err(Error::InvalidInput(format!(
            "model diameter must be positive, got {model_diameter}"
        )));
    }
    let depth = intrinsics.mean_focal() * model_diameter / diagonal;
    let t_co = intrinsics.backproject(&bbox.center(), depth)?;
    Ok(camera_pose.transform_point(&t_co))
}

/// Reprojection residual `π(T_wc⁻¹·t_wo) − u`.
pub fn center_residual(t_wo: &Vector3<f64>, m: &CenterMeasurement) -> Result<Vector2<f64>> {
    let p_cam = m.camera_pose.inverse().transform_point(t_wo);
    let u = m.intrinsics.project(&p_cam)?;
    Ok(u.to_vector() - m.u.to_vector())
}

/// Residual together with its Jacobian with respect to `t_wo`.
pub fn center_residual_jacobian(t_wo: &Vector3<f64>, m: &CenterMeasurement) -> Result<(Vector2<f64>, Matrix2x3<f64>)> {
    let r_cw = m.camera_pose.rotation.inverse();
    let p_cam = r_cw.rotate(&(t_wo - m.camera_pose.translation));
    let u = m.intrinsics.project(&p_cam)?;
    let jac = m.intrinsics.project_jacobian(&p_cam) * r_cw.matrix();
    Ok((u.to_vector() - m.u.to_vector(), jac))
}

/// Huber loss of a squared Mahalanobis distance `s`, knee at `sqrt(s) = delta`.
pub fn huber(s: f64, delta: f64) -> f64 {
    let e = s.sqrt();
    if e <= delta {
        s
    } else {
        2.0 * delta * e - delta * delta
    }
}

/// IRLS weight `ρ'(s)` matching [`huber`].
pub fn huber_weight(s: f64, delta: f64) -> f64 {
    let e = s.sqrt();
    if e <= delta {
        1.0
    } else {
        delta / e
    }
}

struct Evaluation {
    cost: f64,
    valid: usize,
}

fn evaluate(t_wo: &Vector3<f64>, measurements: &[CenterMeasurement], delta: f64) -> Evaluation {
    let mut cost = 0.0;
    let mut valid = 0;
    for m in measurements {
        if let Ok(r) = center_residual(t_wo, m) {
            cost += huber(r.dot(&(m.information() * r)), delta);
            valid += 1;
        }
    }
    Evaluation { cost, valid }
}

struct Normal {
    hessian: Matrix3<f64>,
    gradient: Vector3<f64>,
    valid: usize,
}

fn linearize(t_wo: &Vector3<f64>, measurements: &[CenterMeasurement], delta: f64) -> Normal {
    let mut hessian = Matrix3::zeros();
    let mut gradient = Vector3::zeros();
    let mut valid = 0;
    for m in measurements {
        let Ok((r, j)) = center_residual_jacobian(t_wo, m) else {
            continue;
        };
        let info = m.information();
        let w = huber_weight(r.dot(&(info * r)), delta);
        let jt_info = j.transpose() * info;
        hessian += w * jt_info * j;
        gradient += w * jt_info * r;
        valid += 1;
    }
    Normal {
        hessian,
        gradient,
        valid,
    }
}

fn condition_number(h: &Matrix3<f64>) -> f64 {
    let eig = SymmetricEigen::new(*h).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 0.0 || !lo.is_finite() {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Robust Gauss-Newton on all `measurements`, starting at `init`.
pub fn solve(
    measurements: &[CenterMeasurement],
    init: &Vector3<f64>,
    config: &TranslationConfig,
) -> Result<TranslationState> {
    if measurements.len() < 2 {
        return Err(Error::Underdetermined {
            condition: f64::INFINITY,
        });
    }
    let first = measurements[0].camera_center();
    if measurements.iter().all(|m| (m.camera_center() - first).norm() < 1e-9) {
        return Err(Error::Underdetermined {
            condition: f64::INFINITY,
        });
    }

    let delta = config.huber_delta;
    let mut t = *init;
    let mut current = evaluate(&t, measurements, delta);
    let mut increases = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let normal = linearize(&t, measurements, delta);
        let condition = condition_number(&normal.hessian);
        if !(condition <= config.max_condition) {
            return Err(Error::Underdetermined { condition });
        }
        let Some(step) = normal.hessian.cholesky().map(|c| -c.solve(&normal.gradient)) else {
            return Err(Error::Underdetermined { condition });
        };
        if step.norm() < config.step_tolerance {
            t += step;
            current = evaluate(&t, measurements, delta);
            converged = true;
            break;
        }

        let mut scale = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        for _ in 0..=config.max_halvings {
            let candidate = t + step * scale;
            let eval = evaluate(&candidate, measurements, delta);
            // dropping a measurement behind its camera must not count as progress
            if eval.valid >= current.valid && eval.cost <= current.cost {
                accepted = Some((candidate, eval, scale));
                break;
            }
            fallback = Some((candidate, eval, scale));
            scale *= 0.5;
        }
        let (candidate, eval, scale) = match accepted {
            Some(a) => {
                increases = 0;
                a
            }
            None => {
                increases += 1;
                if increases >= config.max_cost_increases {
                    return Err(Error::Diverged { iterations });
                }
                fallback.expect("at least one candidate was evaluated")
            }
        };
        t = candidate;
        current = eval;
        if (step * scale).norm() < config.step_tolerance {
            converged = true;
            break;
        }
    }

    let normal = linearize(&t, measurements, delta);
    Ok(TranslationState {
        t_wo: t,
        info_matrix: normal.hessian,
        n_measurements: measurements.len(),
        converged,
        final_cost: current.cost,
        iterations,
        skipped: measurements.len() - normal.valid,
    })
}

/// Incremental front end: accumulates measurements and re-solves warm-started
/// from the previous estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationEstimator {
    config: TranslationConfig,
    measurements: Vec<CenterMeasurement>,
    state: TranslationState,
}

impl TranslationEstimator {
    pub fn new(init: Vector3<f64>, config: TranslationConfig) -> Self {
        Self {
            config,
            measurements: Vec::new(),
            state: TranslationState::initial(init, 0),
        }
    }

    pub fn state(&self) -> &TranslationState {
        &self.state
    }

    pub fn measurements(&self) -> &[CenterMeasurement] {
        &self.measurements
    }

    pub fn config(&self) -> &TranslationConfig {
        &self.config
    }

    /// Appends `m` and re-solves. With fewer than two measurements the state
    /// stays unconverged at the current guess. On a solver error the previous
    /// state is kept and the error returned.
    pub fn add_measurement(&mut self, m: CenterMeasurement) -> Result<&TranslationState> {
        m.validate()?;
        self.measurements.push(m);
        if self.measurements.len() < 2 {
            self.state = TranslationState::initial(self.state.t_wo, self.measurements.len());
            return Ok(&self.state);
        }
        let solved = solve(&self.measurements, &self.state.t_wo, &self.config)?;
        self.state = solved;
        Ok(&self.state)
    }
}
