//! Lie-group and projective primitives shared by the estimators.
//!
//! Rotations are stored as unit quaternions and renormalized after every
//! composition. Tangent vectors are axis-angle vectors in radians.
//!
//! # Logarithm convention
//!
//! [`Rotation3::log`] returns the minimal-angle vector, `‖φ‖ ∈ [0, π]`. The
//! quaternion is first brought to the hemisphere `w ≥ 0`, so the angle comes
//! from `2·atan2(‖v‖, w)` with no singular branch near π. At exactly π
//! (`|w| < 1e-12`) the sign of the axis is chosen so that its first non-zero
//! component is positive: a half turn about z logs to `(0, 0, π)`.

use std::ops::Mul;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points closer to the camera plane than this are treated as behind it.
pub const MIN_DEPTH: f64 = 1e-9;

const SMALL_ANGLE: f64 = 1e-8;

/// Skew-symmetric matrix `[v]×`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct Rotation3(UnitQuaternion<f64>);

impl Rotation3 {
    pub fn identity() -> Self {
        Self(UnitQuaternion::identity())
    }

    /// Exponential map from an axis-angle vector.
    pub fn exp(phi: &Vector3<f64>) -> Self {
        let theta = phi.norm();
        let half = 0.5 * theta;
        let (w, k) = if theta < SMALL_ANGLE {
            (1.0 - theta * theta / 8.0, 0.5 - theta * theta / 48.0)
        } else {
            (half.cos(), half.sin() / theta)
        };
        let q = Quaternion::new(w, k * phi.x, k * phi.y, k * phi.z);
        Self(UnitQuaternion::from_quaternion(q))
    }

    /// Rotation by `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        Self::exp(&(axis * (angle / n)))
    }

    /// Projects an approximately orthonormal matrix onto SO(3).
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(*m);
        Self(UnitQuaternion::from_rotation_matrix(&rot))
    }

    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let q = Quaternion::new(w, x, y, z);
        let n = q.norm();
        if !n.is_finite() || n < 1e-6 {
            return Err(Error::InvalidInput(format!("quaternion norm {n} cannot be normalized")));
        }
        if (n - 1.0).abs() < 1e-12 {
            // already unit: keep the bits so serialized state round-trips exactly
            return Ok(Self(UnitQuaternion::new_unchecked(q)));
        }
        Ok(Self(UnitQuaternion::from_quaternion(q)))
    }

    /// Logarithm map. See the module docs for the branch convention at π.
    pub fn log(&self) -> Vector3<f64> {
        let q = self.0.quaternion();
        let (mut w, mut v) = (q.w, q.imag());
        if w < 0.0 {
            w = -w;
            v = -v;
        }
        let n = v.norm();
        if n < SMALL_ANGLE {
            // atan2(n, w)·2/n expanded around n = 0
            return v * (2.0 / w) * (1.0 - n * n / (3.0 * w * w));
        }
        if w < 1e-12 {
            if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
                if *first < 0.0 {
                    v = -v;
                }
            }
        }
        let theta = 2.0 * n.atan2(w);
        v * (theta / n)
    }

    /// Geodesic angle to the identity, in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let q = self.0.quaternion();
        2.0 * q.imag().norm().atan2(q.w.abs())
    }

    /// Geodesic angle between `self` and `other`, i.e. `angle(self·other⁻¹)`.
    pub fn angle_to(&self, other: &Rotation3) -> f64 {
        (*self * other.inverse()).angle()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    pub fn compose(&self, other: &Rotation3) -> Self {
        let q = self.0.quaternion() * other.0.quaternion();
        Self(UnitQuaternion::from_quaternion(q))
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.transform_vector(v)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.0.to_rotation_matrix().into_inner()
    }

    pub fn quaternion(&self) -> &UnitQuaternion<f64> {
        &self.0
    }

    /// Quaternion coefficients `[w, x, y, z]` in the hemisphere `w ≥ 0`.
    pub fn to_wxyz(&self) -> [f64; 4] {
        let q = self.0.quaternion();
        let s = if q.w < 0.0 { -1.0 } else { 1.0 };
        [s * q.w, s * q.i, s * q.j, s * q.k]
    }
}

impl Default for Rotation3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for Rotation3 {
    type Output = Rotation3;

    fn mul(self, rhs: Rotation3) -> Rotation3 {
        self.compose(&rhs)
    }
}

impl Mul<&Rotation3> for &Rotation3 {
    type Output = Rotation3;

    fn mul(self, rhs: &Rotation3) -> Rotation3 {
        self.compose(rhs)
    }
}

impl From<Rotation3> for [f64; 4] {
    fn from(r: Rotation3) -> Self {
        r.to_wxyz()
    }
}

impl TryFrom<[f64; 4]> for Rotation3 {
    type Error = Error;

    fn try_from(q: [f64; 4]) -> Result<Self> {
        Rotation3::from_quaternion(q[0], q[1], q[2], q[3])
    }
}

/// Inverse of the right Jacobian of SO(3) evaluated at `phi`.
///
/// Satisfies `log(exp(phi)·exp(δ)) ≈ phi + Jr⁻¹(phi)·δ` for small `δ`.
pub fn right_jacobian_inverse(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let k = hat(phi);
    let coeff = if theta < 1e-4 {
        1.0 / 12.0 + theta * theta / 720.0
    } else {
        let s = theta.sin();
        if s.abs() < 1e-9 {
            // at π the series diverges; clamp to the last finite value
            1.0 / (theta * theta)
        } else {
            1.0 / (theta * theta) - (1.0 + theta.cos()) / (2.0 * theta * s)
        }
    };
    Matrix3::identity() + 0.5 * k + coeff * k * k
}

/// An element of SE(3), mapping points from a child frame into a parent frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Rotation3,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn new(rotation: Rotation3, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(Rotation3::identity(), Vector3::zeros())
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(Rotation3::identity(), translation)
    }

    /// Camera-to-world pose of a camera at `eye` looking at `target`.
    ///
    /// The camera looks along +z with +y pointing away from `up` in the image
    /// (image rows grow downward).
    pub fn look_at(eye: &Vector3<f64>, target: &Vector3<f64>, up: &Vector3<f64>) -> Self {
        let z = (target - eye).normalize();
        let mut down = -up + z * up.dot(&z);
        if down.norm() < 1e-9 {
            // viewing along `up`; any perpendicular works
            let alt = if z.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
            down = alt - z * alt.dot(&z);
        }
        let y = down.normalize();
        let x = y.cross(&z);
        let m = Matrix3::from_columns(&[x, y, z]);
        Self::new(Rotation3::from_matrix(&m), *eye)
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        Self::new(
            self.rotation * other.rotation,
            self.rotation.rotate(&other.translation) + self.translation,
        )
    }

    pub fn inverse(&self) -> Self {
        let r_inv = self.rotation.inverse();
        Self::new(r_inv, -r_inv.rotate(&self.translation))
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

/// A pixel coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel2 {
    pub x: f64,
    pub y: f64,
}

impl Pixel2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn distance(&self, other: &Pixel2) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }
}

impl From<Vector2<f64>> for Pixel2 {
    fn from(v: Vector2<f64>) -> Self {
        Self::new(v.x, v.y)
    }
}

/// Axis-aligned image box, pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Pixel2,
    pub max: Pixel2,
}

impl BoundingBox {
    pub fn new(min: Pixel2, max: Pixel2) -> Self {
        Self { min, max }
    }

    pub fn from_center(center: Pixel2, width: f64, height: f64) -> Self {
        Self::new(
            Pixel2::new(center.x - 0.5 * width, center.y - 0.5 * height),
            Pixel2::new(center.x + 0.5 * width, center.y + 0.5 * height),
        )
    }

    /// Smallest box containing every point; `None` for an empty iterator.
    pub fn enclosing<I: IntoIterator<Item = Pixel2>>(points: I) -> Option<Self> {
        points.into_iter().fold(None, |acc, p| {
            Some(match acc {
                None => Self::new(p, p),
                Some(b) => b.expanded_to(&p),
            })
        })
    }

    pub fn expanded_to(&self, p: &Pixel2) -> Self {
        Self::new(
            Pixel2::new(self.min.x.min(p.x), self.min.y.min(p.y)),
            Pixel2::new(self.max.x.max(p.x), self.max.y.max(p.y)),
        )
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Pixel2 {
        Pixel2::new(0.5 * (self.min.x + self.max.x), 0.5 * (self.min.y + self.max.y))
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    /// The box grown by `fraction` of its size on every side.
    pub fn inflated(&self, fraction: f64) -> Self {
        let dx = fraction * self.width();
        let dy = fraction * self.height();
        Self::new(
            Pixel2::new(self.min.x - dx, self.min.y - dy),
            Pixel2::new(self.max.x + dx, self.max.y + dy),
        )
    }

    pub fn contains(&self, p: &Pixel2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Pinhole intrinsics without distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidInput(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy) {
            return Err(Error::InvalidInput(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn mean_focal(&self) -> f64 {
        0.5 * (self.fx + self.fy)
    }

    pub fn principal_point(&self) -> Pixel2 {
        Pixel2::new(self.cx, self.cy)
    }

    pub fn contains(&self, u: &Pixel2) -> bool {
        u.x >= 0.0 && u.y >= 0.0 && u.x < self.width as f64 && u.y < self.height as f64
    }

    /// Perspective projection of a camera-frame point.
    pub fn project(&self, p_cam: &Vector3<f64>) -> Result<Pixel2> {
        if p_cam.z <= MIN_DEPTH {
            return Err(Error::NonPositiveDepth { depth: p_cam.z });
        }
        Ok(Pixel2::new(
            self.fx * p_cam.x / p_cam.z + self.cx,
            self.fy * p_cam.y / p_cam.z + self.cy,
        ))
    }

    /// Jacobian of [`project`](Self::project) with respect to the camera-frame point.
    pub fn project_jacobian(&self, p_cam: &Vector3<f64>) -> nalgebra::Matrix2x3<f64> {
        let iz = 1.0 / p_cam.z;
        let iz2 = iz * iz;
        nalgebra::Matrix2x3::new(
            self.fx * iz,
            0.0,
            -self.fx * p_cam.x * iz2,
            0.0,
            self.fy * iz,
            -self.fy * p_cam.y * iz2,
        )
    }

    /// Back-projects pixel `u` to the camera-frame point at depth `t_z`.
    pub fn backproject(&self, u: &Pixel2, t_z: f64) -> Result<Vector3<f64>> {
        if t_z <= MIN_DEPTH {
            return Err(Error::NonPositiveDepth { depth: t_z });
        }
        Ok(Vector3::new(
            (u.x - self.cx) / self.fx * t_z,
            (u.y - self.cy) / self.fy * t_z,
            t_z,
        ))
    }

    /// Unit-depth ray through pixel `u`, `K⁻¹·[u, 1]`.
    pub fn ray(&self, u: &Pixel2) -> Vector3<f64> {
        Vector3::new((u.x - self.cx) / self.fx, (u.y - self.cy) / self.fy, 1.0)
    }
}

/// Side length of a depth-normalized region of interest.
///
/// A template trained with a `l_r`-pixel RoI at distance `z_r` maps to an RoI
/// of `(z_r / z_s)·l_r` pixels for an object at depth `z_s`.
pub fn roi_side(l_r: f64, z_r: f64, z_s: f64) -> Result<f64> {
    if z_s <= MIN_DEPTH {
        return Err(Error::NonPositiveDepth { depth: z_s });
    }
    if z_r <= MIN_DEPTH {
        return Err(Error::NonPositiveDepth { depth: z_r });
    }
    if l_r <= 0.0 {
        return Err(Error::InvalidInput(format!("RoI side must be positive, got {l_r}")));
    }
    Ok(z_r / z_s * l_r)
}
