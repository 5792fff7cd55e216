//! ADD pose error, the 10%-of-diameter correctness rule and detection rates.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RigidTransform;
use crate::symmetry::SymmetryGroup;

/// Default number of model points.
pub const DEFAULT_MODEL_POINTS: usize = 512;

/// A pose is correct when its ADD is strictly below this fraction of the diameter.
pub const CORRECT_FRACTION: f64 = 0.1;

/// Parametric test shapes, centered on the model origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelShape {
    /// Box with edge lengths along x, y, z (meters).
    Cuboid { size: [f64; 3] },
    /// Cylinder about the model z axis.
    Cylinder { radius: f64, height: f64 },
    /// Ellipsoid with semi-axes along x, y, z.
    Ellipsoid { semi_axes: [f64; 3] },
}

impl ModelShape {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ModelShape::Cuboid { size } => size.iter().all(|s| *s > 0.0),
            ModelShape::Cylinder { radius, height } => *radius > 0.0 && *height > 0.0,
            ModelShape::Ellipsoid { semi_axes } => semi_axes.iter().all(|s| *s > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "shape dimensions must be positive: {self:?}"
            )))
        }
    }

    /// Deterministic surface samples from the Halton sequence (bases 2, 3, 5).
    ///
    /// The first coordinate picks a face (area-weighted), the other two place
    /// the point on it.
    pub fn sample_surface(&self, n: usize) -> Vec<Vector3<f64>> {
        (1..=n)
            .map(|i| {
                let (a, b, c) = (halton(i, 2), halton(i, 3), halton(i, 5));
                self.surface_point(a, b, c)
            })
            .collect()
    }

    fn surface_point(&self, a: f64, b: f64, c: f64) -> Vector3<f64> {
        match *self {
            ModelShape::Cuboid { size: [x, y, z] } => {
                let faces = [y * z, y * z, x * z, x * z, x * y, x * y];
                let total: f64 = faces.iter().sum();
                let mut acc = 0.0;
                let mut face = 5;
                for (i, f) in faces.iter().enumerate() {
                    acc += f / total;
                    if a < acc {
                        face = i;
                        break;
                    }
                }
                let (u, v) = (b - 0.5, c - 0.5);
                let sign = if face % 2 == 0 { 0.5 } else { -0.5 };
                match face / 2 {
                    0 => Vector3::new(sign * x, u * y, v * z),
                    1 => Vector3::new(u * x, sign * y, v * z),
                    _ => Vector3::new(u * x, v * y, sign * z),
                }
            }
            ModelShape::Cylinder { radius, height } => {
                let side = 2.0 * PI * radius * height;
                let cap = PI * radius * radius;
                let total = side + 2.0 * cap;
                let phi = 2.0 * PI * b;
                if a < side / total {
                    Vector3::new(radius * phi.cos(), radius * phi.sin(), (c - 0.5) * height)
                } else {
                    let r = radius * c.sqrt();
                    let z = if a < (side + cap) / total { 0.5 } else { -0.5 } * height;
                    Vector3::new(r * phi.cos(), r * phi.sin(), z)
                }
            }
            ModelShape::Ellipsoid { semi_axes: [x, y, z] } => {
                let cz = 1.0 - 2.0 * b;
                let s = (1.0 - cz * cz).max(0.0).sqrt();
                let phi = 2.0 * PI * c;
                Vector3::new(x * s * phi.cos(), y * s * phi.sin(), z * cz)
            }
        }
    }
}

/// Radical inverse of `i` in `base`.
fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Model point set used by the ADD metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPoints {
    points: Vec<Vector3<f64>>,
    diameter: f64,
}

impl ModelPoints {
    /// Wraps a point set; the diameter is the maximum pairwise distance.
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput("model needs at least two points".into()));
        }
        let diameter = max_pairwise_distance(&points);
        Ok(Self { points, diameter })
    }

    /// Wraps a point set with a declared diameter, which must match within 1e-9.
    pub fn with_diameter(points: Vec<Vector3<f64>>, diameter: f64) -> Result<Self> {
        let m = Self::new(points)?;
        if (m.diameter - diameter).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "declared diameter {diameter} differs from measured {}",
                m.diameter
            )));
        }
        Ok(m)
    }

    pub fn sample(shape: &ModelShape, n: usize) -> Result<Self> {
        shape.validate()?;
        Self::new(shape.sample_surface(n))
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }
}

fn max_pairwise_distance(points: &[Vector3<f64>]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max((a - b).norm_squared());
        }
    }
    best.sqrt()
}

/// Mean distance between corresponding model points under the two poses.
pub fn add_metric(points: &ModelPoints, t_gt: &RigidTransform, t_est: &RigidTransform) -> f64 {
    // rotated parts and translations are differenced separately and averaged
    // with a running mean, so a pure translation offset yields its norm exactly
    let dt = t_gt.translation - t_est.translation;
    let mut mean = 0.0;
    for (i, p) in points.points.iter().enumerate() {
        let d = (t_gt.rotation.rotate(p) - t_est.rotation.rotate(p) + dt).norm();
        mean += (d - mean) / (i + 1) as f64;
    }
    mean
}

/// `add < 0.1·diameter`.
pub fn is_correct(add: f64, diameter: f64) -> bool {
    add < CORRECT_FRACTION * diameter
}

/// ADD minimized over the symmetry group applied to the ground-truth rotation.
pub fn add_symmetric(
    points: &ModelPoints,
    group: &SymmetryGroup,
    t_gt: &RigidTransform,
    t_est: &RigidTransform,
) -> f64 {
    group
        .elements()
        .iter()
        .map(|g| {
            let alt = RigidTransform::new(t_gt.rotation * *g, t_gt.translation);
            add_metric(points, &alt, t_est)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Fraction of `(add, diameter)` pairs that pass [`is_correct`].
pub fn detection_rate(results: &[(f64, f64)]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    let correct = results.iter().filter(|(a, d)| is_correct(*a, *d)).count();
    Ok(correct as f64 / results.len() as f64)
}

/// Percentile bootstrap interval of the mean of `flags` (1 = correct).
pub fn bootstrap_interval(flags: &[bool], resamples: usize, level: f64, seed: u64) -> Result<(f64, f64)> {
    if flags.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = flags.len();
    let mut means: Vec<f64> = (0..resamples.max(1))
        .map(|_| {
            let hits = (0..n).filter(|_| flags[rng.random_range(0..n)]).count();
            hits as f64 / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    let idx = |q: f64| ((q * (means.len() - 1) as f64).round() as usize).min(means.len() - 1);
    Ok((means[idx(tail)], means[idx(1.0 - tail)]))
}
