//! Rotational symmetry groups and measurement canonicalization.
//!
//! A symmetry element `G` acts on the right of an object rotation: `R·G`
//! describes the same appearance as `R` because `G` only re-labels the object
//! model frame.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rotation3;

/// Angular tolerance for identity, duplicate and closure checks.
pub const GROUP_TOLERANCE: f64 = 1e-6;

/// Default discretization of a continuous revolution symmetry (10° steps).
pub const DEFAULT_REVOLUTION_STEPS: u32 = 36;

const MAX_GROUP_SIZE: usize = 4096;

/// A finite group of model-frame rotations. Element 0 is always the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryGroup {
    elements: Vec<Rotation3>,
}

impl Default for SymmetryGroup {
    fn default() -> Self {
        Self::trivial()
    }
}

impl SymmetryGroup {
    /// The group containing only the identity (asymmetric object).
    pub fn trivial() -> Self {
        Self {
            elements: vec![Rotation3::identity()],
        }
    }

    /// `{exp(axis·2πj/order) : j = 0..order}`.
    pub fn cyclic(axis: &Vector3<f64>, order: i64) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidOrder(order));
        }
        check_unit_axis(axis)?;
        let elements = (0..order)
            .map(|j| Rotation3::exp(&(axis * (2.0 * PI * j as f64 / order as f64))))
            .collect();
        Ok(Self { elements })
    }

    /// Surface of revolution about `axis`, discretized into `steps` elements.
    pub fn revolution(axis: &Vector3<f64>, steps: u32) -> Result<Self> {
        Self::cyclic(axis, steps as i64)
    }

    /// The group generated by a set of cyclic generators, closed by repeated
    /// multiplication.
    pub fn generated(generators: &[(Vector3<f64>, i64)]) -> Result<Self> {
        let mut seeds = Vec::new();
        for (axis, order) in generators {
            seeds.extend(Self::cyclic(axis, *order)?.elements.into_iter().skip(1));
        }
        let mut elements = vec![Rotation3::identity()];
        let mut frontier = 0;
        while frontier < elements.len() {
            let current = elements[frontier];
            for g in &seeds {
                let candidate = current * *g;
                if index_of(&elements, &candidate).is_none() {
                    elements.push(candidate);
                    if elements.len() > MAX_GROUP_SIZE {
                        return Err(Error::InvalidSymmetry(format!(
                            "generators do not close within {MAX_GROUP_SIZE} elements"
                        )));
                    }
                }
            }
            frontier += 1;
        }
        Ok(Self { elements })
    }

    /// An explicit element list; it must contain the identity, be free of
    /// duplicates and be closed under composition.
    pub fn from_elements(elements: Vec<Rotation3>) -> Result<Self> {
        let Some(id_pos) = elements.iter().position(|g| g.angle() < GROUP_TOLERANCE) else {
            return Err(Error::InvalidSymmetry("identity is missing".into()));
        };
        for (i, a) in elements.iter().enumerate() {
            if elements[..i].iter().any(|b| a.angle_to(b) < GROUP_TOLERANCE) {
                return Err(Error::InvalidSymmetry(format!("element {i} is a duplicate")));
            }
        }
        let mut elements = elements;
        elements.swap(0, id_pos);
        elements[0] = Rotation3::identity();
        for a in &elements {
            for b in &elements {
                if index_of(&elements, &(*a * *b)).is_none() {
                    return Err(Error::InvalidSymmetry(
                        "elements are not closed under composition".into(),
                    ));
                }
            }
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[Rotation3] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    /// Index of the element matching `g` within [`GROUP_TOLERANCE`].
    pub fn index_of(&self, g: &Rotation3) -> Option<usize> {
        index_of(&self.elements, g)
    }

    /// The orbit `{R_co·G_j}` in element order.
    pub fn equivalent_rotations(&self, r_co: &Rotation3) -> Vec<Rotation3> {
        self.elements.iter().map(|g| *r_co * *g).collect()
    }

    /// The orbit member of `measured` closest to `predicted`, with its angle.
    ///
    /// Ties resolve to the lowest element index.
    pub fn canonicalize(&self, measured: &Rotation3, predicted: &Rotation3) -> (Rotation3, f64) {
        let (idx, angle) = self.closest_element(measured, predicted);
        (*measured * self.elements[idx], angle)
    }

    /// Index of the element `G` minimizing `angle(measured·G·predicted⁻¹)`.
    pub fn closest_element(&self, measured: &Rotation3, predicted: &Rotation3) -> (usize, f64) {
        let pred_inv = predicted.inverse();
        let mut best = (0, f64::INFINITY);
        for (j, g) in self.elements.iter().enumerate() {
            let angle = (*measured * *g * pred_inv).angle();
            if angle < best.1 {
                best = (j, angle);
            }
        }
        best
    }

    /// `min_G angle(R_a·G·R_b⁻¹)`.
    pub fn symmetry_aware_angle(&self, r_a: &Rotation3, r_b: &Rotation3) -> f64 {
        self.closest_element(r_a, r_b).1
    }
}

fn check_unit_axis(axis: &Vector3<f64>) -> Result<()> {
    if (axis.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSymmetry(format!(
            "axis must be a unit vector, got norm {}",
            axis.norm()
        )));
    }
    Ok(())
}

fn index_of(elements: &[Rotation3], g: &Rotation3) -> Option<usize> {
    elements.iter().position(|e| e.angle_to(g) < GROUP_TOLERANCE)
}

/// Serializable description of a symmetry group, as written in scene configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymmetrySpec {
    #[default]
    None,
    Cyclic {
        axis: [f64; 3],
        order: i64,
    },
    Revolution {
        axis: [f64; 3],
        #[serde(default = "default_steps")]
        steps: u32,
    },
    Generators {
        generators: Vec<CyclicGenerator>,
    },
    /// Elements given as axis-angle vectors in degrees.
    Explicit {
        rotations_deg: Vec<[f64; 3]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyclicGenerator {
    pub axis: [f64; 3],
    pub order: i64,
}

fn default_steps() -> u32 {
    DEFAULT_REVOLUTION_STEPS
}

fn unit(axis: [f64; 3]) -> Result<Vector3<f64>> {
    let v = Vector3::from(axis);
    let n = v.norm();
    if !(n > 1e-12) || !n.is_finite() {
        return Err(Error::InvalidSymmetry(format!("degenerate axis {axis:?}")));
    }
    Ok(v / n)
}

impl SymmetrySpec {
    /// Builds the group. Axes are normalized before use.
    pub fn build(&self) -> Result<SymmetryGroup> {
        match self {
            SymmetrySpec::None => Ok(SymmetryGroup::trivial()),
            SymmetrySpec::Cyclic { axis, order } => SymmetryGroup::cyclic(&unit(*axis)?, *order),
            SymmetrySpec::Revolution { axis, steps } => SymmetryGroup::revolution(&unit(*axis)?, *steps),
            SymmetrySpec::Generators { generators } => {
                let gens = generators
                    .iter()
                    .map(|g| Ok((unit(g.axis)?, g.order)))
                    .collect::<Result<Vec<_>>>()?;
                SymmetryGroup::generated(&gens)
            }
            SymmetrySpec::Explicit { rotations_deg } => SymmetryGroup::from_elements(
                rotations_deg
                    .iter()
                    .map(|v| Rotation3::exp(&(Vector3::from(*v) * PI / 180.0)))
                    .collect(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn z2() -> SymmetryGroup {
        SymmetryGroup::cyclic(&Vector3::z(), 2).unwrap()
    }

    fn rz(a: f64) -> Rotation3 {
        Rotation3::exp(&(Vector3::z() * a))
    }

    #[test]
    fn cyclic_order_one_is_trivial() {
        let g = SymmetryGroup::cyclic(&Vector3::z(), 1).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.elements()[0].angle(), 0.0);
    }

    #[test]
    fn cyclic_order_two_about_z() {
        let g = z2();
        assert_eq!(g.len(), 2);
        assert_eq!(g.elements()[0].angle(), 0.0);
        assert!(g.elements()[1].angle_to(&rz(PI)) < 1e-12);
    }

    #[test]
    fn invalid_order_and_axis() {
        assert_eq!(SymmetryGroup::cyclic(&Vector3::z(), 0), Err(Error::InvalidOrder(0)));
        assert_eq!(SymmetryGroup::cyclic(&Vector3::z(), -3), Err(Error::InvalidOrder(-3)));
        assert!(SymmetryGroup::cyclic(&Vector3::new(0.0, 0.0, 2.0), 2).is_err());
    }

    #[test]
    fn cyclic_four_is_closed() {
        let g = SymmetryGroup::cyclic(&Vector3::z(), 4).unwrap();
        for a in g.elements() {
            for b in g.elements() {
                let c = *a * *b;
                assert!(g.elements().iter().any(|e| e.angle_to(&c) < GROUP_TOLERANCE));
            }
        }
    }

    #[test]
    fn generated_dihedral_group_has_four_elements() {
        let g = SymmetryGroup::generated(&[(Vector3::z(), 2), (Vector3::x(), 2)]).unwrap();
        assert_eq!(g.len(), 4);
        let g = SymmetryGroup::generated(&[(Vector3::z(), 4), (Vector3::x(), 2)]).unwrap();
        assert_eq!(g.len(), 8);
        assert!(SymmetryGroup::from_elements(g.elements().to_vec()).is_ok());
    }

    #[test]
    fn from_elements_validates() {
        assert!(SymmetryGroup::from_elements(vec![rz(PI)]).is_err());
        assert!(SymmetryGroup::from_elements(vec![Rotation3::identity(), rz(PI), rz(PI)]).is_err());
        assert!(SymmetryGroup::from_elements(vec![Rotation3::identity(), rz(PI / 2.0)]).is_err());
        let g = SymmetryGroup::from_elements(vec![rz(PI), Rotation3::identity()]).unwrap();
        assert_eq!(g.elements()[0].angle(), 0.0);
    }

    #[test]
    fn equivalent_rotations_examples() {
        let r = Rotation3::exp(&Vector3::new(0.2, 0.1, -0.4));
        assert_eq!(SymmetryGroup::trivial().equivalent_rotations(&r), vec![r]);
        let orbit = z2().equivalent_rotations(&Rotation3::identity());
        assert_eq!(orbit.len(), 2);
        assert!(orbit[1].angle_to(&rz(PI)) < 1e-12);
        for member in z2().equivalent_rotations(&r) {
            assert!(z2().symmetry_aware_angle(&member, &r) < 1e-9);
        }
    }

    #[test]
    fn canonicalize_with_trivial_group_returns_measurement() {
        let meas = Rotation3::exp(&Vector3::new(0.3, 0.0, 0.1));
        let pred = Rotation3::exp(&Vector3::new(-0.1, 0.2, 0.0));
        let (r, a) = SymmetryGroup::trivial().canonicalize(&meas, &pred);
        assert_eq!(r, meas);
        assert_relative_eq!(a, meas.angle_to(&pred), epsilon = 1e-15);
    }

    #[test]
    fn canonicalize_recovers_prediction_from_flipped_measurement() {
        let pred = Rotation3::exp(&Vector3::new(0.5, -0.3, 0.8));
        let meas = pred * rz(PI);
        // brute force over both elements: identity gives π, the flip gives 0
        assert_relative_eq!(meas.angle_to(&pred), PI, epsilon = 1e-9);
        assert!((meas * rz(PI)).angle_to(&pred) < 1e-9);
        let (r, a) = z2().canonicalize(&meas, &pred);
        assert!(r.angle_to(&pred) < 1e-9);
        assert!(a < 1e-9);
    }

    #[test]
    fn canonicalize_ties_pick_lowest_index() {
        // a quarter turn sits exactly between identity and the half turn
        let pred = Rotation3::identity();
        let meas = rz(PI / 2.0);
        let g = z2();
        let (idx, _) = g.closest_element(&meas, &pred);
        let a0 = meas.angle_to(&pred);
        let a1 = (meas * g.elements()[1]).angle_to(&pred);
        if (a0 - a1).abs() == 0.0 {
            assert_eq!(idx, 0);
        } else {
            assert_eq!(idx, if a0 < a1 { 0 } else { 1 });
        }
    }

    #[test]
    fn spec_builds_expected_groups() {
        assert_eq!(SymmetrySpec::None.build().unwrap().len(), 1);
        let rev = SymmetrySpec::Revolution {
            axis: [0.0, 0.0, 2.0],
            steps: 36,
        }
        .build()
        .unwrap();
        assert_eq!(rev.len(), 36);
        let explicit = SymmetrySpec::Explicit {
            rotations_deg: vec![[0.0, 0.0, 0.0], [0.0, 0.0, 180.0]],
        }
        .build()
        .unwrap();
        assert_eq!(explicit.len(), 2);
        assert!(SymmetrySpec::Cyclic {
            axis: [0.0, 0.0, 0.0],
            order: 2
        }
        .build()
        .is_err());
    }

    fn arb_rotation() -> impl Strategy<Value = Rotation3> {
        proptest::array::uniform3(-2.0f64..2.0).prop_map(|v| Rotation3::exp(&Vector3::from(v)))
    }

    proptest! {
        #[test]
        fn cyclic_size_equals_order(order in 1i64..40) {
            let g = SymmetryGroup::cyclic(&Vector3::x(), order).unwrap();
            prop_assert_eq!(g.len(), order as usize);
        }

        #[test]
        fn canonicalize_properties(meas in arb_rotation(), pred in arb_rotation(), order in 1i64..7) {
            let g = SymmetryGroup::cyclic(&Vector3::new(0.0, 0.6, 0.8), order).unwrap();
            let (r, angle) = g.canonicalize(&meas, &pred);
            prop_assert!(angle <= meas.angle_to(&pred) + 1e-12);
            prop_assert!((angle - g.symmetry_aware_angle(&meas, &pred)).abs() < 1e-12);
            prop_assert!((r.angle_to(&pred) - angle).abs() < 1e-9);
            let (again, _) = g.canonicalize(&r, &pred);
            prop_assert!(again.angle_to(&r) < 1e-9);
        }

        #[test]
        fn symmetry_aware_angle_ignores_orbit(a in arb_rotation(), b in arb_rotation(), j in 0usize..4) {
            let g = SymmetryGroup::cyclic(&Vector3::y(), 4).unwrap();
            let ga = a * g.elements()[j];
            prop_assert!(g.symmetry_aware_angle(&ga, &a) < 1e-9);
            prop_assert!(g.symmetry_aware_angle(&a, &b) <= a.angle_to(&b) + 1e-12);
            prop_assert!((g.symmetry_aware_angle(&ga, &b) - g.symmetry_aware_angle(&a, &b)).abs() < 1e-9);
        }
    }
}
