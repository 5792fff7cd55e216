//! Object rotation as a max-mixture of modes on SO(3).
//!
//! Each per-view rotation measurement `R_co` is compared against every
//! component's predicted camera-frame rotation `R_wc⁻¹·μ_i` after symmetry
//! canonicalization. The closest component takes the measurement when the
//! angle is below the acceptance threshold (30° by default); otherwise the
//! measurement opens a new component. Component means are refined by
//! confidence-weighted Gauss-Newton in the tangent space, and component
//! weights are the normalized accumulated confidences `w_i = c_i / Σ c_j`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{right_jacobian_inverse, Rotation3};
use crate::symmetry::SymmetryGroup;

/// One per-view rotation measurement of an object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationMeasurement {
    pub frame_id: u64,
    /// Object rotation in the camera frame, `R_co`.
    pub r_co: Rotation3,
    /// Matching confidence in `(0, 1]`.
    pub confidence: f64,
    /// Camera rotation in the world frame, `R_wc`.
    pub camera_rotation: Rotation3,
}

impl RotationMeasurement {
    pub fn new(frame_id: u64, r_co: Rotation3, confidence: f64, camera_rotation: Rotation3) -> Result<Self> {
        let m = Self {
            frame_id,
            r_co,
            confidence,
            camera_rotation,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "rotation confidence must lie in (0, 1], got {}",
                self.confidence
            )));
        }
        Ok(())
    }

    /// Measurement model `h(R_wo) = R_wc⁻¹·R_wo`.
    pub fn predict(&self, r_wo: &Rotation3) -> Rotation3 {
        self.camera_rotation.inverse() * *r_wo
    }

    /// The measurement lifted to the world frame, `R_wc·R_co`.
    pub fn world_rotation(&self) -> Rotation3 {
        self.camera_rotation * self.r_co
    }
}

/// Residual `log(R̄_co·h(R_wo)⁻¹)` for an already canonicalized measurement.
pub fn rotation_residual(r_wo: &Rotation3, canonical: &Rotation3, camera_rotation: &Rotation3) -> Vector3<f64> {
    (*canonical * r_wo.inverse() * *camera_rotation).log()
}

/// Residual and its Jacobian for the right perturbation `R_wo·exp(δ)`.
///
/// `log(R̄·exp(−δ)·R_wo⁻¹·R_wc) = log(E·exp(−Bᵀδ))` with `B = R_wo⁻¹·R_wc`,
/// so `J = −Jr⁻¹(r)·Bᵀ`.
pub fn rotation_residual_jacobian(
    r_wo: &Rotation3,
    canonical: &Rotation3,
    camera_rotation: &Rotation3,
) -> (Vector3<f64>, Matrix3<f64>) {
    let r = rotation_residual(r_wo, canonical, camera_rotation);
    let b = (r_wo.inverse() * *camera_rotation).matrix();
    (r, -right_jacobian_inverse(&r) * b.transpose())
}

/// A measurement held by a component with its symmetry-canonicalized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub measurement: RotationMeasurement,
    pub canonical: Rotation3,
}

/// One mode of the rotation posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    /// Mode mean as a world-frame object rotation `R_wo`.
    pub mean: Rotation3,
    pub accumulated_confidence: f64,
    pub weight: f64,
    pub members: Vec<Member>,
    /// `Jᵀ Λ J` at the last refinement; diagnostic only.
    pub info_matrix: Matrix3<f64>,
    pub last_frame: u64,
}

impl MixtureComponent {
    fn from_measurement(m: RotationMeasurement) -> Self {
        Self {
            mean: m.world_rotation(),
            accumulated_confidence: m.confidence,
            weight: 0.0,
            info_matrix: Matrix3::identity() * m.confidence,
            last_frame: m.frame_id,
            members: vec![Member {
                canonical: m.r_co,
                measurement: m,
            }],
        }
    }

    /// Confidence-weighted squared residual norm at `mean`.
    pub fn cost(&self, group: &SymmetryGroup, refresh: bool) -> f64 {
        weighted_cost(&self.members, &self.mean, group, refresh)
    }
}

/// Canonicalized angle between `m` and the component prediction.
pub fn angle_to_component(m: &RotationMeasurement, comp: &MixtureComponent, group: &SymmetryGroup) -> f64 {
    group.canonicalize(&m.r_co, &m.predict(&comp.mean)).1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assignment {
    Component(usize),
    NewComponent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PruneConfig {
    pub min_weight: f64,
    /// Frames since the component last received a measurement.
    pub min_age: u64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            min_weight: 0.01,
            min_age: 10,
        }
    }
}

/// Rotation fusion settings; angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationConfig {
    pub acceptance_threshold: f64,
    /// Re-run canonicalization at every Gauss-Newton iteration. When false,
    /// each member keeps the orbit element chosen when it arrived.
    pub refresh_canonicalization: bool,
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub max_halvings: usize,
    pub max_cost_increases: usize,
    pub prune: Option<PruneConfig>,
}

impl Default for RotationConfig {
    fn default() -> Self {
        Self {
            acceptance_threshold: 30f64.to_radians(),
            refresh_canonicalization: true,
            max_iterations: 50,
            step_tolerance: 1e-9,
            max_halvings: 8,
            max_cost_increases: 5,
            prune: None,
        }
    }
}

/// Outcome of [`refine_component`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineReport {
    pub iterations: usize,
    pub converged: bool,
    pub initial_cost: f64,
    pub final_cost: f64,
}

fn canonical_for(member: &Member, mean: &Rotation3, group: &SymmetryGroup, refresh: bool) -> Rotation3 {
    if refresh {
        group
            .canonicalize(&member.measurement.r_co, &member.measurement.predict(mean))
            .0
    } else {
        member.canonical
    }
}

fn weighted_cost(members: &[Member], mean: &Rotation3, group: &SymmetryGroup, refresh: bool) -> f64 {
    members
        .iter()
        .map(|mem| {
            let canonical = canonical_for(mem, mean, group, refresh);
            let r = rotation_residual(mean, &canonical, &mem.measurement.camera_rotation);
            mem.measurement.confidence * r.norm_squared()
        })
        .sum()
}

/// Refines the component mean by tangent-space Gauss-Newton with
/// block-diagonal weights `c_k·I₃`.
pub fn refine_component(
    comp: &mut MixtureComponent,
    group: &SymmetryGroup,
    config: &RotationConfig,
) -> Result<RefineReport> {
    if comp.members.is_empty() {
        return Err(Error::EmptyState);
    }
    let refresh = config.refresh_canonicalization;
    let mut mean = comp.mean;
    let initial_cost = weighted_cost(&comp.members, &mean, group, refresh);
    let mut cost = initial_cost;
    let mut increases = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let mut h = Matrix3::zeros();
        let mut g = Vector3::zeros();
        for mem in comp.members.iter_mut() {
            mem.canonical = canonical_for(mem, &mean, group, refresh);
            let (r, j) = rotation_residual_jacobian(&mean, &mem.canonical, &mem.measurement.camera_rotation);
            let c = mem.measurement.confidence;
            h += c * j.transpose() * j;
            g += c * j.transpose() * r;
        }
        let Some(step) = h.cholesky().map(|ch| -ch.solve(&g)) else {
            break;
        };
        if step.norm() < config.step_tolerance {
            mean = mean * Rotation3::exp(&step);
            converged = true;
            break;
        }
        let mut scale = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        for _ in 0..=config.max_halvings {
            let candidate = mean * Rotation3::exp(&(step * scale));
            let c = weighted_cost(&comp.members, &candidate, group, refresh);
            if c <= cost {
                accepted = Some((candidate, c, scale));
                break;
            }
            fallback = Some((candidate, c, scale));
            scale *= 0.5;
        }
        let (candidate, c, scale) = match accepted {
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
        mean = candidate;
        cost = c;
        if (step * scale).norm() < config.step_tolerance {
            converged = true;
            break;
        }
    }

    let mut info = Matrix3::zeros();
    for mem in comp.members.iter_mut() {
        mem.canonical = canonical_for(mem, &mean, group, refresh);
        let (_, j) = rotation_residual_jacobian(&mean, &mem.canonical, &mem.measurement.camera_rotation);
        info += mem.measurement.confidence * j.transpose() * j;
    }
    comp.mean = mean;
    comp.info_matrix = info;
    let final_cost = weighted_cost(&comp.members, &mean, group, refresh);
    Ok(RefineReport {
        iterations,
        converged,
        initial_cost,
        final_cost,
    })
}

/// The mixture of rotation modes for one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationMixtureState {
    pub components: Vec<MixtureComponent>,
    pub config: RotationConfig,
}

impl Default for RotationMixtureState {
    fn default() -> Self {
        Self::new(RotationConfig::default())
    }
}

impl RotationMixtureState {
    pub fn new(config: RotationConfig) -> Self {
        Self {
            components: Vec::new(),
            config,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn measurement_count(&self) -> usize {
        self.components.iter().map(|c| c.members.len()).sum()
    }

    /// Max-mixture selection: the closest component if it is within the
    /// acceptance threshold. Ties go to the lowest index.
    pub fn assign(&self, m: &RotationMeasurement, group: &SymmetryGroup) -> Assignment {
        let mut best: Option<(usize, f64)> = None;
        for (i, comp) in self.components.iter().enumerate() {
            let angle = angle_to_component(m, comp, group);
            if best.is_none_or(|(_, a)| angle < a) {
                best = Some((i, angle));
            }
        }
        match best {
            Some((i, angle)) if angle < self.config.acceptance_threshold => Assignment::Component(i),
            _ => Assignment::NewComponent,
        }
    }

    /// Adds a measurement. On a refinement failure the component keeps its
    /// previous mean, the measurement stays recorded and the error is returned.
    pub fn ingest(&mut self, m: RotationMeasurement, group: &SymmetryGroup) -> Result<Assignment> {
        m.validate()?;
        let assignment = self.assign(&m, group);
        let frame = m.frame_id;
        let mut outcome = Ok(assignment);
        match assignment {
            Assignment::NewComponent => self.components.push(MixtureComponent::from_measurement(m)),
            Assignment::Component(i) => {
                let config = self.config;
                let comp = &mut self.components[i];
                let canonical = group.canonicalize(&m.r_co, &m.predict(&comp.mean)).0;
                comp.accumulated_confidence += m.confidence;
                comp.last_frame = frame;
                comp.members.push(Member {
                    measurement: m,
                    canonical,
                });
                let before = comp.mean;
                if let Err(e) = refine_component(comp, group, &config) {
                    comp.mean = before;
                    outcome = Err(e);
                }
            }
        }
        self.update_weights();
        if let Some(prune) = self.config.prune {
            self.prune(frame, &prune);
        }
        outcome
    }

    fn update_weights(&mut self) {
        let total: f64 = self.components.iter().map(|c| c.accumulated_confidence).sum();
        for c in &mut self.components {
            c.weight = if total > 0.0 {
                c.accumulated_confidence / total
            } else {
                0.0
            };
        }
    }

    fn prune(&mut self, frame: u64, prune: &PruneConfig) {
        let before = self.components.len();
        self.components
            .retain(|c| !(c.weight < prune.min_weight && frame.saturating_sub(c.last_frame) > prune.min_age));
        if self.components.len() != before {
            self.update_weights();
        }
    }

    /// Index of the maximum-weight component (lowest index on ties).
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.components.iter().enumerate() {
            if best.is_none_or(|(_, w)| c.weight > w) {
                best = Some((i, c.weight));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Mean and weight of the maximum-weight component.
    pub fn map_estimate(&self) -> Result<(Rotation3, f64)> {
        let i = self.best_index().ok_or(Error::EmptyState)?;
        let c = &self.components[i];
        Ok((c.mean, c.weight))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn rot(v: [f64; 3]) -> Rotation3 {
        Rotation3::exp(&Vector3::from(v))
    }

    fn meas(frame: u64, r_co: Rotation3, c: f64, cam: Rotation3) -> RotationMeasurement {
        RotationMeasurement::new(frame, r_co, c, cam).unwrap()
    }

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn confidence_must_be_in_unit_interval() {
        assert!(RotationMeasurement::new(0, Rotation3::identity(), 0.0, Rotation3::identity()).is_err());
        assert!(RotationMeasurement::new(0, Rotation3::identity(), 1.2, Rotation3::identity()).is_err());
        assert!(RotationMeasurement::new(0, Rotation3::identity(), 1.0, Rotation3::identity()).is_ok());
    }

    #[test]
    fn angle_to_component_examples() {
        let cam = rot([0.3, -0.2, 0.9]);
        let r_wo = rot([1.0, 0.4, -0.5]);
        let comp = MixtureComponent::from_measurement(meas(0, cam.inverse() * r_wo, 1.0, cam));
        let pred = cam.inverse() * r_wo;
        let trivial = SymmetryGroup::trivial();
        assert!(angle_to_component(&meas(1, pred, 1.0, cam), &comp, &trivial) < 1e-9);

        let z2 = SymmetryGroup::cyclic(&Vector3::z(), 2).unwrap();
        let flipped = pred * rot([0.0, 0.0, PI]);
        assert!(angle_to_component(&meas(1, flipped, 1.0, cam), &comp, &z2) < 1e-9);
        assert!(angle_to_component(&meas(1, flipped, 1.0, cam), &comp, &trivial) > 3.0);

        let axis = Vector3::new(1.0, 2.0, -0.5).normalize();
        let perturbed = Rotation3::exp(&(axis * 0.1)) * pred;
        // brute force over the two orbit members: identity gives 0.1, the flip ≈ π
        let a0 = perturbed.angle_to(&pred);
        let a1 = (perturbed * z2.elements()[1]).angle_to(&pred);
        assert_relative_eq!(a0.min(a1), 0.1, epsilon = 1e-12);
        assert_relative_eq!(
            angle_to_component(&meas(1, perturbed, 1.0, cam), &comp, &z2),
            0.1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn assign_respects_the_thirty_degree_gate() {
        let mut state = RotationMixtureState::default();
        let group = SymmetryGroup::trivial();
        let id = Rotation3::identity();
        assert_eq!(state.assign(&meas(0, id, 1.0, id), &group), Assignment::NewComponent);
        state.ingest(meas(0, id, 1.0, id), &group).unwrap();
        let at29 = meas(1, rot([0.0, deg(29.0), 0.0]), 1.0, id);
        let at31 = meas(1, rot([0.0, deg(31.0), 0.0]), 1.0, id);
        assert_eq!(state.assign(&at29, &group), Assignment::Component(0));
        assert_eq!(state.assign(&at31, &group), Assignment::NewComponent);
    }

    #[test]
    fn assign_picks_closest_component() {
        let group = SymmetryGroup::trivial();
        let id = Rotation3::identity();
        let mut state = RotationMixtureState::default();
        state.ingest(meas(0, id, 1.0, id), &group).unwrap();
        state
            .ingest(meas(1, rot([deg(90.0), 0.0, 0.0]), 1.0, id), &group)
            .unwrap();
        assert_eq!(state.len(), 2);
        let m = meas(2, rot([deg(80.0), 0.0, 0.0]), 1.0, id);
        // brute force: 80° from the first, 10° from the second
        assert_relative_eq!(m.r_co.angle_to(&state.components[0].mean), deg(80.0), epsilon = 1e-12);
        assert_relative_eq!(m.r_co.angle_to(&state.components[1].mean), deg(10.0), epsilon = 1e-12);
        assert_eq!(state.assign(&m, &group), Assignment::Component(1));
    }

    #[test]
    fn first_measurement_creates_unit_weight_component() {
        let group = SymmetryGroup::trivial();
        let mut state = RotationMixtureState::default();
        let r = rot([0.2, 0.1, 0.3]);
        state.ingest(meas(0, r, 0.8, Rotation3::identity()), &group).unwrap();
        let (mean, w) = state.map_estimate().unwrap();
        assert!(mean.angle_to(&r) < 1e-12);
        assert_eq!(w, 1.0);
    }

    #[test]
    fn confidence_accumulates_into_weights() {
        let group = SymmetryGroup::trivial();
        let mut state = RotationMixtureState::default();
        let truth = rot([0.4, -0.3, 0.2]);
        let spurious = truth * rot([deg(75.0), 0.0, 0.0]);
        let cams: Vec<_> = (0..10).map(|i| rot([0.0, 0.0, 0.6 * i as f64])).collect();
        for (i, cam) in cams.iter().enumerate() {
            let r_wo = if i < 7 { truth } else { spurious };
            let noise = rot([0.01 * (i as f64 - 5.0), 0.005 * i as f64, -0.01]);
            state
                .ingest(meas(i as u64, noise * (cam.inverse() * r_wo), 0.9, *cam), &group)
                .unwrap();
        }
        assert_eq!(state.len(), 2);
        assert_relative_eq!(state.components[0].accumulated_confidence, 6.3, epsilon = 1e-9);
        assert_relative_eq!(state.components[1].accumulated_confidence, 2.7, epsilon = 1e-9);
        assert_relative_eq!(state.components[0].weight, 0.7, epsilon = 1e-6);
        assert_relative_eq!(state.components[1].weight, 0.3, epsilon = 1e-6);
        assert_relative_eq!(state.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn refine_keeps_exact_mean() {
        let group = SymmetryGroup::trivial();
        let r = rot([0.3, 0.2, -0.1]);
        let mut comp = MixtureComponent::from_measurement(meas(0, r, 1.0, Rotation3::identity()));
        comp.members.push(Member {
            measurement: meas(1, r, 0.5, Rotation3::identity()),
            canonical: r,
        });
        let report = refine_component(&mut comp, &group, &RotationConfig::default()).unwrap();
        assert!(comp.mean.angle_to(&r) < 1e-12);
        assert!(report.final_cost < 1e-20);
    }

    #[test]
    fn refine_finds_geodesic_midpoint() {
        let group = SymmetryGroup::trivial();
        let truth = rot([0.2, -0.4, 0.1]);
        let plus = truth * rot([0.1, 0.0, 0.0]);
        let minus = truth * rot([-0.1, 0.0, 0.0]);
        let id = Rotation3::identity();
        let mut comp = MixtureComponent::from_measurement(meas(0, plus, 0.7, id));
        comp.members.push(Member {
            measurement: meas(1, minus, 0.7, id),
            canonical: minus,
        });
        refine_component(&mut comp, &group, &RotationConfig::default()).unwrap();
        assert!(comp.mean.angle_to(&truth) < 1e-6);
    }

    #[test]
    fn refine_matches_weighted_mean_on_a_line() {
        let group = SymmetryGroup::trivial();
        let truth = rot([0.2, -0.4, 0.1]);
        let id = Rotation3::identity();
        let plus = truth * rot([0.1, 0.0, 0.0]);
        let minus = truth * rot([-0.1, 0.0, 0.0]);
        let mut comp = MixtureComponent::from_measurement(meas(0, plus, 0.9, id));
        comp.members.push(Member {
            measurement: meas(1, minus, 0.1, id),
            canonical: minus,
        });
        refine_component(&mut comp, &group, &RotationConfig::default()).unwrap();
        // scalar oracle along the tangent line: (0.9·0.1 + 0.1·(−0.1)) / 1.0
        let expected = truth * rot([(0.9 * 0.1 - 0.1 * 0.1) / (0.9 + 0.1), 0.0, 0.0]);
        assert!(comp.mean.angle_to(&expected) < 1e-6);
    }

    #[test]
    fn refine_handles_aliased_members() {
        let group = SymmetryGroup::cyclic(&Vector3::z(), 2).unwrap();
        let truth = rot([0.3, 0.1, -0.6]);
        let flip = rot([0.0, 0.0, PI]);
        let cams: Vec<_> = (0..6).map(|i| rot([0.2 * i as f64, 0.5, 0.0])).collect();
        let mut state = RotationMixtureState::default();
        for (i, cam) in cams.iter().enumerate() {
            let noise = rot([0.02 * (i as f64 - 2.5), -0.01 * i as f64, 0.015]);
            let mut r_co = noise * cam.inverse() * truth;
            if i % 2 == 1 {
                r_co = r_co * flip;
            }
            state.ingest(meas(i as u64, r_co, 0.9, *cam), &group).unwrap();
        }
        assert_eq!(state.len(), 1);
        let (mean, _) = state.map_estimate().unwrap();
        assert!(group.symmetry_aware_angle(&mean, &truth) < 0.05);
    }

    #[test]
    fn residual_jacobian_matches_central_differences() {
        let r_wo = rot([0.7, -0.2, 0.4]);
        let cam = rot([-0.3, 1.1, 0.2]);
        let canonical = rot([0.1, 0.1, 0.1]) * cam.inverse() * r_wo;
        let (_, j) = rotation_residual_jacobian(&r_wo, &canonical, &cam);
        let h = 1e-6;
        for i in 0..3 {
            let mut d = Vector3::zeros();
            d[i] = h;
            let plus = rotation_residual(&(r_wo * Rotation3::exp(&d)), &canonical, &cam);
            let minus = rotation_residual(&(r_wo * Rotation3::exp(&-d)), &canonical, &cam);
            assert_relative_eq!((plus - minus) / (2.0 * h), j.column(i).into_owned(), epsilon = 1e-8);
        }
    }

    #[test]
    fn map_estimate_of_empty_state_fails() {
        assert_eq!(RotationMixtureState::default().map_estimate(), Err(Error::EmptyState));
    }

    #[test]
    fn map_estimate_prefers_heavier_component() {
        let group = SymmetryGroup::trivial();
        let id = Rotation3::identity();
        let mut state = RotationMixtureState::default();
        let a = rot([0.0, 0.0, 0.0]);
        let b = rot([deg(90.0), 0.0, 0.0]);
        for (i, r) in [a, b, a].into_iter().enumerate() {
            state.ingest(meas(i as u64, r, 0.5, id), &group).unwrap();
        }
        let (mean, w) = state.map_estimate().unwrap();
        assert!(mean.angle_to(&a) < 1e-9);
        assert_relative_eq!(w, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn equal_weights_resolve_to_lowest_index() {
        let group = SymmetryGroup::trivial();
        let id = Rotation3::identity();
        let mut state = RotationMixtureState::default();
        state
            .ingest(meas(0, rot([deg(90.0), 0.0, 0.0]), 0.5, id), &group)
            .unwrap();
        state.ingest(meas(1, id, 0.5, id), &group).unwrap();
        assert_eq!(state.best_index(), Some(0));
    }

    #[test]
    fn pruning_drops_stale_light_components() {
        let group = SymmetryGroup::trivial();
        let id = Rotation3::identity();
        let config = RotationConfig {
            prune: Some(PruneConfig::default()),
            ..Default::default()
        };
        let mut state = RotationMixtureState::new(config);
        state
            .ingest(meas(0, rot([deg(90.0), 0.0, 0.0]), 0.05, id), &group)
            .unwrap();
        for f in 1..=12 {
            state.ingest(meas(f, id, 1.0, id), &group).unwrap();
        }
        assert_eq!(state.len(), 1);
        assert_relative_eq!(state.components[0].weight, 1.0);
    }

    #[test]
    fn gate_rejection_leaves_existing_component_untouched() {
        let group = SymmetryGroup::trivial();
        let id = Rotation3::identity();
        let mut state = RotationMixtureState::default();
        state.ingest(meas(0, id, 1.0, id), &group).unwrap();
        let before = state.components[0].clone();
        state
            .ingest(meas(1, rot([0.0, deg(30.5), 0.0]), 1.0, id), &group)
            .unwrap();
        assert_eq!(state.len(), 2);
        assert_eq!(state.components[0].mean, before.mean);
        assert_eq!(state.components[0].members, before.members);
    }
}
