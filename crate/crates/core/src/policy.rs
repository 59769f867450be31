//! Reachability-based input mode, surface snapping and initial placement.
//!
//! Everything here is a pure function of its arguments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{Distance, InteractionHint, PlacementHint, Zone};
use crate::scalar::Scalar;
use crate::spatial::{Quat, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid policy config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    #[default]
    Touch,
    Ray,
}

/// Panel extent in meters, serialized as `[w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]")]
pub struct PanelSize<T: Copy> {
    pub w: T,
    pub h: T,
}

impl<T: Copy> From<[T; 2]> for PanelSize<T> {
    fn from([w, h]: [T; 2]) -> Self {
        Self { w, h }
    }
}

impl<T: Copy> From<PanelSize<T>> for [T; 2] {
    fn from(s: PanelSize<T>) -> Self {
        [s.w, s.h]
    }
}

/// Where a panel is in the workspace. The panel quad lies in its local xy
/// plane with the visible face toward local +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct PanelPose<T: Scalar> {
    pub position: Vec3<T>,
    pub orientation: Quat<T>,
    pub size: PanelSize<T>,
}

pub const QUATERNION_TOLERANCE: f64 = 1e-6;

impl<T: Scalar> PanelPose<T> {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if !self.position.is_finite() {
            return Err(PolicyError::InvalidPose("position must be finite".into()));
        }
        if !(self.orientation.is_finite() && self.orientation.is_unit(T::lit(QUATERNION_TOLERANCE))) {
            return Err(PolicyError::InvalidPose(format!(
                "orientation must be a unit quaternion, norm is {}",
                self.orientation.norm()
            )));
        }
        let ok = |v: T| v.is_finite() && v > T::zero();
        if !(ok(self.size.w) && ok(self.size.h)) {
            return Err(PolicyError::InvalidPose("size must be positive".into()));
        }
        Ok(())
    }

    /// Unit normal of the visible face.
    pub fn normal(&self) -> Vec3<T> {
        self.orientation.rotate(Vec3::unit_z())
    }

    pub fn right(&self) -> Vec3<T> {
        self.orientation.rotate(Vec3::unit_x())
    }
}

/// A bounded plane panels can snap onto. `extent` is `[w, d]`: `w` along the
/// plane's first tangent (world x projected onto the plane), `d` along the
/// second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SurfacePlane<T: Scalar> {
    pub origin: Vec3<T>,
    pub normal: Vec3<T>,
    pub extent: [T; 2],
}

impl<T: Scalar> SurfacePlane<T> {
    /// Default desk: 1.6 m wide, 0.8 m deep, top at y = 0, front edge at z = 0.
    pub fn desk() -> Self {
        Self {
            origin: Vec3::lit(0.0, 0.0, -0.4),
            normal: Vec3::unit_y(),
            extent: [T::lit(1.6), T::lit(0.8)],
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if !self.origin.is_finite() || (self.normal.norm() - T::one()).abs() > T::lit(QUATERNION_TOLERANCE) {
            return Err(PolicyError::InvalidConfig("surface normal must be unit length".into()));
        }
        if !(self.extent[0] > T::zero() && self.extent[1] > T::zero()) {
            return Err(PolicyError::InvalidConfig("surface extent must be positive".into()));
        }
        Ok(())
    }

    pub fn tangents(&self) -> (Vec3<T>, Vec3<T>) {
        let n = self.normal;
        let u = (Vec3::unit_x() - n * n.dot(Vec3::unit_x()))
            .normalized()
            .or_else(|| (Vec3::unit_z() - n * n.dot(Vec3::unit_z())).normalized())
            .expect("a unit normal cannot be parallel to both x and z");
        (u, n.cross(u))
    }

    /// Signed height of `p` above the plane.
    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        (p - self.origin).dot(self.normal)
    }

    pub fn project(&self, p: Vec3<T>) -> Vec3<T> {
        p - self.normal * self.signed_distance(p)
    }

    /// Whether `p` (assumed on the plane) lies within the bounded extent.
    pub fn contains_projected(&self, p: Vec3<T>) -> bool {
        let (u, v) = self.tangents();
        let d = p - self.origin;
        let half = T::lit(0.5);
        d.dot(u).abs() <= self.extent[0] * half && d.dot(v).abs() <= self.extent[1] * half
    }

    /// Orientation of a panel lying flat on this surface.
    pub fn flat_orientation(&self) -> Quat<T> {
        Quat::rotation_between(Vec3::unit_z(), self.normal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Facing {
    /// Upright, yawed so the face points at the user reference point.
    User,
    /// Lying flat, face up.
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ZoneAnchor<T: Scalar> {
    pub zone: Zone,
    pub distance: Distance,
    pub position: Vec3<T>,
    pub facing: Facing,
    pub size: PanelSize<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct PolicyConfig<T: Scalar> {
    /// At or below this distance panels use direct touch.
    pub d_touch: T,
    /// At or above this distance panels use rays.
    pub d_ray: T,
    pub snap_threshold: T,
    /// Where distances are measured from: the seated user's eyes.
    pub user_reference: Vec3<T>,
    pub surfaces: Vec<SurfacePlane<T>>,
    pub zone_anchors: Vec<ZoneAnchor<T>>,
    /// Gap left between panels that share a zone.
    pub spacing: T,
}

impl<T: Scalar> Default for PolicyConfig<T> {
    fn default() -> Self {
        use Distance::*;
        use Facing::*;
        use Zone::*;
        let a = |zone, distance, (x, y, z): (f64, f64, f64), facing, (w, h): (f64, f64)| ZoneAnchor {
            zone,
            distance,
            position: Vec3::lit(x, y, z),
            facing,
            size: PanelSize { w: T::lit(w), h: T::lit(h) },
        };
        Self {
            d_touch: T::lit(0.6),
            d_ray: T::lit(0.75),
            snap_threshold: T::lit(0.05),
            user_reference: Vec3::lit(0.0, 0.45, 0.0),
            surfaces: vec![SurfacePlane::desk()],
            zone_anchors: vec![
                a(Surface, Near, (0.0, 0.0, -0.3), Up, (0.5, 0.3)),
                a(Surface, Mid, (0.0, 0.0, -0.5), Up, (0.5, 0.3)),
                a(Surface, Far, (0.0, 0.0, -0.7), Up, (0.5, 0.3)),
                a(MidairCenter, Near, (0.0, 0.45, -0.55), User, (0.8, 0.45)),
                a(MidairCenter, Mid, (0.0, 0.45, -0.8), User, (0.8, 0.45)),
                a(MidairCenter, Far, (0.0, 0.5, -1.2), User, (0.8, 0.45)),
                a(MidairSide, Near, (0.5, 0.45, -0.45), User, (0.45, 0.5)),
                a(MidairSide, Mid, (0.6, 0.45, -0.7), User, (0.45, 0.5)),
                a(MidairSide, Far, (0.8, 0.5, -1.0), User, (0.45, 0.5)),
                a(Peripheral, Near, (0.8, 0.55, -0.5), User, (0.35, 0.5)),
                a(Peripheral, Mid, (1.0, 0.6, -0.8), User, (0.35, 0.5)),
                a(Peripheral, Far, (1.2, 0.7, -1.2), User, (0.35, 0.5)),
            ],
            spacing: T::lit(0.05),
        }
    }
}

impl<T: Scalar> PolicyConfig<T> {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if !(self.d_touch > T::zero() && self.d_touch < self.d_ray) {
            return Err(PolicyError::InvalidConfig(format!(
                "need 0 < d_touch < d_ray, got {} and {}",
                self.d_touch, self.d_ray
            )));
        }
        if !(self.snap_threshold.is_finite() && self.snap_threshold > T::zero()) {
            return Err(PolicyError::InvalidConfig("snap_threshold must be positive".into()));
        }
        if !self.user_reference.is_finite() {
            return Err(PolicyError::InvalidConfig("user_reference must be finite".into()));
        }
        for s in &self.surfaces {
            s.validate()?;
        }
        for zone in [Zone::Surface, Zone::MidairCenter, Zone::MidairSide, Zone::Peripheral] {
            for distance in [Distance::Near, Distance::Mid, Distance::Far] {
                let anchor = self
                    .anchor(zone, distance)
                    .ok_or_else(|| PolicyError::InvalidConfig(format!("no zone anchor for {zone:?}/{distance:?}")))?;
                if !(anchor.position.is_finite() && anchor.size.w > T::zero() && anchor.size.h > T::zero()) {
                    return Err(PolicyError::InvalidConfig(format!("bad zone anchor for {zone:?}/{distance:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn anchor(&self, zone: Zone, distance: Distance) -> Option<&ZoneAnchor<T>> {
        self.zone_anchors.iter().find(|a| a.zone == zone && a.distance == distance)
    }

    /// Distance from the user reference point to the panel center.
    pub fn reach_distance(&self, pose: &PanelPose<T>) -> T {
        pose.position.distance(self.user_reference)
    }
}

/// Touch within reach, ray beyond it; inside the hysteresis band the previous
/// mode sticks.
pub fn input_mode<T: Scalar>(distance: T, prev: InputMode, cfg: &PolicyConfig<T>) -> InputMode {
    if distance <= cfg.d_touch {
        InputMode::Touch
    } else if distance >= cfg.d_ray {
        InputMode::Ray
    } else {
        prev
    }
}

/// Snaps a panel onto the nearest surface whose bounded extent lies under its
/// center within `snap_threshold`. Ties go to the lowest index.
pub fn snap_pose<T: Scalar>(
    p: &PanelPose<T>,
    surfaces: &[SurfacePlane<T>],
    cfg: &PolicyConfig<T>,
) -> (PanelPose<T>, bool) {
    let mut best: Option<(T, usize, Vec3<T>)> = None;
    for (i, s) in surfaces.iter().enumerate() {
        let d = s.signed_distance(p.position).abs();
        if d > cfg.snap_threshold {
            continue;
        }
        let projected = s.project(p.position);
        if !s.contains_projected(projected) {
            continue;
        }
        if best.as_ref().is_none_or(|(bd, _, _)| d < *bd) {
            best = Some((d, i, projected));
        }
    }
    match best {
        Some((_, i, position)) => (
            PanelPose {
                position,
                orientation: surfaces[i].flat_orientation(),
                size: p.size,
            },
            true,
        ),
        None => (*p, false),
    }
}

/// Initial pose for a placement hint, read from the zone anchor table.
///
/// # Panics
///
/// If `cfg` lacks an anchor for the hint's zone and distance; validated
/// configs always have one.
pub fn placement_from_hint<T: Scalar>(h: &PlacementHint, cfg: &PolicyConfig<T>) -> PanelPose<T> {
    let anchor = cfg
        .anchor(h.zone, h.distance)
        .unwrap_or_else(|| panic!("no zone anchor for {:?}/{:?}", h.zone, h.distance));
    let scale = T::lit(h.scale);
    let orientation = match anchor.facing {
        Facing::Up => Quat::from_axis_angle(Vec3::unit_x(), T::lit(-std::f64::consts::FRAC_PI_2)),
        Facing::User => face_point(anchor.position, cfg.user_reference),
    };
    PanelPose {
        position: anchor.position,
        orientation,
        size: PanelSize {
            w: anchor.size.w * scale,
            h: anchor.size.h * scale,
        },
    }
}

/// Upright orientation whose face points horizontally at `target`.
pub fn face_point<T: Scalar>(from: Vec3<T>, target: Vec3<T>) -> Quat<T> {
    let d = target - from;
    if d.x == T::zero() && d.z == T::zero() {
        return Quat::identity();
    }
    Quat::from_yaw(d.x.atan2(d.z))
}

/// Outcome of applying the policy to a moved panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelPolicyState<T: Scalar> {
    pub pose: PanelPose<T>,
    pub anchored: bool,
    pub input_mode: InputMode,
}

/// Snaps the pose, then picks an input mode from the snapped position unless
/// the panel's interaction hint pins one.
pub fn apply_transform<T: Scalar>(
    pose: &PanelPose<T>,
    prev: InputMode,
    hint: InteractionHint,
    cfg: &PolicyConfig<T>,
) -> PanelPolicyState<T> {
    let (pose, anchored) = snap_pose(pose, &cfg.surfaces, cfg);
    let input_mode = match hint {
        InteractionHint::Touch => InputMode::Touch,
        InteractionHint::Ray => InputMode::Ray,
        InteractionHint::Auto => input_mode(cfg.reach_distance(&pose), prev, cfg),
    };
    PanelPolicyState {
        pose,
        anchored,
        input_mode,
    }
}

/// Initial poses for a whole layout: each hint's anchor pose, with panels that
/// share a zone and distance spread side by side along the panel's right
/// axis. `aspects` are height/width ratios applied to the anchor width.
pub fn arrange_initial_poses<T: Scalar>(hints: &[(PlacementHint, T)], cfg: &PolicyConfig<T>) -> Vec<PanelPose<T>> {
    let mut poses: Vec<PanelPose<T>> = hints
        .iter()
        .map(|(h, aspect)| {
            let mut p = placement_from_hint(h, cfg);
            if aspect.is_finite() && *aspect > T::zero() {
                p.size.h = p.size.w * *aspect;
            }
            p
        })
        .collect();
    let mut done = vec![false; hints.len()];
    for i in 0..hints.len() {
        if done[i] {
            continue;
        }
        let key = (hints[i].0.zone, hints[i].0.distance);
        let group: Vec<usize> = (i..hints.len())
            .filter(|&j| (hints[j].0.zone, hints[j].0.distance) == key)
            .collect();
        for &j in &group {
            done[j] = true;
        }
        if group.len() < 2 {
            continue;
        }
        let widths: Vec<T> = group.iter().map(|&j| poses[j].size.w).collect();
        let total = widths.iter().fold(T::zero(), |a, &w| a + w) + cfg.spacing * T::lit((group.len() - 1) as f64);
        let right = poses[group[0]].right();
        let mut cursor = -total * T::lit(0.5);
        for (&j, &w) in group.iter().zip(&widths) {
            let offset = cursor + w * T::lit(0.5);
            poses[j].position = poses[j].position + right * offset;
            cursor = cursor + w + cfg.spacing;
        }
    }
    poses
}
