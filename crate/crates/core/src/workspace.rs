//! Robot geometry: per-arm reachable boxes, derived zone labels, the
//! Cartesian travel-time model, phase durations, and the inter-arm
//! separation rule.
//!
//! The four arms hang as a 2x2 grid on shared linear guides: arm 1 upper
//! left, arm 2 upper right, arm 3 lower right, arm 4 lower left. Axes:
//! x longitudinal (toward the canopy), y horizontal, z vertical.

use serde::{Deserialize, Serialize};

use crate::error::WorkspaceError;
use crate::geom::{self, Point3};
use crate::scalar::{real, Scalar};
use crate::types::{ArmId, ArmState, Phase};

/// Axis-aligned box with closed bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct Aabb<S: Scalar> {
    pub min: Point3<S>,
    pub max: Point3<S>,
}

impl<S: Scalar> Aabb<S> {
    pub fn new(min: Point3<S>, max: Point3<S>) -> Self {
        Aabb { min, max }
    }

    /// Boundary inclusive on all faces.
    pub fn contains(&self, p: Point3<S>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn center(&self) -> Point3<S> {
        let two = real::<S>(2.0);
        [
            (self.min[0] + self.max[0]) / two,
            (self.min[1] + self.max[1]) / two,
            (self.min[2] + self.max[2]) / two,
        ]
    }

    pub fn intersects(&self, other: &Aabb<S>) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }
}

/// Workspace region labels. E-zones are reachable by exactly one arm;
/// O-zones by two or more. Labels are derived from box membership so they
/// can never disagree with the boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Zone {
    E1,
    E2,
    E3,
    E4,
    /// Shared by the upper pair (arms 1, 2).
    OU,
    /// Shared by the lower pair (arms 3, 4).
    OD,
    /// Shared by the left column (arms 1, 4).
    OL,
    /// Shared by the right column (arms 2, 3).
    OR,
    /// Reachable across groups and columns.
    OC,
    Outside,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
struct RawWorkspace<S: Scalar> {
    arm_boxes: [Aabb<S>; 4],
    drop_points: [Point3<S>; 4],
    axis_speeds: [S; 3],
    t_grasp: S,
    t_place: S,
    d_min: S,
}

/// Robot geometry and motion constants. Immutable after load; all the
/// operations on it are pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawWorkspace<S>",
    into = "RawWorkspace<S>",
    bound(serialize = "S: Scalar", deserialize = "S: Scalar")
)]
pub struct WorkspaceConfig<S: Scalar> {
    /// Reachable box per arm, indexed by `ArmId::index`.
    pub arm_boxes: [Aabb<S>; 4],
    /// Conveyor drop position per arm; also each arm's parking spot.
    pub drop_points: [Point3<S>; 4],
    /// Per-axis joint speed, m/s. All three axes move simultaneously.
    pub axis_speeds: [S; 3],
    /// Fixed grasp time appended to every AEG, seconds.
    pub t_grasp: S,
    /// Fixed placement time appended to every RP, seconds.
    pub t_place: S,
    /// Minimum separation between simultaneously worked targets, meters.
    pub d_min: S,
}

impl<S: Scalar> Default for WorkspaceConfig<S> {
    /// Two 1.0 m columns overlapping 0.3 m in y, two 1.2 m rows overlapping
    /// 0.3 m in z, 0.8 m of shared depth; drop points in the exclusive
    /// corners near the conveyors.
    fn default() -> Self {
        let r = real::<S>;
        let boxes = |y0: f64, y1: f64, z0: f64, z1: f64| {
            Aabb::new([r(0.0), r(y0), r(z0)], [r(0.8), r(y1), r(z1)])
        };
        WorkspaceConfig {
            arm_boxes: [
                boxes(0.0, 1.0, 0.9, 2.1), // arm 1, upper left
                boxes(0.7, 1.7, 0.9, 2.1), // arm 2, upper right
                boxes(0.7, 1.7, 0.0, 1.2), // arm 3, lower right
                boxes(0.0, 1.0, 0.0, 1.2), // arm 4, lower left
            ],
            drop_points: [
                [r(0.0), r(0.35), r(2.0)],
                [r(0.0), r(1.35), r(2.0)],
                [r(0.0), r(1.35), r(0.1)],
                [r(0.0), r(0.35), r(0.1)],
            ],
            axis_speeds: [r(0.5), r(0.5), r(0.5)],
            t_grasp: r(1.5),
            t_place: r(1.0),
            d_min: r(0.3),
        }
    }
}

impl<S: Scalar> WorkspaceConfig<S> {
    fn validate(&self) -> Result<(), WorkspaceError> {
        for (i, s) in self.axis_speeds.iter().enumerate() {
            if !(*s > S::zero()) || !s.is_finite() {
                return Err(WorkspaceError::InvalidConfig(format!(
                    "axis speed {i} must be positive"
                )));
            }
        }
        for (name, v) in [
            ("t_grasp", self.t_grasp),
            ("t_place", self.t_place),
            ("d_min", self.d_min),
        ] {
            if !(v > S::zero()) || !v.is_finite() {
                return Err(WorkspaceError::InvalidConfig(format!(
                    "{name} must be positive"
                )));
            }
        }
        for b in &self.arm_boxes {
            if (0..3).any(|i| !(b.min[i] <= b.max[i])) {
                return Err(WorkspaceError::InvalidConfig(
                    "arm box has min > max".into(),
                ));
            }
        }
        // Each group must share workspace: the coupling joint couples arms
        // whose boxes overlap.
        if !self.arm_boxes[0].intersects(&self.arm_boxes[1]) {
            return Err(WorkspaceError::InvalidConfig(
                "boxes of arms 1 and 2 must overlap".into(),
            ));
        }
        if !self.arm_boxes[2].intersects(&self.arm_boxes[3]) {
            return Err(WorkspaceError::InvalidConfig(
                "boxes of arms 3 and 4 must overlap".into(),
            ));
        }
        for arm in ArmId::all() {
            if !self.arm_boxes[arm.index()].contains(self.drop_points[arm.index()]) {
                return Err(WorkspaceError::InvalidConfig(format!(
                    "drop point of {arm} lies outside its box"
                )));
            }
        }
        Ok(())
    }

    pub fn arm_box(&self, arm: ArmId) -> &Aabb<S> {
        &self.arm_boxes[arm.index()]
    }

    pub fn drop_point(&self, arm: ArmId) -> Point3<S> {
        self.drop_points[arm.index()]
    }

    /// Bounding box of the union of all arm boxes.
    pub fn extents(&self) -> Aabb<S> {
        let mut min = self.arm_boxes[0].min;
        let mut max = self.arm_boxes[0].max;
        for b in &self.arm_boxes[1..] {
            for i in 0..3 {
                min[i] = min[i].min(b.min[i]);
                max[i] = max[i].max(b.max[i]);
            }
        }
        Aabb::new(min, max)
    }

    /// Which arms can reach the point.
    pub fn membership(&self, p: Point3<S>) -> [bool; 4] {
        let mut m = [false; 4];
        for arm in ArmId::all() {
            m[arm.index()] = self.arm_boxes[arm.index()].contains(p);
        }
        m
    }

    /// Zone label derived from box membership.
    pub fn zone_of(&self, p: Point3<S>) -> Zone {
        match self.membership(p) {
            [false, false, false, false] => Zone::Outside,
            [true, false, false, false] => Zone::E1,
            [false, true, false, false] => Zone::E2,
            [false, false, true, false] => Zone::E3,
            [false, false, false, true] => Zone::E4,
            [true, true, false, false] => Zone::OU,
            [false, false, true, true] => Zone::OD,
            [true, false, false, true] => Zone::OL,
            [false, true, true, false] => Zone::OR,
            _ => Zone::OC,
        }
    }
}

impl<S: Scalar> TryFrom<RawWorkspace<S>> for WorkspaceConfig<S> {
    type Error = WorkspaceError;
    fn try_from(raw: RawWorkspace<S>) -> Result<Self, Self::Error> {
        let ws = WorkspaceConfig {
            arm_boxes: raw.arm_boxes,
            drop_points: raw.drop_points,
            axis_speeds: raw.axis_speeds,
            t_grasp: raw.t_grasp,
            t_place: raw.t_place,
            d_min: raw.d_min,
        };
        ws.validate()?;
        Ok(ws)
    }
}

impl<S: Scalar> From<WorkspaceConfig<S>> for RawWorkspace<S> {
    fn from(ws: WorkspaceConfig<S>) -> Self {
        RawWorkspace {
            arm_boxes: ws.arm_boxes,
            drop_points: ws.drop_points,
            axis_speeds: ws.axis_speeds,
            t_grasp: ws.t_grasp,
            t_place: ws.t_place,
            d_min: ws.d_min,
        }
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// True iff the point lies in the arm's box (boundary inclusive).
pub fn reachable<S: Scalar>(arm: ArmId, point: Point3<S>, ws: &WorkspaceConfig<S>) -> bool {
    ws.arm_box(arm).contains(point)
}

/// Travel time between two points: all three axes move simultaneously at
/// constant speed, so the slowest axis dominates. A weighted Chebyshev
/// metric — symmetric, zero iff equal, triangle inequality holds.
pub fn travel_time<S: Scalar>(from: Point3<S>, to: Point3<S>, ws: &WorkspaceConfig<S>) -> S {
    let mut t = S::zero();
    for i in 0..3 {
        let axis = (to[i] - from[i]).abs() / ws.axis_speeds[i];
        t = t.max(axis);
    }
    t
}

/// What an arm is about to do: grasp a fruit or carry one to the conveyor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseGoal<S: Scalar> {
    /// Approach-extension-grasp toward a fruit.
    Grasp(Point3<S>),
    /// Retraction-placement back to the arm's own drop point.
    Place,
}

/// Duration of one phase for the given arm from its current position.
///
/// AEG: travel to the fruit plus the grasp time; errors if the fruit is
/// outside the arm's box. RP: travel to the arm's drop point plus the
/// placement time.
pub fn phase_duration<S: Scalar>(
    arm: &ArmState<S>,
    goal: PhaseGoal<S>,
    ws: &WorkspaceConfig<S>,
) -> Result<S, WorkspaceError> {
    match goal {
        PhaseGoal::Grasp(target) => {
            if !reachable(arm.arm_id, target, ws) {
                return Err(WorkspaceError::Unreachable {
                    arm: arm.arm_id.id(),
                    target: target.map(|c| c.to_config()),
                });
            }
            Ok(travel_time(arm.position, target, ws) + ws.t_grasp)
        }
        PhaseGoal::Place => {
            Ok(travel_time(arm.position, ws.drop_point(arm.arm_id), ws) + ws.t_place)
        }
    }
}

/// AEG duration from an explicit start point (used inside the step function
/// where an arm implicitly finishes its RP first).
pub(crate) fn aeg_duration_from<S: Scalar>(
    start: Point3<S>,
    target: Point3<S>,
    ws: &WorkspaceConfig<S>,
) -> S {
    travel_time(start, target, ws) + ws.t_grasp
}

pub(crate) fn rp_duration_from<S: Scalar>(
    start: Point3<S>,
    arm: ArmId,
    ws: &WorkspaceConfig<S>,
) -> S {
    travel_time(start, ws.drop_point(arm), ws) + ws.t_place
}

/// True iff two targets are far enough apart to be worked simultaneously.
/// Boundary inclusive; compared on squared distances so an exact-d_min pair
/// passes without rounding surprises.
pub fn separation_ok<S: Scalar>(a: Point3<S>, b: Point3<S>, ws: &WorkspaceConfig<S>) -> bool {
    geom::dist_sq(a, b) >= ws.d_min * ws.d_min
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws() -> WorkspaceConfig<f64> {
        WorkspaceConfig::default()
    }

    fn arm_at(id: u8, position: Point3<f64>) -> ArmState<f64> {
        ArmState {
            arm_id: ArmId::new(id).unwrap(),
            position,
            phase: Phase::Rp,
            busy_until: 0.0,
        }
    }

    #[test]
    fn exclusive_zone_membership() {
        let ws = ws();
        // Deep in arm 1's corner: left column, top row, outside all overlaps.
        let p = [0.4, 0.2, 1.9];
        assert_eq!(ws.zone_of(p), Zone::E1);
        assert!(reachable(ArmId::new(1).unwrap(), p, &ws));
        assert!(!reachable(ArmId::new(3).unwrap(), p, &ws));
    }

    #[test]
    fn shared_boundary_is_reachable_by_both() {
        let ws = ws();
        // y = 0.7 is the exact lower edge of arm 2's box and interior to
        // arm 1's; closed intervals make it reachable by both.
        let p = [0.4, 0.7, 1.9];
        assert!(reachable(ArmId::new(1).unwrap(), p, &ws));
        assert!(reachable(ArmId::new(2).unwrap(), p, &ws));
        assert_eq!(ws.zone_of(p), Zone::OU);
    }

    #[test]
    fn zone_labels_cover_the_grid() {
        let ws = ws();
        assert_eq!(ws.zone_of([0.4, 1.5, 1.9]), Zone::E2);
        assert_eq!(ws.zone_of([0.4, 1.5, 0.3]), Zone::E3);
        assert_eq!(ws.zone_of([0.4, 0.2, 0.3]), Zone::E4);
        assert_eq!(ws.zone_of([0.4, 0.8, 1.9]), Zone::OU);
        assert_eq!(ws.zone_of([0.4, 0.8, 0.3]), Zone::OD);
        assert_eq!(ws.zone_of([0.4, 0.2, 1.0]), Zone::OL);
        assert_eq!(ws.zone_of([0.4, 1.5, 1.0]), Zone::OR);
        assert_eq!(ws.zone_of([0.4, 0.8, 1.0]), Zone::OC);
        assert_eq!(ws.zone_of([0.4, 0.8, 5.0]), Zone::Outside);
    }

    #[test]
    fn e_zones_have_one_member_and_o_zones_more() {
        let ws = ws();
        for (p, single) in [
            ([0.4, 0.2, 1.9], true),
            ([0.4, 1.5, 0.3], true),
            ([0.4, 0.8, 1.9], false),
            ([0.4, 0.8, 1.0], false),
        ] {
            let members = ws.membership(p).iter().filter(|&&m| m).count();
            if single {
                assert_eq!(members, 1);
            } else {
                assert!(members >= 2);
            }
        }
    }

    #[test]
    fn travel_time_hand_values() {
        let ws = ws();
        let a = [0.0, 0.0, 0.0];
        assert_eq!(travel_time(a, a, &ws), 0.0);
        // Slowest axis dominates: max(1.0, 0.5, 0.2).
        assert_eq!(travel_time(a, [0.5, 0.25, 0.1], &ws), 1.0);

        let mut ws2 = ws;
        ws2.axis_speeds = [0.5, 0.3, 0.4];
        assert_eq!(travel_time(a, [0.0, 0.3, 0.0], &ws2), 1.0);
    }

    #[test]
    fn phase_duration_hand_values() {
        let ws = ws();
        // Arm at its drop point, fruit at the drop point: pure grasp time.
        let drop = ws.drop_point(ArmId::new(1).unwrap());
        let arm = arm_at(1, drop);
        let d = phase_duration(&arm, PhaseGoal::Grasp(drop), &ws).unwrap();
        assert_eq!(d, ws.t_grasp);

        // 0.5 m on one axis at 0.5 m/s plus grasp: 1.0 + 1.5.
        let arm = arm_at(1, [0.0, 0.35, 2.0]);
        let d = phase_duration(&arm, PhaseGoal::Grasp([0.5, 0.35, 2.0]), &ws).unwrap();
        assert_eq!(d, 2.5);
    }

    #[test]
    fn phase_duration_rejects_unreachable() {
        let ws = ws();
        let arm = arm_at(1, ws.drop_point(ArmId::new(1).unwrap()));
        let err = phase_duration(&arm, PhaseGoal::Grasp([0.4, 1.5, 0.3]), &ws).unwrap_err();
        assert!(matches!(err, WorkspaceError::Unreachable { arm: 1, .. }));
    }

    #[test]
    fn separation_boundary_is_inclusive() {
        let ws = ws();
        let a = [0.0, 0.0, 0.0];
        assert!(!separation_ok(a, a, &ws));
        assert!(separation_ok(a, [1.0, 0.0, 0.0], &ws));
        // Exactly d_min apart: squared compare keeps the boundary exact.
        assert!(separation_ok(a, [ws.d_min, 0.0, 0.0], &ws));
    }

    #[test]
    fn config_file_roundtrip_and_validation() {
        let ws = ws();
        let json = serde_json::to_string(&ws).unwrap();
        let back: WorkspaceConfig<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ws);

        let mut bad: RawWorkspace<f64> = ws.clone().into();
        bad.t_grasp = -1.0;
        let json = serde_json::to_string(&bad).unwrap();
        assert!(serde_json::from_str::<WorkspaceConfig<f64>>(&json).is_err());
    }
}
