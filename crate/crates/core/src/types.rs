//! Core value types: fruit layouts, arm/system state, group actions,
//! transition kinds, episode metrics, and the state validator.
//!
//! Everything here is an immutable value object after construction; the
//! environment produces successor states instead of mutating in place.
//! Fruit indices are 0-based in memory and 1-based (with 0 as "no target")
//! in file formats and logs; the conversion happens only in serde code.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ActionError, LayoutError};
use crate::geom::{self, Point3};
use crate::scalar::{real, Scalar};

/// Minimum distance between two distinct fruits, meters.
pub const EPSILON_POS: f64 = 1e-3;

// ---------------------------------------------------------------------------
// Arms and groups
// ---------------------------------------------------------------------------

/// One of the four arms, numbered 1..=4 as on the robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ArmId(u8);

impl ArmId {
    pub fn new(id: u8) -> Result<Self, ActionError> {
        if (1..=4).contains(&id) {
            Ok(ArmId(id))
        } else {
            Err(ActionError::InvalidArm(id))
        }
    }

    /// All four arms in id order.
    pub fn all() -> [ArmId; 4] {
        [ArmId(1), ArmId(2), ArmId(3), ArmId(4)]
    }

    pub fn id(self) -> u8 {
        self.0
    }

    /// 0-based index into per-arm arrays.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn group(self) -> Group {
        if self.0 <= 2 {
            Group::U
        } else {
            Group::D
        }
    }
}

impl TryFrom<u8> for ArmId {
    type Error = ActionError;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        ArmId::new(v)
    }
}

impl From<ArmId> for u8 {
    fn from(a: ArmId) -> u8 {
        a.0
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "arm{}", self.0)
    }
}

/// The two agents of the game: group-U couples arms 1 and 2, group-D arms
/// 3 and 4. Each group shares its vertical joint, which is why only one of
/// its arms can run AEG at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    U,
    D,
}

impl Group {
    pub fn both() -> [Group; 2] {
        [Group::U, Group::D]
    }

    pub fn index(self) -> usize {
        match self {
            Group::U => 0,
            Group::D => 1,
        }
    }

    pub fn other(self) -> Group {
        match self {
            Group::U => Group::D,
            Group::D => Group::U,
        }
    }

    /// The group's arms in (first, second) slot order; action bits apply in
    /// this order.
    pub fn arms(self) -> (ArmId, ArmId) {
        match self {
            Group::U => (ArmId(1), ArmId(2)),
            Group::D => (ArmId(3), ArmId(4)),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::U => write!(f, "U"),
            Group::D => write!(f, "D"),
        }
    }
}

/// Harvesting phase of one arm. AEG (approach-extension-grasp) occupies the
/// group's shared vertical joint; RP (retraction-placement) releases it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "AEG")]
    Aeg,
    #[serde(rename = "RP")]
    Rp,
}

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

/// The per-group action bits: which arm enters AEG next, if any.
///
/// Bit 0 means AEG, bit 1 means RP / stay placed. The pair (0,0) would put
/// both arms on the shared joint at once and is unrepresentable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArmBits {
    /// (0,1): first arm runs AEG, second retracts or stays placed.
    FirstAeg,
    /// (1,0): second arm runs AEG, first retracts or stays placed.
    SecondAeg,
    /// (1,1): neither arm enters AEG.
    BothRp,
}

impl ArmBits {
    pub fn all() -> [ArmBits; 3] {
        [ArmBits::FirstAeg, ArmBits::SecondAeg, ArmBits::BothRp]
    }

    /// The raw (b_left, b_right) pair.
    pub fn as_pair(self) -> (u8, u8) {
        match self {
            ArmBits::FirstAeg => (0, 1),
            ArmBits::SecondAeg => (1, 0),
            ArmBits::BothRp => (1, 1),
        }
    }

    pub fn from_pair(b_left: u8, b_right: u8) -> Result<Self, ActionError> {
        match (b_left, b_right) {
            (0, 1) => Ok(ArmBits::FirstAeg),
            (1, 0) => Ok(ArmBits::SecondAeg),
            (1, 1) => Ok(ArmBits::BothRp),
            _ => Err(ActionError::BothArmsAeg),
        }
    }

    /// The phases after the transition; bits map directly to the next phase.
    pub fn next_phases(self) -> (Phase, Phase) {
        match self {
            ArmBits::FirstAeg => (Phase::Aeg, Phase::Rp),
            ArmBits::SecondAeg => (Phase::Rp, Phase::Aeg),
            ArmBits::BothRp => (Phase::Rp, Phase::Rp),
        }
    }

    /// Slot (0 or 1) of the arm entering AEG, if any.
    pub fn aeg_slot(self) -> Option<usize> {
        match self {
            ArmBits::FirstAeg => Some(0),
            ArmBits::SecondAeg => Some(1),
            ArmBits::BothRp => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawGroupAction {
    target: u64,
    b_left: u8,
    b_right: u8,
}

/// One group's action: an optional fresh target plus the arm bits.
///
/// In files and logs the target is 1-based with 0 meaning "no new target".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGroupAction", into = "RawGroupAction")]
pub struct GroupAction {
    target: Option<usize>,
    bits: ArmBits,
}

impl GroupAction {
    pub fn new(target: Option<usize>, bits: ArmBits) -> Result<Self, ActionError> {
        if let Some(t) = target {
            if bits == ArmBits::BothRp {
                return Err(ActionError::TargetOnPause(t));
            }
        }
        Ok(GroupAction { target, bits })
    }

    /// The always-legal action: no target, both arms in RP.
    pub fn pause() -> Self {
        GroupAction {
            target: None,
            bits: ArmBits::BothRp,
        }
    }

    /// Claim fruit `target` (0-based) with the arm in the given slot.
    pub fn claim(target: usize, slot: usize) -> Self {
        let bits = if slot == 0 {
            ArmBits::FirstAeg
        } else {
            ArmBits::SecondAeg
        };
        GroupAction {
            target: Some(target),
            bits,
        }
    }

    pub fn target(self) -> Option<usize> {
        self.target
    }

    pub fn bits(self) -> ArmBits {
        self.bits
    }

    pub fn is_pause(self) -> bool {
        self.bits == ArmBits::BothRp
    }
}

impl TryFrom<RawGroupAction> for GroupAction {
    type Error = ActionError;
    fn try_from(raw: RawGroupAction) -> Result<Self, Self::Error> {
        let bits = ArmBits::from_pair(raw.b_left, raw.b_right)?;
        let target = if raw.target == 0 {
            None
        } else {
            Some(raw.target as usize - 1)
        };
        GroupAction::new(target, bits)
    }
}

impl From<GroupAction> for RawGroupAction {
    fn from(a: GroupAction) -> Self {
        let (b_left, b_right) = a.bits.as_pair();
        RawGroupAction {
            target: a.target.map_or(0, |t| t as u64 + 1),
            b_left,
            b_right,
        }
    }
}

/// Joint action of both groups, indexed by [`Group::index`].
pub type JointAction = [GroupAction; 2];

// ---------------------------------------------------------------------------
// Transition kinds
// ---------------------------------------------------------------------------

/// The nine in-group state transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransitionKind {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
}

/// What a transition does to the group's AEG role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransitionSemantic {
    /// No AEG this step; the group absorbs idle time.
    Pause,
    /// The AEG role switches to the sibling arm.
    Alternation,
    /// The same arm retracts, places, and grasps again.
    NonAlternation,
    /// An AEG starts from a fully retracted group.
    Restart,
}

impl TransitionKind {
    pub fn all() -> [TransitionKind; 9] {
        use TransitionKind::*;
        [T1, T2, T3, T4, T5, T6, T7, T8, T9]
    }

    pub fn semantic(self) -> TransitionSemantic {
        use TransitionKind::*;
        use TransitionSemantic::*;
        match self {
            T1 | T6 | T7 => Pause,
            T2 | T4 => Alternation,
            T3 | T5 => NonAlternation,
            T8 | T9 => Restart,
        }
    }

    pub fn is_pause(self) -> bool {
        self.semantic() == TransitionSemantic::Pause
    }
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

// ---------------------------------------------------------------------------
// Fruit layout
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawLayout<S: Scalar> {
    id: String,
    positions: Vec<Point3<S>>,
    required_attempts: Vec<u8>,
}

/// The problem instance: fruit positions (meters, robot base frame) and the
/// number of grasp attempts each fruit needs before it comes off.
///
/// An empty layout is a valid in-memory instance (the trivial case); the
/// file readers reject it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawLayout<S>",
    into = "RawLayout<S>",
    bound(serialize = "S: Scalar", deserialize = "S: Scalar")
)]
pub struct FruitLayout<S: Scalar> {
    id: String,
    positions: Vec<Point3<S>>,
    required_attempts: Vec<u8>,
}

impl<S: Scalar> FruitLayout<S> {
    pub fn new(
        id: impl Into<String>,
        positions: Vec<Point3<S>>,
        required_attempts: Vec<u8>,
    ) -> Result<Self, LayoutError> {
        if positions.len() != required_attempts.len() {
            return Err(LayoutError::LengthMismatch {
                positions: positions.len(),
                attempts: required_attempts.len(),
            });
        }
        for (i, p) in positions.iter().enumerate() {
            if !geom::is_finite(*p) {
                return Err(LayoutError::NonFinitePosition(i));
            }
        }
        for (i, &a) in required_attempts.iter().enumerate() {
            if !(1..=3).contains(&a) {
                return Err(LayoutError::BadAttemptCount { fruit: i, got: a });
            }
        }
        let eps_sq = real::<S>(EPSILON_POS * EPSILON_POS);
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                if geom::dist_sq(positions[i], positions[j]) < eps_sq {
                    return Err(LayoutError::DuplicatePosition(i, j));
                }
            }
        }
        Ok(FruitLayout {
            id: id.into(),
            positions,
            required_attempts,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, fruit: usize) -> Point3<S> {
        self.positions[fruit]
    }

    pub fn positions(&self) -> &[Point3<S>] {
        &self.positions
    }

    pub fn required_attempts(&self, fruit: usize) -> u8 {
        self.required_attempts[fruit]
    }

    pub fn attempt_counts(&self) -> &[u8] {
        &self.required_attempts
    }

    /// True when every fruit needs exactly one attempt.
    pub fn is_failure_free(&self) -> bool {
        self.required_attempts.iter().all(|&a| a == 1)
    }
}

impl<S: Scalar> TryFrom<RawLayout<S>> for FruitLayout<S> {
    type Error = LayoutError;
    fn try_from(raw: RawLayout<S>) -> Result<Self, Self::Error> {
        FruitLayout::new(raw.id, raw.positions, raw.required_attempts)
    }
}

impl<S: Scalar> From<FruitLayout<S>> for RawLayout<S> {
    fn from(l: FruitLayout<S>) -> Self {
        RawLayout {
            id: l.id,
            positions: l.positions,
            required_attempts: l.required_attempts,
        }
    }
}

// ---------------------------------------------------------------------------
// System state
// ---------------------------------------------------------------------------

/// One arm's kinematic state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct ArmState<S: Scalar> {
    pub arm_id: ArmId,
    /// Current position, meters. RP-phase arms sit at their drop point;
    /// AEG-phase arms sit at the fruit they just reached.
    pub position: Point3<S>,
    pub phase: Phase,
    /// Simulation clock at which the arm's current phase work completes.
    pub busy_until: S,
}

/// Full game state: the layout, the four arms, the allocation/attempt/picked
/// matrices, the per-group engagement window, per-group clocks, and the step
/// counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct SystemState<S: Scalar> {
    pub layout: Arc<FruitLayout<S>>,
    pub arms: [ArmState<S>; 4],
    /// N x 4: fruit n is currently assigned to arm m. At most one 1 per row.
    pub allocation: Vec<[bool; 4]>,
    /// N x 4: grasp attempts fruit n has received from arm m, each 0..=3.
    pub attempts: Vec<[u8; 4]>,
    /// N x 4: fruit n was picked by arm m. At most one 1 per row.
    pub picked: Vec<[bool; 4]>,
    /// Fruit each group claimed on its previous step, if still unresolved
    /// enough to matter: masks keep the other group at least d_min away from
    /// it for one step.
    pub pending_target: [Option<usize>; 2],
    /// Accumulated time per group (agent), seconds.
    pub agent_clock: [S; 2],
    /// Joint decision steps taken so far.
    pub step_index: usize,
}

impl<S: Scalar> SystemState<S> {
    /// Fresh state: arms parked at their drop points in RP, clocks zero.
    pub fn initial(layout: Arc<FruitLayout<S>>, drop_points: [Point3<S>; 4]) -> Self {
        let n = layout.len();
        let arms = ArmId::all().map(|arm_id| ArmState {
            arm_id,
            position: drop_points[arm_id.index()],
            phase: Phase::Rp,
            busy_until: S::zero(),
        });
        SystemState {
            layout,
            arms,
            allocation: vec![[false; 4]; n],
            attempts: vec![[0; 4]; n],
            picked: vec![[false; 4]; n],
            pending_target: [None, None],
            agent_clock: [S::zero(), S::zero()],
            step_index: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.layout.len()
    }

    pub fn arm(&self, id: ArmId) -> &ArmState<S> {
        &self.arms[id.index()]
    }

    pub fn group_phases(&self, g: Group) -> (Phase, Phase) {
        let (a, b) = g.arms();
        (self.arms[a.index()].phase, self.arms[b.index()].phase)
    }

    /// Total attempts on a fruit across all arms.
    pub fn attempts_on(&self, fruit: usize) -> u8 {
        self.attempts[fruit].iter().sum()
    }

    pub fn is_picked(&self, fruit: usize) -> bool {
        self.picked[fruit].iter().any(|&p| p)
    }

    pub fn picked_by(&self, fruit: usize) -> Option<ArmId> {
        self.picked[fruit]
            .iter()
            .position(|&p| p)
            .map(|i| ArmId::all()[i])
    }

    pub fn is_allocated(&self, fruit: usize) -> bool {
        self.allocation[fruit].iter().any(|&a| a)
    }

    /// A fruit that burned through all its attempts without being picked.
    pub fn is_abandoned(&self, fruit: usize, max_attempts: u8) -> bool {
        !self.is_picked(fruit) && self.attempts_on(fruit) >= max_attempts
    }

    pub fn picked_count(&self) -> usize {
        (0..self.n()).filter(|&f| self.is_picked(f)).count()
    }

    pub fn abandoned_count(&self, max_attempts: u8) -> usize {
        (0..self.n())
            .filter(|&f| self.is_abandoned(f, max_attempts))
            .count()
    }

    pub fn remaining_count(&self, max_attempts: u8) -> usize {
        self.n() - self.picked_count() - self.abandoned_count(max_attempts)
    }

    /// Every fruit is either picked or abandoned.
    pub fn all_done(&self, max_attempts: u8) -> bool {
        (0..self.n()).all(|f| self.is_picked(f) || self.is_abandoned(f, max_attempts))
    }

    pub fn makespan(&self) -> S {
        self.agent_clock[0].max(self.agent_clock[1])
    }
}

// ---------------------------------------------------------------------------
// Episode metrics
// ---------------------------------------------------------------------------

/// Per-episode outcome numbers the harness reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct EpisodeMetrics<S: Scalar> {
    pub makespan: S,
    pub idle_per_arm: [S; 4],
    pub conflicts: usize,
    pub remaining: usize,
    pub abandoned: usize,
    pub picked_total: usize,
    /// Mean wall-clock seconds per planner decision; tagged non-deterministic
    /// in the outputs.
    pub planning_latency_mean: S,
}

// ---------------------------------------------------------------------------
// State validation
// ---------------------------------------------------------------------------

/// One violated invariant, with enough data to locate it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    DoublePick { fruit: usize },
    DoubleAllocation { fruit: usize },
    AttemptOverflow { fruit: usize, arm: u8 },
    PickedWithoutAttempt { fruit: usize, arm: u8 },
    ShapeMismatch { field: &'static str, rows: usize },
    StepIndexExceeded { step_index: usize, k_max: usize },
    ArmOutsideBox { arm: u8 },
    NegativeBusyUntil { arm: u8 },
    BothArmsAeg { group: Group },
    BadClock { group: Group },
    BadPendingTarget { group: Group, fruit: usize },
}

impl Violation {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::DoublePick { .. } => "double_pick",
            Violation::DoubleAllocation { .. } => "double_allocation",
            Violation::AttemptOverflow { .. } => "attempt_overflow",
            Violation::PickedWithoutAttempt { .. } => "picked_without_attempt",
            Violation::ShapeMismatch { .. } => "shape_mismatch",
            Violation::StepIndexExceeded { .. } => "step_index_exceeded",
            Violation::ArmOutsideBox { .. } => "arm_outside_box",
            Violation::NegativeBusyUntil { .. } => "negative_busy_until",
            Violation::BothArmsAeg { .. } => "both_arms_aeg",
            Violation::BadClock { .. } => "bad_clock",
            Violation::BadPendingTarget { .. } => "bad_pending_target",
        }
    }
}

/// Checks every state invariant and returns one entry per violation.
/// Total: never panics on malformed states.
pub fn validate_state<S: Scalar>(
    state: &SystemState<S>,
    ws: &crate::workspace::WorkspaceConfig<S>,
    cfg: &crate::env::EnvConfig<S>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = state.n();

    for (field, rows) in [
        ("allocation", state.allocation.len()),
        ("attempts", state.attempts.len()),
        ("picked", state.picked.len()),
    ] {
        if rows != n {
            out.push(Violation::ShapeMismatch { field, rows });
        }
    }
    if !out.is_empty() {
        // Row-wise checks below assume consistent shapes.
        return out;
    }

    for fruit in 0..n {
        if state.picked[fruit].iter().filter(|&&p| p).count() > 1 {
            out.push(Violation::DoublePick { fruit });
        }
        if state.allocation[fruit].iter().filter(|&&a| a).count() > 1 {
            out.push(Violation::DoubleAllocation { fruit });
        }
        for arm in ArmId::all() {
            let m = arm.index();
            if state.attempts[fruit][m] > 3 {
                out.push(Violation::AttemptOverflow {
                    fruit,
                    arm: arm.id(),
                });
            }
            if state.picked[fruit][m] && state.attempts[fruit][m] == 0 {
                out.push(Violation::PickedWithoutAttempt {
                    fruit,
                    arm: arm.id(),
                });
            }
        }
    }

    let k_max = cfg.k_max_for(n);
    if state.step_index > k_max {
        out.push(Violation::StepIndexExceeded {
            step_index: state.step_index,
            k_max,
        });
    }

    for arm in &state.arms {
        if !ws.arm_box(arm.arm_id).contains(arm.position) {
            out.push(Violation::ArmOutsideBox {
                arm: arm.arm_id.id(),
            });
        }
        if arm.busy_until < S::zero() || !arm.busy_until.is_finite() {
            out.push(Violation::NegativeBusyUntil {
                arm: arm.arm_id.id(),
            });
        }
    }

    for g in Group::both() {
        let (p1, p2) = state.group_phases(g);
        if p1 == Phase::Aeg && p2 == Phase::Aeg {
            out.push(Violation::BothArmsAeg { group: g });
        }
        let clock = state.agent_clock[g.index()];
        if !clock.is_finite() || clock < S::zero() {
            out.push(Violation::BadClock { group: g });
        }
        if let Some(t) = state.pending_target[g.index()] {
            if t >= n {
                out.push(Violation::BadPendingTarget { group: g, fruit: t });
            }
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;
    use crate::workspace::WorkspaceConfig;

    fn small_layout() -> Arc<FruitLayout<f64>> {
        Arc::new(
            FruitLayout::new(
                "t",
                vec![[0.2, 0.3, 1.8], [0.2, 0.9, 1.0], [0.3, 1.4, 0.4]],
                vec![1, 2, 3],
            )
            .unwrap(),
        )
    }

    fn fresh_state() -> SystemState<f64> {
        let ws = WorkspaceConfig::<f64>::default();
        SystemState::initial(small_layout(), ws.drop_points)
    }

    #[test]
    fn group_action_rejects_target_on_pause() {
        let err = GroupAction::new(Some(3), ArmBits::BothRp).unwrap_err();
        assert_eq!(err, ActionError::TargetOnPause(3));
    }

    #[test]
    fn group_action_rejects_both_aeg_bits_at_decode() {
        let json = r#"{"target": 0, "b_left": 0, "b_right": 0}"#;
        let res: Result<GroupAction, _> = serde_json::from_str(json);
        assert!(res.is_err());
    }

    #[test]
    fn group_action_targets_are_one_based_in_files() {
        let a = GroupAction::claim(9, 0);
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.contains("\"target\":10"), "{json}");
        let back: GroupAction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.target(), Some(9));
    }

    #[test]
    fn semantic_table() {
        use TransitionKind::*;
        use TransitionSemantic::*;
        assert_eq!(T1.semantic(), Pause);
        assert_eq!(T2.semantic(), Alternation);
        assert_eq!(T3.semantic(), NonAlternation);
        assert_eq!(T4.semantic(), Alternation);
        assert_eq!(T5.semantic(), NonAlternation);
        assert_eq!(T6.semantic(), Pause);
        assert_eq!(T7.semantic(), Pause);
        assert_eq!(T8.semantic(), Restart);
        assert_eq!(T9.semantic(), Restart);
    }

    #[test]
    fn layout_rejects_duplicates_and_bad_attempts() {
        let err = FruitLayout::<f64>::new(
            "d",
            vec![[0.0, 0.0, 0.0], [0.0, 0.0, 0.0005]],
            vec![1, 1],
        )
        .unwrap_err();
        assert_eq!(err, LayoutError::DuplicatePosition(0, 1));

        let err =
            FruitLayout::<f64>::new("a", vec![[0.0, 0.0, 0.0]], vec![4]).unwrap_err();
        assert_eq!(err, LayoutError::BadAttemptCount { fruit: 0, got: 4 });
    }

    #[test]
    fn empty_layout_is_a_valid_instance() {
        let l = FruitLayout::<f64>::new("empty", vec![], vec![]).unwrap();
        assert!(l.is_empty());
        assert!(l.is_failure_free());
    }

    #[test]
    fn fresh_state_has_no_violations() {
        let ws = WorkspaceConfig::<f64>::default();
        let cfg = EnvConfig::<f64>::default();
        let s = fresh_state();
        assert_eq!(validate_state(&s, &ws, &cfg), vec![]);
    }

    #[test]
    fn double_pick_is_reported() {
        let ws = WorkspaceConfig::<f64>::default();
        let cfg = EnvConfig::<f64>::default();
        let mut s = fresh_state();
        s.attempts[0] = [1, 1, 0, 0];
        s.picked[0] = [true, true, false, false];
        let v = validate_state(&s, &ws, &cfg);
        assert_eq!(v, vec![Violation::DoublePick { fruit: 0 }]);
        assert_eq!(v[0].code(), "double_pick");
    }

    #[test]
    fn attempt_overflow_is_reported() {
        let ws = WorkspaceConfig::<f64>::default();
        let cfg = EnvConfig::<f64>::default();
        let mut s = fresh_state();
        s.attempts[1][2] = 4;
        let v = validate_state(&s, &ws, &cfg);
        assert_eq!(v, vec![Violation::AttemptOverflow { fruit: 1, arm: 3 }]);
    }

    #[test]
    fn state_roundtrip_is_bit_exact() {
        let mut s = fresh_state();
        s.attempts[1][0] = 2;
        s.allocation[1][0] = true;
        s.agent_clock = [12.125, 7.0625];
        s.pending_target = [Some(1), None];
        s.step_index = 5;
        let json = serde_json::to_string(&s).unwrap();
        let back: SystemState<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
