//! The Markov game: joint-action step function, transition classification,
//! time accounting, rewards, action masking, and observation encoding.
//!
//! A joint step applies one [`GroupAction`] per group. The group whose bits
//! put an arm into AEG claims a fruit and the step costs that AEG (plus the
//! preceding RP when the same arm goes again); a pausing group absorbs idle
//! time by advancing its clock to the working group's. Grasp attempts
//! resolve within the step: a fruit comes off once its cumulative attempts
//! reach its pre-assigned requirement, which keeps episodes deterministic.
//!
//! Termination is judged on the state a step starts from. A step taken from
//! a finished (or timed-out) state is a wrap-up: in-flight retractions are
//! flushed onto the clocks, both clocks meet at the makespan, and the
//! terminal reward is paid. That is why the final placement counts toward
//! the makespan and the completion bonus arrives one step after the last
//! pick.

use serde::{Deserialize, Serialize};

use crate::error::EnvError;
use crate::scalar::{real, Scalar};
use crate::types::{
    validate_state, ArmBits, ArmId, Group, GroupAction, JointAction, Phase, SystemState,
    TransitionKind, TransitionSemantic,
};
use crate::workspace::{
    aeg_duration_from, reachable, rp_duration_from, separation_ok, WorkspaceConfig,
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Reward shaping and episode bookkeeping constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct EnvConfig<S: Scalar> {
    /// Scale factor of the time reward `alpha * (exp(-t) - 1)`.
    pub alpha: S,
    /// Bonus for claiming a never-before-allocated fruit.
    pub r_explore: S,
    /// Penalty per group when both groups' same-step targets are closer
    /// than `d_min`.
    pub r_conflict: S,
    /// Terminal reward when the step budget runs out.
    pub r_timeout: S,
    /// Terminal reward when every fruit is picked (or abandoned).
    pub r_complete: S,
    /// Joint-step budget; `None` resolves to `6 * n` per layout.
    pub k_max: Option<usize>,
    /// Attempts after which an unpicked fruit is abandoned.
    pub max_attempts: u8,
    /// Discount factor (consumed by training).
    pub gamma: S,
    /// Observation capacity: layouts up to this many fruits encode into a
    /// fixed-size vector.
    pub n_max: usize,
    /// Clock normalization constant for observations, seconds.
    pub t_norm: S,
}

impl<S: Scalar> Default for EnvConfig<S> {
    fn default() -> Self {
        EnvConfig {
            alpha: S::one(),
            r_explore: real(0.05),
            r_conflict: real(-0.1),
            r_timeout: real(-50.0),
            r_complete: real(100.0),
            k_max: None,
            max_attempts: 3,
            gamma: real(0.95),
            n_max: 60,
            t_norm: real(60.0),
        }
    }
}

impl<S: Scalar> EnvConfig<S> {
    pub fn k_max_for(&self, n: usize) -> usize {
        self.k_max.unwrap_or(6 * n.max(1))
    }
}

/// Why an episode ended, if it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DoneReason {
    AllPicked,
    Timeout,
    NotDone,
}

/// Outcome of one joint step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct StepResult<S: Scalar> {
    pub next_state: SystemState<S>,
    pub rewards: [S; 2],
    pub transition_kinds: [TransitionKind; 2],
    pub time_deltas: [S; 2],
    pub done: bool,
    pub done_reason: DoneReason,
}

// ---------------------------------------------------------------------------
// Transition classification and time costs
// ---------------------------------------------------------------------------

/// Looks up the transition row for the group's current phases and action
/// bits. The successor phases always equal the bits.
pub fn classify_transition(
    prev_phases: (Phase, Phase),
    bits: ArmBits,
) -> Result<TransitionKind, EnvError> {
    use ArmBits::*;
    use Phase::*;
    use TransitionKind::*;
    match (prev_phases, bits) {
        ((Aeg, Aeg), _) => Err(EnvError::BothArmsAeg),
        ((Aeg, Rp), BothRp) => Ok(T1),
        ((Aeg, Rp), SecondAeg) => Ok(T2),
        ((Aeg, Rp), FirstAeg) => Ok(T3),
        ((Rp, Aeg), FirstAeg) => Ok(T4),
        ((Rp, Aeg), SecondAeg) => Ok(T5),
        ((Rp, Aeg), BothRp) => Ok(T6),
        ((Rp, Rp), BothRp) => Ok(T7),
        ((Rp, Rp), FirstAeg) => Ok(T8),
        ((Rp, Rp), SecondAeg) => Ok(T9),
    }
}

/// Durations of the acting arm's two phases for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDurations<S: Scalar> {
    pub aeg: S,
    pub rp: S,
}

/// Per-group time cost of a step: the AEG alone on an alternation or
/// restart, RP + AEG when the same arm goes again, and the wait on the
/// other agent for a pause.
pub fn time_cost<S: Scalar>(
    kind: TransitionKind,
    durations: PhaseDurations<S>,
    other_agent_delta: S,
) -> S {
    match kind.semantic() {
        TransitionSemantic::Alternation | TransitionSemantic::Restart => durations.aeg,
        TransitionSemantic::NonAlternation => durations.aeg + durations.rp,
        TransitionSemantic::Pause => other_agent_delta,
    }
}

/// Time shaping `alpha * (exp(-t) - 1)`: zero at t = 0, approaching
/// `-alpha` as t grows, strictly decreasing in between.
pub fn time_reward<S: Scalar>(t: S, alpha: S) -> S {
    alpha * ((-t).exp() - S::one())
}

// ---------------------------------------------------------------------------
// Legality
// ---------------------------------------------------------------------------

/// Whether `arm` may claim `fruit` in the current state: unpicked, attempts
/// left, reachable, and not within `d_min` of the fruit the other group
/// engaged on its previous step.
pub fn claimable<S: Scalar>(
    state: &SystemState<S>,
    arm: ArmId,
    fruit: usize,
    cfg: &EnvConfig<S>,
    ws: &WorkspaceConfig<S>,
) -> bool {
    if fruit >= state.n()
        || state.is_picked(fruit)
        || state.attempts_on(fruit) >= cfg.max_attempts
    {
        return false;
    }
    let pos = state.layout.position(fruit);
    if !reachable(arm, pos, ws) {
        return false;
    }
    let other = arm.group().other();
    if let Some(engaged) = state.pending_target[other.index()] {
        if !state.is_picked(engaged)
            && !state.is_abandoned(engaged, cfg.max_attempts)
            && !separation_ok(pos, state.layout.position(engaged), ws)
        {
            return false;
        }
    }
    true
}

/// All legal actions per group. The pause `{0,(1,1)}` is always present;
/// claims are enumerated per slot in fruit order.
pub fn legal_actions<S: Scalar>(
    state: &SystemState<S>,
    cfg: &EnvConfig<S>,
    ws: &WorkspaceConfig<S>,
) -> [Vec<GroupAction>; 2] {
    Group::both().map(|g| {
        let mut out = vec![GroupAction::pause()];
        let (first, second) = g.arms();
        for (slot, arm) in [(0usize, first), (1usize, second)] {
            for fruit in 0..state.n() {
                if claimable(state, arm, fruit, cfg, ws) {
                    out.push(GroupAction::claim(fruit, slot));
                }
            }
        }
        out
    })
}

fn check_legal<S: Scalar>(
    state: &SystemState<S>,
    g: Group,
    action: GroupAction,
    cfg: &EnvConfig<S>,
    ws: &WorkspaceConfig<S>,
) -> Result<(), EnvError> {
    let gi = g.index();
    match (action.target(), action.bits().aeg_slot()) {
        (None, None) => Ok(()),
        (None, Some(_)) => Err(EnvError::IllegalAction {
            group: gi,
            reason: "an arm cannot enter AEG without a target".into(),
        }),
        (Some(t), None) => unreachable!("type boundary rejects target {t} on a pause"),
        (Some(t), Some(slot)) => {
            let (first, second) = g.arms();
            let arm = if slot == 0 { first } else { second };
            if t >= state.n() {
                return Err(EnvError::IllegalAction {
                    group: gi,
                    reason: format!("fruit {t} out of range"),
                });
            }
            if !claimable(state, arm, t, cfg, ws) {
                return Err(EnvError::IllegalAction {
                    group: gi,
                    reason: format!("fruit {t} is not claimable by {arm}"),
                });
            }
            Ok(())
        }
    }
}

/// Same-step conflict: both groups claimed targets closer than `d_min`.
pub fn is_conflict<S: Scalar>(
    state: &SystemState<S>,
    actions: &JointAction,
    ws: &WorkspaceConfig<S>,
) -> bool {
    match (actions[0].target(), actions[1].target()) {
        (Some(a), Some(b)) => {
            a < state.n()
                && b < state.n()
                && !separation_ok(state.layout.position(a), state.layout.position(b), ws)
        }
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Step
// ---------------------------------------------------------------------------

/// Applies a joint action. Pure: identical inputs give identical results.
///
/// Claims are resolved in group order (U then D) within the step, so a
/// same-step race for one fruit settles deterministically: the second
/// group's grab finds the fruit gone and burns the motion without touching
/// the matrices.
pub fn step<S: Scalar>(
    state: &SystemState<S>,
    actions: &JointAction,
    cfg: &EnvConfig<S>,
    ws: &WorkspaceConfig<S>,
) -> Result<StepResult<S>, EnvError> {
    let violations = validate_state(state, ws, cfg);
    if !violations.is_empty() {
        return Err(EnvError::InvalidState(violations));
    }

    let all_done = state.all_done(cfg.max_attempts);
    let timed_out = state.step_index >= cfg.k_max_for(state.n());
    if all_done || timed_out {
        return Ok(wrap_up(state, cfg, ws, all_done));
    }

    let mut kinds = [TransitionKind::T7; 2];
    for g in Group::both() {
        let a = actions[g.index()];
        kinds[g.index()] = classify_transition(state.group_phases(g), a.bits())?;
        check_legal(state, g, a, cfg, ws)?;
    }

    let mut next = state.clone();
    next.step_index += 1;

    let mut work_delta: [Option<S>; 2] = [None, None];
    let mut claimed: [Option<usize>; 2] = [None, None];
    let mut explored = [false; 2];

    for g in Group::both() {
        let gi = g.index();
        let action = actions[gi];
        let kind = kinds[gi];
        let (first, second) = g.arms();
        let clock = state.agent_clock[gi];

        if kind.is_pause() {
            // A pausing group still finishes an in-flight retraction; the
            // time disappears into the idle window.
            for arm_id in [first, second] {
                if next.arms[arm_id.index()].phase == Phase::Aeg {
                    let rp = rp_duration_from(next.arms[arm_id.index()].position, arm_id, ws);
                    let arm = &mut next.arms[arm_id.index()];
                    arm.position = ws.drop_point(arm_id);
                    arm.phase = Phase::Rp;
                    arm.busy_until = clock + rp;
                }
            }
            next.pending_target[gi] = None;
            continue;
        }

        let slot = action.bits().aeg_slot().expect("non-pause has an AEG slot");
        let acting = if slot == 0 { first } else { second };
        let sibling = if slot == 0 { second } else { first };
        let target = action.target().expect("legality guarantees a target");
        let fruit_pos = state.layout.position(target);

        let durations = if kind.semantic() == TransitionSemantic::NonAlternation {
            // Same arm again: retract and place from the fruit it holds,
            // then approach the new target from the drop point.
            let rp = rp_duration_from(next.arms[acting.index()].position, acting, ws);
            let aeg = aeg_duration_from(ws.drop_point(acting), fruit_pos, ws);
            PhaseDurations { aeg, rp }
        } else {
            // Alternation or restart: the entering arm approaches from where
            // it stands; a sibling leaving AEG retracts concurrently and its
            // RP does not advance the clock.
            let aeg = aeg_duration_from(next.arms[acting.index()].position, fruit_pos, ws);
            if next.arms[sibling.index()].phase == Phase::Aeg {
                let rp = rp_duration_from(next.arms[sibling.index()].position, sibling, ws);
                let arm = &mut next.arms[sibling.index()];
                arm.position = ws.drop_point(sibling);
                arm.phase = Phase::Rp;
                arm.busy_until = clock + rp;
            }
            PhaseDurations {
                aeg,
                rp: S::zero(),
            }
        };
        let delta = time_cost(kind, durations, S::zero());

        // Resolve the grasp. U settles before D, so a fruit the first group
        // just finished cannot be re-attempted in the same step.
        let gone = next.is_picked(target) || next.is_abandoned(target, cfg.max_attempts);
        if !gone {
            explored[gi] = !next.is_allocated(target);
            next.allocation[target] = [false; 4];
            next.allocation[target][acting.index()] = true;
            next.attempts[target][acting.index()] += 1;
            if next.attempts_on(target) >= state.layout.required_attempts(target) {
                next.picked[target][acting.index()] = true;
            }
        }

        let arm = &mut next.arms[acting.index()];
        arm.position = fruit_pos;
        arm.phase = Phase::Aeg;
        arm.busy_until = clock + delta;

        work_delta[gi] = Some(delta);
        claimed[gi] = Some(target);
        next.pending_target[gi] = Some(target);
    }

    // Clocks: workers advance by their cost; a pausing group realigns up to
    // the other group's post-action clock (never backwards).
    let mut clocks = state.agent_clock;
    for gi in 0..2 {
        if let Some(d) = work_delta[gi] {
            clocks[gi] = clocks[gi] + d;
        }
    }
    match (work_delta[0], work_delta[1]) {
        (None, None) => {
            let m = clocks[0].max(clocks[1]);
            clocks = [m, m];
        }
        (None, Some(_)) => clocks[0] = clocks[0].max(clocks[1]),
        (Some(_), None) => clocks[1] = clocks[1].max(clocks[0]),
        (Some(_), Some(_)) => {}
    }
    let time_deltas = [
        clocks[0] - state.agent_clock[0],
        clocks[1] - state.agent_clock[1],
    ];
    next.agent_clock = clocks;

    let conflict = match (claimed[0], claimed[1]) {
        (Some(a), Some(b)) => {
            !separation_ok(state.layout.position(a), state.layout.position(b), ws)
        }
        _ => false,
    };

    let mut rewards = [S::zero(); 2];
    for gi in 0..2 {
        let mut r = time_reward(time_deltas[gi], cfg.alpha);
        if explored[gi] {
            r = r + cfg.r_explore;
        }
        if conflict {
            r = r + cfg.r_conflict;
        }
        rewards[gi] = r;
    }

    Ok(StepResult {
        next_state: next,
        rewards,
        transition_kinds: kinds,
        time_deltas,
        done: false,
        done_reason: DoneReason::NotDone,
    })
}

/// Terminal step: flush in-flight retractions, meet at the makespan, pay
/// the terminal reward. Completion outranks timeout if both hold.
fn wrap_up<S: Scalar>(
    state: &SystemState<S>,
    cfg: &EnvConfig<S>,
    ws: &WorkspaceConfig<S>,
    all_done: bool,
) -> StepResult<S> {
    let mut next = state.clone();
    let mut kinds = [TransitionKind::T7; 2];

    for g in Group::both() {
        let gi = g.index();
        kinds[gi] = classify_transition(state.group_phases(g), ArmBits::BothRp)
            .expect("validated state has at most one AEG arm per group");
        let (first, second) = g.arms();
        for arm_id in [first, second] {
            if next.arms[arm_id.index()].phase == Phase::Aeg {
                let rp = rp_duration_from(next.arms[arm_id.index()].position, arm_id, ws);
                next.agent_clock[gi] = next.agent_clock[gi] + rp;
                let arm = &mut next.arms[arm_id.index()];
                arm.position = ws.drop_point(arm_id);
                arm.phase = Phase::Rp;
                arm.busy_until = next.agent_clock[gi];
            }
        }
        next.pending_target[gi] = None;
    }

    let makespan = next.agent_clock[0].max(next.agent_clock[1]);
    let time_deltas = [
        makespan - state.agent_clock[0],
        makespan - state.agent_clock[1],
    ];
    next.agent_clock = [makespan, makespan];

    let r = if all_done {
        cfg.r_complete
    } else {
        cfg.r_timeout
    };
    StepResult {
        next_state: next,
        rewards: [r, r],
        transition_kinds: kinds,
        time_deltas,
        done: true,
        done_reason: if all_done {
            DoneReason::AllPicked
        } else {
            DoneReason::Timeout
        },
    }
}

// ---------------------------------------------------------------------------
// Observation encoding
// ---------------------------------------------------------------------------

/// Boolean masks over the factorized action heads.
///
/// Target heads have `n_max + 1` entries (index 0 = no new target, index
/// i+1 = fruit i); bit heads have 3 entries in [`ArmBits::all`] order. The
/// per-slot fruit masks support conditioning the bit choice on a sampled
/// target.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionMask {
    pub n_max: usize,
    /// Per group: target-head mask, `n_max + 1` entries.
    pub target: [Vec<bool>; 2],
    /// Per group and slot: which fruits that slot's arm may claim.
    pub per_slot: [[Vec<bool>; 2]; 2],
    /// Per group: bit-head mask (FirstAeg, SecondAeg, BothRp).
    pub bits: [[bool; 3]; 2],
}

impl ActionMask {
    pub fn build<S: Scalar>(
        state: &SystemState<S>,
        cfg: &EnvConfig<S>,
        ws: &WorkspaceConfig<S>,
    ) -> Self {
        let n_max = cfg.n_max;
        let mut target: [Vec<bool>; 2] = [vec![false; n_max + 1], vec![false; n_max + 1]];
        let mut per_slot: [[Vec<bool>; 2]; 2] = [
            [vec![false; n_max], vec![false; n_max]],
            [vec![false; n_max], vec![false; n_max]],
        ];
        let mut bits = [[false; 3]; 2];
        for g in Group::both() {
            let gi = g.index();
            let (first, second) = g.arms();
            target[gi][0] = true;
            for (slot, arm) in [(0usize, first), (1usize, second)] {
                for fruit in 0..state.n().min(n_max) {
                    if claimable(state, arm, fruit, cfg, ws) {
                        per_slot[gi][slot][fruit] = true;
                        target[gi][fruit + 1] = true;
                        bits[gi][slot] = true;
                    }
                }
            }
            bits[gi][2] = true;
        }
        ActionMask {
            n_max,
            target,
            per_slot,
            bits,
        }
    }

    /// Flat boolean mask `[target_U, bits_U, target_D, bits_D]`, length
    /// `2 * (n_max + 1) + 2 * 3`.
    pub fn flat(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(2 * (self.n_max + 1) + 6);
        for gi in 0..2 {
            out.extend_from_slice(&self.target[gi]);
            out.extend_from_slice(&self.bits[gi]);
        }
        out
    }

    /// Bit-head mask conditioned on a sampled target: with no target only
    /// the pause bits remain; with a fruit only the slots that can claim it.
    pub fn bits_given_target(&self, gi: usize, target: Option<usize>) -> [bool; 3] {
        match target {
            None => [false, false, true],
            Some(f) => [
                self.per_slot[gi][0].get(f).copied().unwrap_or(false),
                self.per_slot[gi][1].get(f).copied().unwrap_or(false),
                false,
            ],
        }
    }
}

/// Index layout of the flat observation vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObsLayout {
    pub n_max: usize,
}

impl ObsLayout {
    pub fn new(n_max: usize) -> Self {
        ObsLayout { n_max }
    }

    pub fn positions_offset(&self) -> usize {
        0
    }

    pub fn flags_offset(&self) -> usize {
        3 * self.n_max
    }

    pub fn arms_offset(&self) -> usize {
        7 * self.n_max
    }

    pub fn clocks_offset(&self) -> usize {
        7 * self.n_max + 16
    }

    pub fn len(&self) -> usize {
        7 * self.n_max + 18
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Encoded observation: fixed-length features plus the action mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<S: Scalar> {
    pub features: Vec<S>,
    pub mask: ActionMask,
}

fn normalize<S: Scalar>(p: [S; 3], lo: [S; 3], hi: [S; 3]) -> [S; 3] {
    let mut out = [S::zero(); 3];
    for i in 0..3 {
        let span = hi[i] - lo[i];
        out[i] = if span > S::zero() {
            (p[i] - lo[i]) / span
        } else {
            S::zero()
        };
    }
    out
}

/// Encodes the state into a flat vector: fruit positions normalized to the
/// workspace extents (zero-padded to `n_max`), per-fruit flags
/// (allocated, attempts/3, picked, abandoned), arm positions plus phase
/// bits, and the two clocks over `t_norm`.
pub fn encode_observation<S: Scalar>(
    state: &SystemState<S>,
    cfg: &EnvConfig<S>,
    ws: &WorkspaceConfig<S>,
) -> Result<Observation<S>, EnvError> {
    let n = state.n();
    if n > cfg.n_max {
        return Err(EnvError::TooManyFruits { n, n_max: cfg.n_max });
    }
    let layout = ObsLayout::new(cfg.n_max);
    let ext = ws.extents();
    let mut features = Vec::with_capacity(layout.len());

    for fruit in 0..cfg.n_max {
        if fruit < n {
            features.extend(normalize(state.layout.position(fruit), ext.min, ext.max));
        } else {
            features.extend([S::zero(); 3]);
        }
    }
    let third = S::one() / real::<S>(3.0);
    for fruit in 0..cfg.n_max {
        if fruit < n {
            features.push(if state.is_allocated(fruit) {
                S::one()
            } else {
                S::zero()
            });
            features.push(real::<S>(state.attempts_on(fruit) as f64) * third);
            features.push(if state.is_picked(fruit) {
                S::one()
            } else {
                S::zero()
            });
            features.push(if state.is_abandoned(fruit, cfg.max_attempts) {
                S::one()
            } else {
                S::zero()
            });
        } else {
            features.extend([S::zero(); 4]);
        }
    }
    for arm in &state.arms {
        features.extend(normalize(arm.position, ext.min, ext.max));
        // Phase bit as in the state model: 0 at AEG, 1 at RP.
        features.push(match arm.phase {
            Phase::Aeg => S::zero(),
            Phase::Rp => S::one(),
        });
    }
    features.push(state.agent_clock[0] / cfg.t_norm);
    features.push(state.agent_clock[1] / cfg.t_norm);
    debug_assert_eq!(features.len(), layout.len());

    Ok(Observation {
        features,
        mask: ActionMask::build(state, cfg, ws),
    })
}

/// Recovers a fruit position from an encoded observation (test support for
/// the encoding round-trip).
pub fn decode_position<S: Scalar>(
    features: &[S],
    fruit: usize,
    layout: ObsLayout,
    ws: &WorkspaceConfig<S>,
) -> [S; 3] {
    let ext = ws.extents();
    let off = layout.positions_offset() + 3 * fruit;
    let mut out = [S::zero(); 3];
    for i in 0..3 {
        out[i] = ext.min[i] + features[off + i] * (ext.max[i] - ext.min[i]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::FruitLayout;
    use std::sync::Arc;

    fn ws() -> WorkspaceConfig<f64> {
        WorkspaceConfig::default()
    }

    fn cfg() -> EnvConfig<f64> {
        EnvConfig::default()
    }

    fn state_with(
        positions: Vec<[f64; 3]>,
        attempts: Vec<u8>,
    ) -> SystemState<f64> {
        let layout = Arc::new(FruitLayout::new("t", positions, attempts).unwrap());
        SystemState::initial(layout, ws().drop_points)
    }

    #[test]
    fn transition_table_exhaustive() {
        use ArmBits::*;
        use Phase::*;
        use TransitionKind::*;
        use TransitionSemantic as Sem;
        let rows = [
            ((Aeg, Rp), BothRp, T1, Sem::Pause),
            ((Aeg, Rp), SecondAeg, T2, Sem::Alternation),
            ((Aeg, Rp), FirstAeg, T3, Sem::NonAlternation),
            ((Rp, Aeg), FirstAeg, T4, Sem::Alternation),
            ((Rp, Aeg), SecondAeg, T5, Sem::NonAlternation),
            ((Rp, Aeg), BothRp, T6, Sem::Pause),
            ((Rp, Rp), BothRp, T7, Sem::Pause),
            ((Rp, Rp), FirstAeg, T8, Sem::Restart),
            ((Rp, Rp), SecondAeg, T9, Sem::Restart),
        ];
        for (phases, bits, kind, sem) in rows {
            let got = classify_transition(phases, bits).unwrap();
            assert_eq!(got, kind);
            assert_eq!(got.semantic(), sem);
            assert_eq!(bits.next_phases(), expected_next(kind));
        }
        assert!(classify_transition((Aeg, Aeg), BothRp).is_err());
    }

    fn expected_next(kind: TransitionKind) -> (Phase, Phase) {
        use Phase::*;
        use TransitionKind::*;
        match kind {
            T1 | T6 | T7 => (Rp, Rp),
            T2 | T5 | T9 => (Rp, Aeg),
            T3 | T4 | T8 => (Aeg, Rp),
        }
    }

    #[test]
    fn time_cost_cases() {
        let d = PhaseDurations { aeg: 2.5, rp: 2.0 };
        assert_eq!(time_cost(TransitionKind::T2, d, 0.0), 2.5);
        assert_eq!(time_cost(TransitionKind::T4, d, 0.0), 2.5);
        assert_eq!(time_cost(TransitionKind::T8, d, 0.0), 2.5);
        assert_eq!(time_cost(TransitionKind::T3, d, 0.0), 4.5);
        assert_eq!(time_cost(TransitionKind::T5, d, 0.0), 4.5);
        assert_eq!(time_cost(TransitionKind::T7, d, 3.1), 3.1);
        assert_eq!(time_cost(TransitionKind::T1, d, 3.1), 3.1);
    }

    #[test]
    fn time_reward_values() {
        assert_eq!(time_reward(0.0, 1.0), 0.0);
        let r = time_reward(std::f64::consts::LN_2, 1.0);
        assert!((r + 0.5).abs() < 1e-12, "{r}");
        let far = time_reward(1e6, 1.0);
        assert!((far + 1.0).abs() < 1e-12);
        // Strictly decreasing.
        assert!(time_reward(1.0, 1.0) > time_reward(2.0, 1.0));
    }

    /// Two-step hand trace: one fruit sitting exactly at arm 1's drop point.
    /// Step 1 picks it in t_grasp; step 2 wraps up with +100 and the final
    /// placement on the clock.
    #[test]
    fn single_fruit_two_step_trace() {
        let ws = ws();
        let cfg = cfg();
        let drop = ws.drop_point(ArmId::new(1).unwrap());
        let s0 = state_with(vec![drop], vec![1]);

        let claim = GroupAction::claim(0, 0);
        let r1 = step(&s0, &[claim, GroupAction::pause()], &cfg, &ws).unwrap();
        assert!(!r1.done);
        assert_eq!(r1.transition_kinds[0], TransitionKind::T8);
        assert_eq!(r1.transition_kinds[1], TransitionKind::T7);
        assert_eq!(r1.time_deltas[0], ws.t_grasp);
        // The pausing group waits out the worker.
        assert_eq!(r1.time_deltas[1], ws.t_grasp);
        assert!(r1.next_state.is_picked(0));
        // Exploration bonus on top of the time shaping.
        let expected = time_reward(ws.t_grasp, cfg.alpha) + cfg.r_explore;
        assert!((r1.rewards[0] - expected).abs() < 1e-12);

        let pauses = [GroupAction::pause(), GroupAction::pause()];
        let r2 = step(&r1.next_state, &pauses, &cfg, &ws).unwrap();
        assert!(r2.done);
        assert_eq!(r2.done_reason, DoneReason::AllPicked);
        assert_eq!(r2.rewards, [100.0, 100.0]);
        // Makespan includes the trailing placement.
        let expected_makespan = ws.t_grasp + ws.t_place;
        assert_eq!(r2.next_state.agent_clock, [expected_makespan; 2]);
    }

    #[test]
    fn close_targets_cost_both_groups_the_conflict_penalty() {
        let ws = ws();
        let cfg = cfg();
        // Both fruits in the center zone, 0.1 m apart, claimable by both
        // groups.
        let s0 = state_with(vec![[0.4, 0.8, 1.0], [0.4, 0.9, 1.0]], vec![1, 1]);
        let actions = [GroupAction::claim(0, 0), GroupAction::claim(1, 0)];
        assert!(is_conflict(&s0, &actions, &ws));
        let r = step(&s0, &actions, &cfg, &ws).unwrap();
        for gi in 0..2 {
            let baseline = time_reward(r.time_deltas[gi], cfg.alpha) + cfg.r_explore;
            assert!((r.rewards[gi] - (baseline + cfg.r_conflict)).abs() < 1e-12);
        }
    }

    #[test]
    fn timeout_pays_minus_fifty() {
        let ws = ws();
        let mut cfg = cfg();
        cfg.k_max = Some(1);
        let s0 = state_with(vec![[0.4, 0.8, 1.0]], vec![1]);
        let pauses = [GroupAction::pause(), GroupAction::pause()];
        let r1 = step(&s0, &pauses, &cfg, &ws).unwrap();
        assert!(!r1.done);
        let r2 = step(&r1.next_state, &pauses, &cfg, &ws).unwrap();
        assert!(r2.done);
        assert_eq!(r2.done_reason, DoneReason::Timeout);
        assert_eq!(r2.rewards, [-50.0, -50.0]);
    }

    #[test]
    fn same_step_race_settles_in_group_order() {
        let ws = ws();
        let cfg = cfg();
        let s0 = state_with(vec![[0.4, 0.8, 1.0]], vec![1]);
        // Both groups grab the only fruit; U wins, D burns the motion.
        let actions = [GroupAction::claim(0, 0), GroupAction::claim(0, 1)];
        let r = step(&s0, &actions, &cfg, &ws).unwrap();
        assert_eq!(r.next_state.picked_by(0), Some(ArmId::new(1).unwrap()));
        assert_eq!(r.next_state.attempts_on(0), 1);
        // Conflict penalty applies (distance zero), exploration only for U.
        let d_reward = r.rewards[1];
        let d_expected = time_reward(r.time_deltas[1], cfg.alpha) + cfg.r_conflict;
        assert!((d_reward - d_expected).abs() < 1e-12);
    }

    #[test]
    fn illegal_actions_are_rejected() {
        let ws = ws();
        let cfg = cfg();
        let s0 = state_with(vec![[0.4, 0.2, 1.9]], vec![1]); // E1: arm 1 only
        // Arm 2 cannot reach an E1 fruit.
        let err = step(
            &s0,
            &[GroupAction::claim(0, 1), GroupAction::pause()],
            &cfg,
            &ws,
        )
        .unwrap_err();
        assert!(matches!(err, EnvError::IllegalAction { group: 0, .. }));
        // AEG bits without a target.
        let bad = GroupAction::new(None, ArmBits::FirstAeg).unwrap();
        let err = step(&s0, &[bad, GroupAction::pause()], &cfg, &ws).unwrap_err();
        assert!(matches!(err, EnvError::IllegalAction { group: 0, .. }));
    }

    #[test]
    fn masks_follow_reachability_and_attempts() {
        let ws = ws();
        let cfg = cfg();
        // Fruit 0 in E1 (arm 1 only), fruit 1 in E3 (arm 3 only).
        let mut s = state_with(vec![[0.4, 0.2, 1.9], [0.4, 1.5, 0.3]], vec![1, 1]);
        let legal = legal_actions(&s, &cfg, &ws);
        assert!(legal[0].contains(&GroupAction::claim(0, 0)));
        assert!(!legal[0].contains(&GroupAction::claim(0, 1)));
        assert!(!legal[0].contains(&GroupAction::claim(1, 0)));
        assert!(legal[1].contains(&GroupAction::claim(1, 0)));
        assert!(legal[0].contains(&GroupAction::pause()));

        // A fruit at the attempt cap, still unpicked, drops out of every mask.
        s.attempts[0] = [3, 0, 0, 0];
        let legal = legal_actions(&s, &cfg, &ws);
        assert_eq!(legal[0], vec![GroupAction::pause()]);

        // No fruits left: pause only.
        s.picked[1] = [false, false, true, false];
        s.attempts[1] = [0, 0, 1, 0];
        let legal = legal_actions(&s, &cfg, &ws);
        assert_eq!(legal[0], vec![GroupAction::pause()]);
        assert_eq!(legal[1], vec![GroupAction::pause()]);
    }

    #[test]
    fn engagement_window_masks_nearby_fruit_for_one_step() {
        let ws = ws();
        let cfg = cfg();
        // Fruit 0 needs two attempts; fruit 1 sits 0.1 m away. After U
        // engages fruit 0 and fails, D must stay off fruit 1 for one step.
        let s0 = state_with(vec![[0.4, 0.8, 1.0], [0.4, 0.9, 1.0]], vec![2, 1]);
        let r1 = step(
            &s0,
            &[GroupAction::claim(0, 0), GroupAction::pause()],
            &cfg,
            &ws,
        )
        .unwrap();
        let s1 = &r1.next_state;
        assert_eq!(s1.pending_target[0], Some(0));
        let legal = legal_actions(s1, &cfg, &ws);
        assert!(!legal[1].contains(&GroupAction::claim(1, 0)));
        assert!(!legal[1].contains(&GroupAction::claim(0, 0)));
        // U itself may re-attempt its own fruit immediately.
        assert!(legal[0].contains(&GroupAction::claim(0, 0)));

        // After U pauses, the window clears and D may claim fruit 1.
        let r2 = step(
            &s1,
            &[GroupAction::pause(), GroupAction::pause()],
            &cfg,
            &ws,
        )
        .unwrap();
        let legal = legal_actions(&r2.next_state, &cfg, &ws);
        assert!(legal[1].contains(&GroupAction::claim(1, 0)));
    }

    #[test]
    fn step_is_deterministic() {
        let ws = ws();
        let cfg = cfg();
        let s0 = state_with(vec![[0.4, 0.8, 1.0], [0.3, 0.4, 1.5]], vec![2, 1]);
        let actions = [GroupAction::claim(0, 0), GroupAction::claim(0, 1)];
        let a = step(&s0, &actions, &cfg, &ws).unwrap();
        let b = step(&s0, &actions, &cfg, &ws).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn observation_shape_and_mask_length() {
        let ws = ws();
        let mut cfg = cfg();
        cfg.n_max = 8;
        let s = state_with(vec![[0.4, 0.8, 1.0], [0.3, 0.4, 1.5]], vec![1, 1]);
        let obs = encode_observation(&s, &cfg, &ws).unwrap();
        let layout = ObsLayout::new(cfg.n_max);
        assert_eq!(obs.features.len(), layout.len());
        assert_eq!(obs.features.len(), 7 * 8 + 18);
        assert_eq!(obs.mask.flat().len(), 2 * (8 + 1) + 2 * 3);
        // Padding slots are zero.
        let start = 3 * 2;
        assert!(obs.features[start..3 * 8].iter().all(|&x| x == 0.0));

        // Position round-trip within 1e-6.
        for fruit in 0..2 {
            let back = decode_position(&obs.features, fruit, layout, &ws);
            let orig = s.layout.position(fruit);
            for i in 0..3 {
                assert!((back[i] - orig[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn observation_rejects_oversized_layouts() {
        let ws = ws();
        let mut cfg = cfg();
        cfg.n_max = 1;
        let s = state_with(vec![[0.4, 0.8, 1.0], [0.3, 0.4, 1.5]], vec![1, 1]);
        assert!(matches!(
            encode_observation(&s, &cfg, &ws),
            Err(EnvError::TooManyFruits { n: 2, n_max: 1 })
        ));
    }
}
