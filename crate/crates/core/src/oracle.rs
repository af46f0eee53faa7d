//! Exhaustive ground truth: the minimal-makespan joint action sequence on
//! tiny instances, searched through the same step function the planners
//! use, so a witness sequence replays to exactly the reported number.

use std::collections::HashMap;
use std::sync::Arc;

use crate::env::{legal_actions, step, EnvConfig};
use crate::error::OracleError;
use crate::scalar::Scalar;
use crate::types::{FruitLayout, GroupAction, JointAction, Phase, SystemState};
use crate::workspace::WorkspaceConfig;

/// Instance-size cap for the search.
pub const MAX_FRUITS: usize = 6;

/// Memoization granularity for the clock difference, seconds.
const DIFF_BUCKET: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Allow layouts where fruits need several attempts.
    pub with_failures: bool,
    /// Abort after this many expanded nodes.
    pub node_budget: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            with_failures: false,
            node_budget: 10_000_000,
        }
    }
}

/// Search outcome: the optimum and one witness sequence ending in the
/// terminal wrap-up step.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<S: Scalar> {
    pub makespan: S,
    pub sequence: Vec<JointAction>,
    pub expanded: usize,
}

/// Discrete projection of a state for memoization. Clock values stay out of
/// the key; they are compared exactly on a per-key dominance frontier.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Key {
    /// Per arm: 0xFE parked (RP at drop), else the fruit index it stands at.
    arm_at: [u8; 4],
    picked: u8,
    /// Two bits of cumulative attempts per fruit.
    attempts: u32,
    pending: [u8; 2],
    diff_bucket: i64,
}

struct Search<'a, S: Scalar> {
    layout: Arc<FruitLayout<S>>,
    cfg: &'a EnvConfig<S>,
    ws: &'a WorkspaceConfig<S>,
    best: Option<S>,
    best_seq: Vec<JointAction>,
    /// Per key: Pareto frontier of (clock_u, clock_d, step_index) reached.
    seen: HashMap<Key, Vec<(S, S, usize)>>,
    expanded: usize,
    budget: usize,
}

/// Minimal terminal makespan over all legal joint-action sequences.
///
/// Depth-first search through [`step`], pruned by the incumbent and by
/// dominance over previously reached clock vectors. Failure-free instances
/// only, unless `with_failures` is set.
pub fn optimal_makespan<S: Scalar>(
    layout: &FruitLayout<S>,
    ws: &WorkspaceConfig<S>,
    cfg: &EnvConfig<S>,
    options: OracleOptions,
) -> Result<OracleResult<S>, OracleError> {
    if layout.len() > MAX_FRUITS {
        return Err(OracleError::TooLarge(layout.len(), MAX_FRUITS));
    }
    if !options.with_failures && !layout.is_failure_free() {
        return Err(OracleError::HasFailures);
    }

    let layout = Arc::new(layout.clone());
    let state = SystemState::initial(layout.clone(), ws.drop_points);
    // Keep the step budget out of the way: the optimum never needs more
    // than one claim per attempt plus transient deferrals.
    let mut search_cfg = cfg.clone();
    search_cfg.k_max = Some(cfg.k_max_for(layout.len()).max(12 * layout.len() + 24));

    let mut search = Search {
        layout,
        cfg: &search_cfg,
        ws,
        best: None,
        best_seq: Vec::new(),
        seen: HashMap::new(),
        expanded: 0,
        budget: options.node_budget,
    };
    let mut prefix = Vec::new();
    search.dfs(&state, &mut prefix)?;

    let makespan = search.best.expect("wrap-up is always reachable");
    Ok(OracleResult {
        makespan,
        sequence: search.best_seq,
        expanded: search.expanded,
    })
}

/// Replays a witness through the step function; returns the terminal
/// makespan. Errors if the sequence does not end the episode.
pub fn replay<S: Scalar>(
    layout: &FruitLayout<S>,
    sequence: &[JointAction],
    ws: &WorkspaceConfig<S>,
    cfg: &EnvConfig<S>,
) -> Result<S, OracleError> {
    let mut cfg = cfg.clone();
    cfg.k_max = Some(cfg.k_max_for(layout.len()).max(12 * layout.len() + 24));
    let mut state = SystemState::initial(Arc::new(layout.clone()), ws.drop_points);
    let mut done = false;
    for joint in sequence {
        let r = step(&state, joint, &cfg, ws)?;
        state = r.next_state;
        if r.done {
            done = true;
            break;
        }
    }
    if !done {
        return Err(OracleError::Env(crate::error::EnvError::IllegalAction {
            group: 0,
            reason: "witness sequence does not terminate the episode".into(),
        }));
    }
    Ok(state.makespan())
}

impl<S: Scalar> Search<'_, S> {
    fn key_of(&self, state: &SystemState<S>) -> Key {
        let mut arm_at = [0xFEu8; 4];
        for (i, arm) in state.arms.iter().enumerate() {
            if arm.phase == Phase::Aeg {
                let at = (0..state.n())
                    .find(|&f| self.layout.position(f) == arm.position)
                    .expect("an AEG arm stands at a fruit");
                arm_at[i] = at as u8;
            }
        }
        let mut picked = 0u8;
        let mut attempts = 0u32;
        for f in 0..state.n() {
            if state.is_picked(f) {
                picked |= 1 << f;
            }
            attempts |= u32::from(state.attempts_on(f).min(3)) << (2 * f);
        }
        let pending = state
            .pending_target
            .map(|p| p.map_or(0xFF, |f| f as u8));
        let diff = state.agent_clock[0] - state.agent_clock[1];
        Key {
            arm_at,
            picked,
            attempts,
            pending,
            diff_bucket: (diff.to_config() / DIFF_BUCKET).floor() as i64,
        }
    }

    /// Dominance check and frontier insert; true means prune this node.
    fn dominated(&mut self, state: &SystemState<S>) -> bool {
        let key = self.key_of(state);
        let cu = state.agent_clock[0];
        let cd = state.agent_clock[1];
        let k = state.step_index;
        let frontier = self.seen.entry(key).or_default();
        if frontier
            .iter()
            .any(|&(u, d, ki)| u <= cu && d <= cd && ki <= k)
        {
            return true;
        }
        frontier.retain(|&(u, d, ki)| !(cu <= u && cd <= d && k <= ki));
        frontier.push((cu, cd, k));
        false
    }

    fn dfs(
        &mut self,
        state: &SystemState<S>,
        prefix: &mut Vec<JointAction>,
    ) -> Result<(), OracleError> {
        self.expanded += 1;
        if self.expanded > self.budget {
            return Err(OracleError::SearchBudgetExceeded(self.expanded));
        }

        if state.all_done(self.cfg.max_attempts) {
            let pauses = [GroupAction::pause(), GroupAction::pause()];
            let r = step(state, &pauses, self.cfg, self.ws)?;
            let makespan = r.next_state.makespan();
            if self.best.map_or(true, |b| makespan < b) {
                self.best = Some(makespan);
                let mut seq = prefix.clone();
                seq.push(pauses);
                self.best_seq = seq;
            }
            return Ok(());
        }

        // The terminal makespan can only grow from here.
        if let Some(best) = self.best {
            if state.makespan() >= best {
                return Ok(());
            }
        }
        if state.step_index >= self.cfg.k_max_for(state.n()) {
            return Ok(()); // timeout branch: never optimal
        }
        if self.dominated(state) {
            return Ok(());
        }

        let legal = legal_actions(state, self.cfg, self.ws);
        let mut children: Vec<(S, JointAction, SystemState<S>)> = Vec::new();
        for &au in &legal[0] {
            for &ad in &legal[1] {
                let joint = [au, ad];
                // Both groups pausing only realigns clocks; it is dominated
                // unless nothing else is possible.
                if au.is_pause() && ad.is_pause() && (legal[0].len() > 1 || legal[1].len() > 1) {
                    continue;
                }
                let r = step(state, &joint, self.cfg, self.ws)?;
                children.push((r.next_state.makespan(), joint, r.next_state));
            }
        }
        // Cheap-first ordering finds a strong incumbent early.
        children.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        for (_, joint, child) in children {
            prefix.push(joint);
            self.dfs(&child, prefix)?;
            prefix.pop();
        }
        Ok(())
    }
}
