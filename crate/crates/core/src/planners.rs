//! Baseline decision policies. Every planner shares one interface with the
//! learned policy: given the current state and the legal actions per group,
//! emit a joint action from those lists.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::EnvConfig;
use crate::scalar::Scalar;
use crate::types::{ArmId, FruitLayout, Group, GroupAction, JointAction, Phase, SystemState};
use crate::workspace::{travel_time, WorkspaceConfig};

/// A decision policy over joint actions.
pub trait Planner<S: Scalar> {
    fn name(&self) -> &str;

    /// Called once per episode before the first decision.
    fn reset(&mut self, _layout: &FruitLayout<S>, _ws: &WorkspaceConfig<S>) {}

    /// Picks one action per group. Implementations must return actions from
    /// the `legal` lists.
    fn decide(
        &mut self,
        state: &SystemState<S>,
        legal: &[Vec<GroupAction>; 2],
        cfg: &EnvConfig<S>,
        ws: &WorkspaceConfig<S>,
    ) -> JointAction;
}

// ---------------------------------------------------------------------------
// Random
// ---------------------------------------------------------------------------

/// Uniform choice among the legal actions of each group.
pub struct RandomPlanner {
    rng: ChaCha8Rng,
    seed: u64,
}

impl RandomPlanner {
    pub fn new(seed: u64) -> Self {
        RandomPlanner {
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }
}

impl<S: Scalar> Planner<S> for RandomPlanner {
    fn name(&self) -> &str {
        "random"
    }

    fn reset(&mut self, _layout: &FruitLayout<S>, _ws: &WorkspaceConfig<S>) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
    }

    fn decide(
        &mut self,
        _state: &SystemState<S>,
        legal: &[Vec<GroupAction>; 2],
        _cfg: &EnvConfig<S>,
        _ws: &WorkspaceConfig<S>,
    ) -> JointAction {
        [0, 1].map(|gi| {
            let options = &legal[gi];
            options[self.rng.gen_range(0..options.len())]
        })
    }
}

// ---------------------------------------------------------------------------
// Greedy
// ---------------------------------------------------------------------------

/// Each group claims the legal fruit with the shortest AEG for the arm that
/// would enter it; ties break toward the lower fruit index, then the first
/// slot. Pauses only when no claim is legal.
pub struct GreedyPlanner;

impl<S: Scalar> Planner<S> for GreedyPlanner {
    fn name(&self) -> &str {
        "greedy"
    }

    fn decide(
        &mut self,
        state: &SystemState<S>,
        legal: &[Vec<GroupAction>; 2],
        _cfg: &EnvConfig<S>,
        ws: &WorkspaceConfig<S>,
    ) -> JointAction {
        Group::both().map(|g| {
            let gi = g.index();
            let (first, second) = g.arms();
            let mut best: Option<(S, usize, usize)> = None; // (aeg, fruit, slot)
            for action in &legal[gi] {
                let (Some(fruit), Some(slot)) = (action.target(), action.bits().aeg_slot())
                else {
                    continue;
                };
                let arm = if slot == 0 { first } else { second };
                let aeg = aeg_from_current(state, arm, fruit, ws);
                let candidate = (aeg, fruit, slot);
                let better = match &best {
                    None => true,
                    Some((b_aeg, b_fruit, b_slot)) => {
                        aeg < *b_aeg
                            || (aeg == *b_aeg
                                && (fruit, slot) < (*b_fruit, *b_slot))
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
            match best {
                Some((_, fruit, slot)) => GroupAction::claim(fruit, slot),
                None => GroupAction::pause(),
            }
        })
    }
}

/// AEG duration the arm would pay for the fruit right now: from its current
/// position when parked, otherwise from its drop point after the implicit
/// retraction.
fn aeg_from_current<S: Scalar>(
    state: &SystemState<S>,
    arm: ArmId,
    fruit: usize,
    ws: &WorkspaceConfig<S>,
) -> S {
    let start = match state.arm(arm).phase {
        Phase::Rp => state.arm(arm).position,
        Phase::Aeg => ws.drop_point(arm),
    };
    travel_time(start, state.layout.position(fruit), ws) + ws.t_grasp
}

// ---------------------------------------------------------------------------
// Static list
// ---------------------------------------------------------------------------

/// Plans once, offline, and executes open-loop: fruits are partitioned by
/// zone (exclusive fruits to their arm, shared fruits to the least-loaded
/// candidate), each arm's list is ordered by nearest-neighbor chaining from
/// its drop point, and every fruit is attempted exactly once — grasp
/// failures never trigger replanning.
pub struct StaticListPlanner {
    queues: [VecDeque<usize>; 4],
}

impl StaticListPlanner {
    pub fn new() -> Self {
        StaticListPlanner {
            queues: Default::default(),
        }
    }

    /// The offline per-arm assignment for a layout, exposed for inspection.
    pub fn assignment<S: Scalar>(
        layout: &FruitLayout<S>,
        ws: &WorkspaceConfig<S>,
    ) -> [Vec<usize>; 4] {
        let mut assigned: [Vec<usize>; 4] = Default::default();
        for fruit in 0..layout.len() {
            let members = ws.membership(layout.position(fruit));
            let candidates: Vec<usize> = (0..4).filter(|&m| members[m]).collect();
            let Some(&pick) = candidates
                .iter()
                .min_by_key(|&&m| (assigned[m].len(), m))
            else {
                continue; // unreachable fruit: nobody gets it
            };
            assigned[pick].push(fruit);
        }
        // Nearest-neighbor chaining from each arm's start position.
        for arm in ArmId::all() {
            let m = arm.index();
            let mut remaining = std::mem::take(&mut assigned[m]);
            let mut pos = ws.drop_point(arm);
            let mut chained = Vec::with_capacity(remaining.len());
            while !remaining.is_empty() {
                let (idx, _) = remaining
                    .iter()
                    .enumerate()
                    .map(|(i, &f)| (i, travel_time(pos, layout.position(f), ws)))
                    .min_by(|a, b| {
                        a.1.partial_cmp(&b.1)
                            .unwrap()
                            .then(remaining[a.0].cmp(&remaining[b.0]))
                    })
                    .unwrap();
                let f = remaining.remove(idx);
                pos = layout.position(f);
                chained.push(f);
            }
            assigned[m] = chained;
        }
        assigned
    }
}

impl Default for StaticListPlanner {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Planner<S> for StaticListPlanner {
    fn name(&self) -> &str {
        "static"
    }

    fn reset(&mut self, layout: &FruitLayout<S>, ws: &WorkspaceConfig<S>) {
        let assignment = Self::assignment(layout, ws);
        self.queues = assignment.map(VecDeque::from);
    }

    fn decide(
        &mut self,
        state: &SystemState<S>,
        legal: &[Vec<GroupAction>; 2],
        _cfg: &EnvConfig<S>,
        _ws: &WorkspaceConfig<S>,
    ) -> JointAction {
        Group::both().map(|g| {
            let gi = g.index();
            let (first, second) = g.arms();
            let head_legal = |slot: usize, arm: ArmId| -> bool {
                self.queues[arm.index()]
                    .front()
                    .map(|&f| legal[gi].contains(&GroupAction::claim(f, slot)))
                    .unwrap_or(false)
            };
            let c0 = head_legal(0, first);
            let c1 = head_legal(1, second);
            // Prefer the alternating arm so the shared joint never idles;
            // a transiently blocked head just defers to the next step.
            let slot = match (state.group_phases(g), c0, c1) {
                ((Phase::Aeg, Phase::Rp), _, true) => Some(1),
                ((Phase::Aeg, Phase::Rp), true, false) => Some(0),
                ((Phase::Rp, Phase::Aeg), true, _) => Some(0),
                ((Phase::Rp, Phase::Aeg), false, true) => Some(1),
                (_, true, _) => Some(0),
                (_, false, true) => Some(1),
                _ => None,
            };
            match slot {
                Some(0) => {
                    let f = self.queues[first.index()].pop_front().unwrap();
                    GroupAction::claim(f, 0)
                }
                Some(_) => {
                    let f = self.queues[second.index()].pop_front().unwrap();
                    GroupAction::claim(f, 1)
                }
                None => GroupAction::pause(),
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{legal_actions, step};
    use crate::layouts::{generate, FailureProfile, LayoutSpec};
    use crate::types::FruitLayout;
    use std::sync::Arc;

    fn ws() -> WorkspaceConfig<f64> {
        WorkspaceConfig::default()
    }

    fn cfg() -> EnvConfig<f64> {
        EnvConfig::default()
    }

    fn state_of(layout: FruitLayout<f64>) -> SystemState<f64> {
        SystemState::initial(Arc::new(layout), ws().drop_points)
    }

    #[test]
    fn random_takes_the_only_action_and_repeats_under_seed() {
        let ws = ws();
        let cfg = cfg();
        let s = state_of(FruitLayout::new("e", vec![[0.4, 0.2, 1.9]], vec![1]).unwrap());
        let mut legal = legal_actions(&s, &cfg, &ws);
        legal[1] = vec![GroupAction::pause()];
        legal[0] = vec![GroupAction::claim(0, 0)];
        let mut p = RandomPlanner::new(7);
        let a = Planner::<f64>::decide(&mut p, &s, &legal, &cfg, &ws);
        assert_eq!(a, [GroupAction::claim(0, 0), GroupAction::pause()]);

        let legal = legal_actions(&s, &cfg, &ws);
        let mut p1 = RandomPlanner::new(42);
        let mut p2 = RandomPlanner::new(42);
        for _ in 0..32 {
            assert_eq!(
                Planner::<f64>::decide(&mut p1, &s, &legal, &cfg, &ws),
                Planner::<f64>::decide(&mut p2, &s, &legal, &cfg, &ws)
            );
        }
    }

    #[test]
    fn random_is_uniform_over_a_three_action_mask() {
        let ws = ws();
        let cfg = cfg();
        // One fruit in OU: claimable by both arms of group U, so its legal
        // list is {pause, claim(0,0), claim(0,1)}.
        let s = state_of(FruitLayout::new("ou", vec![[0.4, 0.85, 1.9]], vec![1]).unwrap());
        let legal = legal_actions(&s, &cfg, &ws);
        assert_eq!(legal[0].len(), 3);
        let mut counts = [0usize; 3];
        let mut p = RandomPlanner::new(123);
        let n = 10_000;
        for _ in 0..n {
            let a = Planner::<f64>::decide(&mut p, &s, &legal, &cfg, &ws);
            let idx = legal[0].iter().position(|&x| x == a[0]).unwrap();
            counts[idx] += 1;
        }
        // Within 3 sigma of uniform: sigma = sqrt(n * p * (1-p)).
        let expected = n as f64 / 3.0;
        let sigma = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for c in counts {
            assert!(
                (c as f64 - expected).abs() < 3.0 * sigma,
                "counts {counts:?} not uniform"
            );
        }
    }

    #[test]
    fn greedy_prefers_near_fruit_and_breaks_ties_low() {
        let ws = ws();
        let cfg = cfg();
        let drop = ws.drop_point(ArmId::new(1).unwrap());
        // Fruits 0 and 1 exactly equidistant (same dominating x offset),
        // fruit 2 farther out.
        let near = [drop[0] + 0.25, drop[1], drop[2]];
        let tie = [drop[0] + 0.25, drop[1] + 0.002, drop[2]];
        let far = [drop[0] + 0.6, drop[1], drop[2]];
        let s = state_of(FruitLayout::new("g", vec![near, tie, far], vec![1, 1, 1]).unwrap());
        let legal = legal_actions(&s, &cfg, &ws);
        let mut p = GreedyPlanner;
        let a = p.decide(&s, &legal, &cfg, &ws);
        assert_eq!(a[0].target(), Some(0));

        // No legal claims: pause.
        let mut done = s.clone();
        done.picked[0] = [true, false, false, false];
        done.attempts[0] = [1, 0, 0, 0];
        done.picked[1] = [true, false, false, false];
        done.attempts[1] = [1, 0, 0, 0];
        done.picked[2] = [true, false, false, false];
        done.attempts[2] = [1, 0, 0, 0];
        let legal = legal_actions(&done, &cfg, &ws);
        let a = p.decide(&done, &legal, &cfg, &ws);
        assert_eq!(a, [GroupAction::pause(), GroupAction::pause()]);
    }

    #[test]
    fn static_assignment_zone_rules() {
        let ws = ws();
        // All fruits deep in E1: arm 1 takes everything.
        let layout = FruitLayout::new(
            "e1",
            vec![[0.4, 0.1, 1.9], [0.4, 0.2, 1.8], [0.4, 0.3, 2.0]],
            vec![1, 1, 1],
        )
        .unwrap();
        let a = StaticListPlanner::assignment(&layout, &ws);
        assert_eq!(a[0].len(), 3);
        assert!(a[1].is_empty() && a[2].is_empty() && a[3].is_empty());

        // Four fruits in OU split 2/2 between arms 1 and 2.
        let layout = FruitLayout::new(
            "ou",
            vec![
                [0.4, 0.8, 1.9],
                [0.4, 0.85, 1.9],
                [0.4, 0.9, 1.9],
                [0.4, 0.95, 1.9],
            ],
            vec![1, 1, 1, 1],
        )
        .unwrap();
        let a = StaticListPlanner::assignment(&layout, &ws);
        assert_eq!(a[0].len(), 2);
        assert_eq!(a[1].len(), 2);
    }

    #[test]
    fn planners_emit_only_legal_actions() {
        let ws = ws();
        let cfg = cfg();
        let spec = LayoutSpec::uniform("mix", 12, FailureProfile::new(2, 1), 5);
        let layout = generate::<f64>(&spec, &ws).unwrap();

        let mut planners: Vec<Box<dyn Planner<f64>>> = vec![
            Box::new(RandomPlanner::new(3)),
            Box::new(GreedyPlanner),
            Box::new(StaticListPlanner::new()),
        ];
        for planner in planners.iter_mut() {
            let mut state = state_of(layout.clone());
            planner.reset(&layout, &ws);
            for _ in 0..60 {
                let legal = legal_actions(&state, &cfg, &ws);
                let joint = planner.decide(&state, &legal, &cfg, &ws);
                for gi in 0..2 {
                    assert!(
                        legal[gi].contains(&joint[gi]),
                        "{} emitted illegal {:?}",
                        planner.name(),
                        joint[gi]
                    );
                }
                let r = step(&state, &joint, &cfg, &ws).unwrap();
                if r.done {
                    break;
                }
                state = r.next_state;
            }
        }
    }
}
