//! Experiment harness: episode runner with metrics collection, planner x
//! layout x repetition grids, CSV and JSON-lines emission, and report
//! aggregation.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::env::{is_conflict, legal_actions, step, DoneReason, EnvConfig, StepResult};
use crate::error::ExperimentError;
use crate::planners::{GreedyPlanner, Planner, RandomPlanner, StaticListPlanner};
use crate::ppo::PolicyPlanner;
use crate::scalar::{real, Scalar};
use crate::types::{
    ArmId, EpisodeMetrics, FruitLayout, Group, JointAction, Phase, SystemState, TransitionKind,
};
use crate::workspace::{rp_duration_from, WorkspaceConfig};

// ---------------------------------------------------------------------------
// Episode runner
// ---------------------------------------------------------------------------

/// One JSONL trajectory record per joint step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct EpisodeRecord<S: Scalar> {
    pub k: usize,
    pub actions: JointAction,
    pub transition_kinds: [TransitionKind; 2],
    pub time_deltas: [S; 2],
    pub rewards: [S; 2],
    pub clocks: [S; 2],
    pub picked_count: usize,
}

/// Everything an episode produced.
#[derive(Debug, Clone)]
pub struct EpisodeOutcome<S: Scalar> {
    pub metrics: EpisodeMetrics<S>,
    pub done_reason: DoneReason,
    pub returns: [S; 2],
    pub steps: usize,
    pub trajectory: Vec<EpisodeRecord<S>>,
}

impl<S: Scalar> EpisodeOutcome<S> {
    pub fn completed(&self) -> bool {
        self.done_reason == DoneReason::AllPicked && self.metrics.remaining == 0
    }
}

/// Per-arm working time inside one step, capped at the group's own clock
/// advance so idle derivation stays consistent with the time model.
fn arm_busy_for_step<S: Scalar>(
    before: &SystemState<S>,
    actions: &JointAction,
    result: &StepResult<S>,
    ws: &WorkspaceConfig<S>,
) -> [S; 4] {
    let mut busy = [S::zero(); 4];
    for g in Group::both() {
        let gi = g.index();
        let delta = result.time_deltas[gi];
        let (first, second) = g.arms();
        let kind = result.transition_kinds[gi];
        let retract_credit = |busy: &mut [S; 4], arm: ArmId| {
            if before.arms[arm.index()].phase == Phase::Aeg {
                let rp = rp_duration_from(before.arms[arm.index()].position, arm, ws);
                busy[arm.index()] = busy[arm.index()] + rp.min(delta);
            }
        };
        if result.done || kind.is_pause() {
            retract_credit(&mut busy, first);
            retract_credit(&mut busy, second);
        } else {
            let slot = actions[gi].bits().aeg_slot().expect("working transition");
            let acting = if slot == 0 { first } else { second };
            let sibling = if slot == 0 { second } else { first };
            busy[acting.index()] = busy[acting.index()] + delta;
            retract_credit(&mut busy, sibling);
        }
    }
    busy
}

/// Runs one full episode of `planner` on `layout` and collects metrics.
pub fn run_episode<S: Scalar>(
    planner: &mut dyn Planner<S>,
    layout: Arc<FruitLayout<S>>,
    cfg: &EnvConfig<S>,
    ws: &WorkspaceConfig<S>,
    with_trajectory: bool,
) -> Result<EpisodeOutcome<S>, ExperimentError> {
    let mut state = SystemState::initial(layout.clone(), ws.drop_points);
    planner.reset(&layout, ws);

    let mut busy = [S::zero(); 4];
    let mut conflicts = 0usize;
    let mut returns = [S::zero(); 2];
    let mut latency_total = 0.0f64;
    let mut decisions = 0usize;
    let mut trajectory = Vec::new();
    let done_reason;

    loop {
        let legal = legal_actions(&state, cfg, ws);
        let t0 = Instant::now();
        let joint = planner.decide(&state, &legal, cfg, ws);
        latency_total += t0.elapsed().as_secs_f64();
        decisions += 1;

        let r = step(&state, &joint, cfg, ws)?;
        if !r.done && is_conflict(&state, &joint, ws) {
            conflicts += 1;
        }
        let step_busy = arm_busy_for_step(&state, &joint, &r, ws);
        for i in 0..4 {
            busy[i] = busy[i] + step_busy[i];
        }
        for gi in 0..2 {
            returns[gi] = returns[gi] + r.rewards[gi];
        }
        if with_trajectory {
            trajectory.push(EpisodeRecord {
                k: r.next_state.step_index,
                actions: joint,
                transition_kinds: r.transition_kinds,
                time_deltas: r.time_deltas,
                rewards: r.rewards,
                clocks: r.next_state.agent_clock,
                picked_count: r.next_state.picked_count(),
            });
        }
        let done = r.done;
        let reason = r.done_reason;
        state = r.next_state;
        if done {
            done_reason = reason;
            break;
        }
    }

    let makespan = state.makespan();
    let idle_per_arm = [0, 1, 2, 3].map(|i| (makespan - busy[i]).max(S::zero()));
    let metrics = EpisodeMetrics {
        makespan,
        idle_per_arm,
        conflicts,
        remaining: state.remaining_count(cfg.max_attempts),
        abandoned: state.abandoned_count(cfg.max_attempts),
        picked_total: state.picked_count(),
        planning_latency_mean: real(latency_total / decisions.max(1) as f64),
    };
    Ok(EpisodeOutcome {
        metrics,
        done_reason,
        returns,
        steps: state.step_index,
        trajectory,
    })
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

/// Which planner to run; parsed from `--planner`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlannerSpec {
    Random,
    Greedy,
    Static,
    /// Learned policy loaded from a checkpoint file.
    Policy(PathBuf),
}

impl PlannerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PlannerSpec::Random => "random",
            PlannerSpec::Greedy => "greedy",
            PlannerSpec::Static => "static",
            PlannerSpec::Policy(_) => "ppo",
        }
    }

    pub fn build<S: Scalar>(&self, seed: u64) -> Result<Box<dyn Planner<S>>, ExperimentError> {
        match self {
            PlannerSpec::Random => Ok(Box::new(RandomPlanner::new(seed))),
            PlannerSpec::Greedy => Ok(Box::new(GreedyPlanner)),
            PlannerSpec::Static => Ok(Box::new(StaticListPlanner::new())),
            PlannerSpec::Policy(path) => {
                if !path.exists() {
                    return Err(ExperimentError::MissingArtifact(path.display().to_string()));
                }
                Ok(Box::new(PolicyPlanner::<S>::load(path)?))
            }
        }
    }
}

impl FromStr for PlannerSpec {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(PlannerSpec::Random),
            "greedy" => Ok(PlannerSpec::Greedy),
            "static" => Ok(PlannerSpec::Static),
            other => match other.strip_prefix("ppo:") {
                Some(path) if !path.is_empty() => Ok(PlannerSpec::Policy(PathBuf::from(path))),
                _ => Err(ExperimentError::Config(format!(
                    "unknown planner {other:?} (expected random|greedy|static|ppo:<checkpoint>)"
                ))),
            },
        }
    }
}

/// A full evaluation grid.
#[derive(Debug, Clone)]
pub struct Grid<S: Scalar> {
    pub planners: Vec<PlannerSpec>,
    pub layouts: Vec<(String, Arc<FruitLayout<S>>)>,
    pub reps: usize,
    pub seed: u64,
}

/// One grid cell's outcome.
#[derive(Debug, Clone)]
pub struct ResultRow<S: Scalar> {
    pub planner: String,
    pub layout: String,
    pub rep: usize,
    pub seed: u64,
    pub metrics: EpisodeMetrics<S>,
    pub done_reason: DoneReason,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic per-episode seed from the grid seed and cell coordinates.
pub fn episode_seed(base: u64, planner: &str, layout: &str, rep: usize) -> u64 {
    let mut h = base;
    for b in planner.bytes().chain(layout.bytes()) {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ rep as u64)
}

/// Runs every (planner, layout, repetition) cell sequentially in sort-key
/// order; when `out` is given, writes `results.csv` and one trajectory
/// JSONL per episode into it. Partial results are flushed row by row.
pub fn run_grid<S: Scalar>(
    grid: &Grid<S>,
    cfg: &EnvConfig<S>,
    ws: &WorkspaceConfig<S>,
    out: Option<&Path>,
) -> Result<Vec<ResultRow<S>>, ExperimentError> {
    if grid.reps == 0 {
        return Err(ExperimentError::Config("reps must be at least 1".into()));
    }
    for (_, layout) in &grid.layouts {
        if layout.is_empty() {
            return Err(ExperimentError::Config("empty layout in grid".into()));
        }
        if layout.len() > cfg.n_max {
            return Err(ExperimentError::Config(format!(
                "layout has {} fruits but n_max is {}",
                layout.len(),
                cfg.n_max
            )));
        }
    }

    let mut writer = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mut w = csv::Writer::from_path(dir.join("results.csv"))?;
            w.write_record(CSV_HEADER)?;
            Some((w, dir.to_path_buf()))
        }
        None => None,
    };

    let mut rows = Vec::new();
    for planner_spec in &grid.planners {
        for (layout_id, layout) in &grid.layouts {
            for rep in 0..grid.reps {
                let seed = episode_seed(grid.seed, planner_spec.name(), layout_id, rep);
                let mut planner = planner_spec.build::<S>(seed)?;
                let outcome =
                    run_episode(planner.as_mut(), layout.clone(), cfg, ws, writer.is_some())?;
                let row = ResultRow {
                    planner: planner_spec.name().to_string(),
                    layout: layout_id.clone(),
                    rep,
                    seed,
                    metrics: outcome.metrics.clone(),
                    done_reason: outcome.done_reason,
                };
                if let Some((w, dir)) = &mut writer {
                    write_csv_row(w, &row)?;
                    w.flush()?;
                    let name = format!("{}_{}_rep{}.jsonl", row.planner, row.layout, rep);
                    write_trajectory(&dir.join(name), &outcome.trajectory)?;
                }
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

pub const CSV_HEADER: [&str; 14] = [
    "planner",
    "layout",
    "rep",
    "seed",
    "makespan_s",
    "idle_arm1_s",
    "idle_arm2_s",
    "idle_arm3_s",
    "idle_arm4_s",
    "conflicts",
    "remaining",
    "abandoned",
    "picked",
    "planning_latency_mean_ms",
];

fn write_csv_row<S: Scalar, W: std::io::Write>(
    w: &mut csv::Writer<W>,
    row: &ResultRow<S>,
) -> Result<(), ExperimentError> {
    let m = &row.metrics;
    w.write_record([
        row.planner.clone(),
        row.layout.clone(),
        row.rep.to_string(),
        row.seed.to_string(),
        m.makespan.to_config().to_string(),
        m.idle_per_arm[0].to_config().to_string(),
        m.idle_per_arm[1].to_config().to_string(),
        m.idle_per_arm[2].to_config().to_string(),
        m.idle_per_arm[3].to_config().to_string(),
        m.conflicts.to_string(),
        m.remaining.to_string(),
        m.abandoned.to_string(),
        m.picked_total.to_string(),
        (m.planning_latency_mean.to_config() * 1e3).to_string(),
    ])?;
    Ok(())
}

/// A parsed results row; latency is the only non-deterministic column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub planner: String,
    pub layout: String,
    pub rep: usize,
    pub seed: u64,
    pub makespan_s: f64,
    pub idle_arm1_s: f64,
    pub idle_arm2_s: f64,
    pub idle_arm3_s: f64,
    pub idle_arm4_s: f64,
    pub conflicts: usize,
    pub remaining: usize,
    pub abandoned: usize,
    pub picked: usize,
    pub planning_latency_mean_ms: f64,
}

/// Reads a results file, skipping malformed rows; returns the rows and the
/// number skipped.
pub fn read_results(path: &Path) -> Result<(Vec<CsvRow>, usize), ExperimentError> {
    if !path.exists() {
        return Err(ExperimentError::MissingArtifact(path.display().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for record in reader.deserialize::<CsvRow>() {
        match record {
            Ok(row) => rows.push(row),
            Err(_) => skipped += 1,
        }
    }
    Ok((rows, skipped))
}

fn write_trajectory<S: Scalar>(
    path: &Path,
    records: &[EpisodeRecord<S>],
) -> Result<(), ExperimentError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

/// Reads a JSONL trajectory back.
pub fn read_trajectory<S: Scalar>(path: &Path) -> Result<Vec<EpisodeRecord<S>>, ExperimentError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// Aggregates for one (planner, layout) block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub planner: String,
    pub layout: String,
    pub episodes: usize,
    pub makespan_mean: f64,
    pub makespan_max: f64,
    pub makespan_min: f64,
    pub remaining_per_rep: Vec<usize>,
    pub remaining_mean: f64,
    pub conflicts_mean: f64,
    pub latency_mean_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub groups: Vec<GroupSummary>,
    pub skipped_rows: usize,
}

/// Summarizes result rows per (planner, layout), sorted by that key.
pub fn report(rows: &[CsvRow], skipped_rows: usize) -> Report {
    let mut grouped: BTreeMap<(String, String), Vec<&CsvRow>> = BTreeMap::new();
    for row in rows {
        grouped
            .entry((row.planner.clone(), row.layout.clone()))
            .or_default()
            .push(row);
    }
    let groups = grouped
        .into_iter()
        .map(|((planner, layout), mut rows)| {
            rows.sort_by_key(|r| r.rep);
            let n = rows.len() as f64;
            let makespans: Vec<f64> = rows.iter().map(|r| r.makespan_s).collect();
            GroupSummary {
                planner,
                layout,
                episodes: rows.len(),
                makespan_mean: makespans.iter().sum::<f64>() / n,
                makespan_max: makespans.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                makespan_min: makespans.iter().cloned().fold(f64::INFINITY, f64::min),
                remaining_per_rep: rows.iter().map(|r| r.remaining).collect(),
                remaining_mean: rows.iter().map(|r| r.remaining as f64).sum::<f64>() / n,
                conflicts_mean: rows.iter().map(|r| r.conflicts as f64).sum::<f64>() / n,
                latency_mean_ms: rows.iter().map(|r| r.planning_latency_mean_ms).sum::<f64>()
                    / n,
            }
        })
        .collect();
    Report {
        groups,
        skipped_rows,
    }
}

impl Report {
    /// Aligned text table, one row per (planner, layout) block.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:<10} {:>4} {:>10} {:>10} {:>10} {:>10} {:>12}  {}\n",
            "planner", "layout", "eps", "mean_s", "max_s", "min_s", "confl", "latency_ms",
            "remaining/rep"
        ));
        for g in &self.groups {
            out.push_str(&format!(
                "{:<10} {:<10} {:>4} {:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>12.3}  {:?}\n",
                g.planner,
                g.layout,
                g.episodes,
                g.makespan_mean,
                g.makespan_max,
                g.makespan_min,
                g.conflicts_mean,
                g.latency_mean_ms,
                g.remaining_per_rep
            ));
        }
        if self.skipped_rows > 0 {
            out.push_str(&format!("warning: skipped {} malformed rows\n", self.skipped_rows));
        }
        out
    }
}
