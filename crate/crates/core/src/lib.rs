//! Task-planning simulator for a four-arm, two-group fruit-harvesting robot.
//!
//! The robot carries four Cartesian arms in two coupled pairs (group-U: arms
//! 1 and 2, group-D: arms 3 and 4). Within a group the vertical joint is
//! shared, so only one arm at a time can run its approach-extension-grasp
//! (AEG) phase while the sibling retracts and places (RP). Task planning —
//! which fruit each arm picks next, and whether a group alternates, repeats,
//! or pauses — is modeled as a two-agent Markov game and solved three ways:
//! hand-written baseline planners, an exhaustive-search makespan oracle for
//! tiny instances, and a from-scratch PPO learner over a masked, factorized
//! action space.
//!
//! Crate layout:
//!
//! - [`types`]: fruit layouts, system state, group actions, transition kinds.
//! - [`workspace`]: arm boxes, zones, travel-time model, separation rule.
//! - [`env`]: the joint-action step function, rewards, masks, observations.
//! - [`layouts`]: seeded layout generators for the benchmark regimes.
//! - [`planners`]: random / greedy / static-list baselines plus the learned
//!   policy behind one interface.
//! - [`ppo`]: MLP policy/value net, GAE, clipped-surrogate updates, training
//!   curriculum, checkpoints.
//! - [`oracle`]: exhaustive minimal-makespan search on small instances.
//! - [`experiment`]: episode runner, metrics, CSV/JSONL emission, reports.
//!
//! All numeric machinery is generic over the scalar type via [`Scalar`];
//! the aliases below fix `f64`, which is what the file formats and the CLI
//! use.

pub mod env;
pub mod error;
pub mod experiment;
pub mod geom;
pub mod layouts;
pub mod oracle;
pub mod planners;
pub mod ppo;
pub mod scalar;
pub mod types;
pub mod workspace;

pub use error::{ActionError, EnvError, LayoutError, OracleError, PpoError, WorkspaceError};
pub use scalar::Scalar;

/// `f64` aliases for the types the CLI and file formats work with.
pub type Layout = types::FruitLayout<f64>;
pub type State = types::SystemState<f64>;
pub type Workspace = workspace::WorkspaceConfig<f64>;
pub type Env = env::EnvConfig<f64>;
pub type Step = env::StepResult<f64>;
pub type Metrics = experiment::EpisodeMetrics<f64>;
pub type Policy = ppo::PolicyNet<f64>;
