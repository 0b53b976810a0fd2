//! Multi-robot gas source localization: a filament plume simulator, a shared
//! source-probability map, Langevin active sensing with replica-exchange role
//! adaptation, two baseline planners, and an experiment harness.

pub mod baselines;
pub mod batch;
pub mod config;
pub mod error;
pub mod estimator;
pub mod geom;
pub mod langevin;
pub mod plume;
pub mod sampler;
pub mod sensors;
pub mod sim;
pub mod stats;
pub mod team;
pub mod trial;
pub mod world;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use geom::Vec2;
pub use langevin::{PlannerParams, RobotState};
pub use sim::{PlannerKind, Scenario, Simulation};
pub use team::{Outcome, SwapEvent, TeamConfig};
pub use trial::{path_efficiency, run_trial, summarize, BatchSummary, TrialRecord};
pub use world::{CellIndex, GridWorld};
