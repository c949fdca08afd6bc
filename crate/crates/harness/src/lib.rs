//! Scenario runner for swarm formation optimization studies: configuration
//! ingestion, the random-swarm baseline, Monte-Carlo sweeps, and structured
//! CSV/JSON result emission.

pub mod baseline;
pub mod config;
pub mod emit;
pub mod error;
pub mod experiment;
pub mod schemes;

pub use config::{ArrayForm, FloorRule, ScenarioConfig, ScenarioOverlay};
pub use error::{HarnessError, Result};
pub use schemes::Scheme;
