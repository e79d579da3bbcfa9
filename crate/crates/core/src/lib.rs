//! Agent-based stock-flow consistent economy in which workers find jobs
//! through friends, firms choose management strategies, and the
//! unemployment-benefit scheme varies by replacement rate and duration.
//!
//! [`engine::EconomyState`] advances one period at a time and checks every
//! step against the transaction-flow matrix. [`engine::run_scenario`] runs
//! seeded replicates and [`analysis`] turns them into metric paths.

pub mod accounting;
pub mod aggregates;
pub mod analysis;
pub mod behavior;
pub mod config;
pub mod engine;
pub mod error;
pub mod firms;
pub mod io;
pub mod labour_market;

pub use config::{ScenarioConfig, SCENARIOS};
pub use engine::{run_replicate, run_scenario, EconomyState, ReplicateResult, ScenarioResult};
pub use error::{Error, Result};
