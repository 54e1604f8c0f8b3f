//! Configuration-driven experiment runner for fraclab.

pub mod config;
pub mod experiments;
pub mod frozen;
pub mod output;

pub use config::{Config, ConfigError};
pub use experiments::{Outcome, RunError};
pub use frozen::Frozen;
