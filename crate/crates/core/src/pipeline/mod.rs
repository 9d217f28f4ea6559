//! End-to-end learners, baselines and the report format.

mod config;
mod report;
mod run;
pub mod verify;

pub use config::*;
pub use report::*;
pub use run::*;
