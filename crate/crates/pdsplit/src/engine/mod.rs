//! The unifying scheme and its four concrete steppers.

pub mod config;
pub mod run;
pub mod steppers;

pub use config::{fbs_alpha, Algorithm, AlgorithmConfig, StepRule, ValidatedConfig};
pub use run::{run, Trace};
pub use steppers::{fbf_step, fbs_step, ppa_step, prs_step, SchemeState};
