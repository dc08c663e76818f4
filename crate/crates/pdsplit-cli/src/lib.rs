//! Instance generators, oracle resolution, run orchestration, and reporting
//! around the pdsplit solver library.

pub mod cli;
pub mod compare_cp;
pub mod generators;
pub mod report;
pub mod rng;
pub mod runspec;
