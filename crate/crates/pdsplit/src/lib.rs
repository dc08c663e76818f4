//! Primal-dual operator splitting over finite-dimensional product spaces.
//!
//! The crate implements a unifying fixed-point scheme together with four
//! concrete steppers (proximal point, forward-backward, Peaceman-Rachford,
//! forward-backward-forward), variable-metric bookkeeping, the product-space
//! splittings of a composite model problem, and diagnostics that machine-check
//! ergodic and nonergodic gap bounds along every run.
//!
//! Module map:
//! - [`space`]: product-space points, metric operators, metric sequences.
//! - [`ops`]: proximable/smooth function catalog, linear maps, skew operators,
//!   metric resolvents.
//! - [`engine`]: the four steppers, parameter validation, run driver.
//! - [`model`]: the composite model problem, level-1/level-2 splittings,
//!   metric classes, specialized forward-backward operators.
//! - [`diag`]: gap functions, bound evaluators, trace records, rate fitting.

pub mod diag;
pub mod engine;
pub mod error;
pub mod model;
pub mod ops;
pub mod space;

pub use error::{Result, SplitError};
