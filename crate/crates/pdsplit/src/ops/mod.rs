//! Function catalog, linear maps, skew couplings, and metric resolvents.

pub mod linmap;
pub mod prox;
pub mod resolvent;
pub mod skew;

pub use linmap::{operator_norm, BlockLinearMap};
pub use prox::{ProxFn, SeparableFunction, SmoothAggregate};
pub use resolvent::{skew_resolvent, ResolventOp};
pub use skew::{zero_skew, SkewForm, SkewOperator};
