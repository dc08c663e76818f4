//! The composite model problem, its product-space splittings, the two
//! structured metric classes, and the specialized forward-backward operators.

pub mod fb_ops;
pub mod metric_class;
pub mod problem;
pub mod serialize;

pub use fb_ops::{fb_class1, fb_class2, fb_implicit_margin};
pub use metric_class::{build_metric, certify, MetricClass, MetricClassConfig};
pub use problem::{DualPair, Level, ModelProblem, SplitProblem};
