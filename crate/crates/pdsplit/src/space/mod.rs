//! Product-space vectors, metric operators, and variable-metric sequences.

pub mod metric;
pub mod point;
pub mod sequence;

pub use metric::{
    inner_u, loewner_dominates, min_eig_difference, norm_u, tightest_eta, BlockMetric,
    MetricOperator, MetricRepr,
};
pub use point::{Layout, ProductPoint};
pub use sequence::{
    validate_sequence, FamilyTemplate, MetricSequence, ScaleRule, SequenceStep, ValidationReport,
};
