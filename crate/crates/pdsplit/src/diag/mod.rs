//! Gap evaluation, ergodic accumulation, theorem-bound evaluators, trace
//! records, and empirical rate fitting.

pub mod bounds;
pub mod ergodic;
pub mod gap;
pub mod rate;
pub mod replay;
pub mod trace;

pub use bounds::{BoundContext, PrsSide};
pub use ergodic::ErgodicAccumulator;
pub use gap::{pre_gap, pre_gap_at, s_chain_lower_bound, s_lower_bound, SDescriptor};
pub use rate::{fit_rate_slope, RateReport};
pub use replay::{
    check_ergodic_bounds, check_fpr_rate, check_fpr_summability, check_fundamental_inequality,
    check_gap_nonnegative, check_key_terms, check_nonergodic_bounds, check_prs_ergodic_distance,
    check_quasi_fejer, kappa_u, CheckReport, GapCheck,
};
pub use trace::{build_trace_records, read_csv, write_csv, TraceRecord, CSV_HEADER};
