//! Consistent k-median clustering under point insertions.
//!
//! The crate maintains a constant-factor approximate set of `k` centers over
//! a stream of inserted points while keeping the total number of center
//! changes small. The pipeline compresses the raw stream with parallel
//! Meyerson facility-location copies, absorbs the compressed stream in epochs
//! (remove centers, open inserted points, swap with an LP, then robustify),
//! and restarts whenever a tracked cost estimate grows by a constant factor.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod engine;
pub mod error;
pub mod io;
pub mod lp;
pub mod lp_ops;
pub mod metric;
pub mod offline;
pub mod rng;
pub mod robust;
pub mod rounding;
pub mod sketch;

pub use error::{EngineError, LoadError, MetricError, RobustError, SketchError, SolveError};
pub use metric::{CenterSolution, MetricInstance, PointId, Weight, Weighted};
