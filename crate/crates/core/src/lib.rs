// Validation is written as `!(x > 0.0)` on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blockenc;
pub mod chebpoly;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod reductions;
pub mod sampler;

pub use error::{Error, Result};
