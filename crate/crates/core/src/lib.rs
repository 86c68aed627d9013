//! fABBA: symbolic representation of time series by adaptive polygonal
//! chain compression followed by fast sorting-based aggregation.

pub mod aggregation;
pub mod baselines;
pub mod bench;
pub mod compression;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pipeline;

pub use error::{Error, Result};
