pub mod ce;
pub mod cli;
pub mod covariance;
pub mod error;
pub mod exact;
pub mod graded;
pub mod jet;
pub mod mesh;
pub mod report;
pub mod yang_mills;

pub use error::{Error, Result};
