//! Distributed TDMA slot allocation for rigid UAV formations, with a
//! slot-synchronous simulator, a centralized baseline and sweep tooling.

pub mod baseline;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod protocol;
pub mod sim;
pub mod topology;

pub use error::{Error, Result};
