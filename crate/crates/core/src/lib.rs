pub mod baselines;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod scenario;
pub mod sdp;

pub use error::{Error, Result};
