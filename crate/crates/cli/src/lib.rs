//! Library surface of the workbench so integration tests can drive the
//! pipeline in-process.

pub mod baselines;
pub mod config;
pub mod pipeline;

pub use config::RunConfig;
pub use pipeline::{run, Mode};
