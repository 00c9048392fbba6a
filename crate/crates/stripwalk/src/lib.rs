//! Batch runner, file formats and command-line plumbing around
//! [`stripwalk_core`].

pub mod batch;
pub mod error;
pub mod records;
pub mod report;
pub mod scenario_file;
pub mod sweep;

pub use error::{AppError, AppResult};
