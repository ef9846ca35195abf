//! Files, command line, and multi-threaded drivers around `relucid-core`.

pub mod bench;
pub mod cli;
pub mod dataset;
mod error;
pub mod format;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};
pub use relucid_core as core;
