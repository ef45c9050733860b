//! File formats, the experiment pipeline and the command-line front end for
//! [`hushcam_core`].
//!
//! Images come in as PGM or PNG, are measured by the core encoder and leave
//! only as compressed-sample archives, metrics and reconstructions.

pub mod archive;
pub mod config;
mod error;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod raster;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{DecodeError, Error, ItemFailure, Result};
