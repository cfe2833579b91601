//! File formats, threaded execution and the command-line front-end for
//! principal component mediation analysis.

pub mod cli;
pub mod error;
pub mod io;
pub mod options;
pub mod parallel;
pub mod report;
pub mod study;

pub use error::CliError;
pub use pcma_core;
