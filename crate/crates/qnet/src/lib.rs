//! File formats and the command-line runner around `qnet-core`.

pub mod cli;
pub mod records;
pub mod spec_file;
