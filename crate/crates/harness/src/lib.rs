//! Configuration, run directories, sweeps and the `nlslab` command line.

pub mod cli;
pub mod config;
mod error;
pub mod ini;
pub mod run;
pub mod sweep;

pub use error::{HarnessError, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/harness.md")]
mod book_harness {}
