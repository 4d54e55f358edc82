//! Command-line front end: configuration, pipelines and report files.

pub mod compare;
pub mod config;
pub mod output;
pub mod pipelines;

/// The only environment setting: size of the worker pool.
pub const THREADS_ENV: &str = "WITTLAB_THREADS";
