//! Command-line front end and local HTTP service for `quasicross`.

pub mod commands;
pub mod service;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
