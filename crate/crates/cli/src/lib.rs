//! Command-line tool and HTTP service around `whatif-core`.

pub mod commands;
pub mod config;
pub mod provider;
pub mod service;
