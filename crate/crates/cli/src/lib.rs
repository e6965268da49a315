//! Command-line front end: TOML scenario sweeps written as long-format CSV.

pub mod config;
pub mod output;
pub mod sweep;
