//! Configuration, caching and output for the `jjline` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod commands;
pub mod config;
pub mod emit;
pub mod error;
pub mod record;

pub use commands::{run, Command, Context, Product};
pub use config::{parse_config, RunConfig};
pub use error::CliError;
pub use record::ResultRecord;
