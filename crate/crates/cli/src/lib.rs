//! Configuration, snapshot persistence, CSV sinks and the subcommands of the
//! `mswave` binary.

pub mod commands;
pub mod config;
pub mod presets;
pub mod sinks;
pub mod snapshot;
pub mod studies;
pub mod verify;
