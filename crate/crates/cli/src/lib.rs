//! Edge-list files, experiment configuration, the sweep harness and the
//! acceptance checks behind the `multiperturb` command.

pub mod acceptance;
pub mod config;
pub mod harness;
pub mod io;
pub mod stats;
