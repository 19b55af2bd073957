//! File formats, configuration, charts and subcommands for the `tickcost`
//! command-line tool. The analytics live in `tickcost-core`.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod logging;
pub mod svg;
