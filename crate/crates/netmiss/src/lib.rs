//! File formats, configuration, output and parallel drivers for the
//! `netmiss` command-line tool.

pub mod cli;
pub mod config;
pub mod io;
pub mod output;
pub mod runner;
