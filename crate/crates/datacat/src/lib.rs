//! Catalog server and command-line tool on top of `datacat-core`.

pub mod catalog;
pub mod cli;
pub mod server;
