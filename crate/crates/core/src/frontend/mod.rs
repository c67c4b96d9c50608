//! User-facing surfaces: command line, REPL and the JSON protocol.

pub mod cli;
pub mod protocol;
pub mod repl;
pub mod server;
