//! Command line and HTTP front end for the netforge engine.

pub mod cli;
pub mod http;
