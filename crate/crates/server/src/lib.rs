//! Command line tools and the live performance server.

pub mod cli;
pub mod session;
pub mod wire;
pub mod ws;
