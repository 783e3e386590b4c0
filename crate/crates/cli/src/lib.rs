//! Library surface of the batch front-end: configuration, sweep execution,
//! and result emission. The `lyapunov-lab` binary is a thin wrapper over
//! these modules.

pub mod config;
pub mod emit;
pub mod sweep;
