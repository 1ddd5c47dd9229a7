//! File formats, parameter sweeps and the command-line front end for
//! `atomlaser-core`.
//!
//! All frequencies are angular, in s⁻¹.

pub mod cli;
pub mod config;
pub mod output;
pub mod sweep;

pub use atomlaser_core as core;
