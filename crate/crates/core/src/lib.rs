//! Simulation toolkit for the thermodynamics of memory erasure.
//!
//! Three physics backends (overdamped Langevin double well, exact
//! Ornstein-Uhlenbeck RC circuit, two-state hopping) share one first-law
//! trajectory ledger. On top of them sit entropy accounting, executable
//! erasure protocols, a reproducible parallel ensemble harness and the
//! `erasure-sim` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod harness;
pub mod model;
pub mod protocols;
pub mod records;
pub mod rng;

pub use error::{Error, Result};

/// Version string embedded in every persisted record.
pub const VERSION: &str = concat!("erasure-sim ", env!("CARGO_PKG_VERSION"));
