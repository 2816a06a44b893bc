//! Dimension-independent adaptive Metropolis.
//!
//! Four Metropolis-Hastings kernels (random walk, pCN, adaptive Metropolis
//! and DIAM) with lag-blocked adaptation, moment merging across concurrent
//! chains, convergence diagnostics and the six synthetic test densities.

pub mod benchmark;
mod binio;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod moments;
pub mod proposals;
pub mod rng;
pub mod runner;
pub mod targets;

pub use error::{Error, Result};
pub use proposals::{KernelConfig, ProposalKind, RefMode};
pub use targets::{build_target, LogDensity, Target, TargetKind};
pub use runner::{run_concurrent, run_single_chain, RunConfig, RunResult, Sampler, StopReason, StopRule};
