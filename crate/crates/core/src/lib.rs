//! Connected set cover partitioning for randomly deployed sensor networks.
//!
//! The monitored region is a grid of square blocks small enough that any
//! sensor inside a block covers all of it and all sensors sharing a block can
//! talk to each other. A *connected 1-cover* is then a node set holding at
//! least one node per block whose induced communication graph is connected.
//!
//! The crate provides:
//!
//! - [`geometry`]: block grid, seeded uniform deployment and the unit-disk
//!   communication graph.
//! - [`protocol`]: the round-synchronous leader-rooted partitioning protocol
//!   (`Selectlist` convergecast, `Selected`, `Confirm`, `Include`, `Success`).
//! - [`fault`]: localized single-fault recovery of a partition using free
//!   nodes.
//! - [`engine`]: seeded trials, round-robin activation with energy drain,
//!   fault injection.
//! - [`metrics`]: rounds, partition diameter, message overhead.
//! - [`oracle`]: the cover predicate and an exhaustive maximum-partition
//!   search for small instances.
//! - [`cli`]: the `sensor-cover` command line.
//!
//! Everything is deterministic for a fixed seed: ordered collections are used
//! throughout and all randomness flows from [`rng::derive_seed`].

pub mod cli;
pub mod engine;
pub mod error;
pub mod fault;
pub mod geometry;
pub mod metrics;
pub mod oracle;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};

/// Index of a deployed sensor node. Nodes are numbered `0..n` in deployment order.
pub type NodeId = usize;

/// Row-major index of a grid block.
pub type BlockId = usize;
