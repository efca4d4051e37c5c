//! Core of `netmiss`: undirected graphs with missing dyads, ERGM statistics,
//! MCMC samplers, missingness mechanisms and MCMC maximum likelihood.
//!
//! The crate is `no_std` with `alloc`. File formats, the command line and
//! parallel execution live in the `netmiss` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod estimate;
pub mod experiment;
pub mod fixtures;
pub mod graph;
pub mod linalg;
pub mod marlab;
pub mod math;
pub mod missmodels;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{DyadState, Graph, MissMask, NodeData, PartialGraph};
pub use stats::{ModelSpec, Term};
