//! Core library for characterizing GNN aggregation programming abstractions.
//!
//! The crate models the four dominant ways GNN frameworks express neighborhood
//! aggregation: scatter-based (edge-parallel message materialization over COO),
//! reduce-based (destination-major segmented reduction over CSR), pull-based
//! (CSR SpMM), and push-based (CSC SpMM with per-destination partial sums).
//! Every kernel returns deterministic cost counters alongside its output, so
//! the architectural trade-offs between the abstractions can be observed as
//! exact, machine-independent quantities rather than just wall-clock time.
//!
//! On top of the kernels sit layer definitions for four representative models
//! (GCN, GIN, GAT, PDN), synthetic graph generators with controllable
//! structural properties, and a benchmark harness that produces reproducible
//! JSON/CSV reports.

pub mod bench;
pub mod error;
pub mod exec;
pub mod features;
pub mod kernels;
pub mod layers;
pub mod rng;
pub mod synth;
pub mod topology;

pub use error::{Error, Result};

/// Version string recorded in benchmark reports.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
