//! Tensorized NEAT.
//!
//! Genomes are stored as two fixed-shape, NaN-padded `f64` tensors (one row
//! per node, one row per connection), so every genome in a population has the
//! same shape and population-wide operations are plain loops over a leading
//! axis. Inference is split into a one-off [`inference::transform`] that
//! produces a topological order and a dense expanded-connection tensor, and a
//! cheap [`inference::forward`] that propagates values along that order.
//!
//! Module map:
//!
//! - [`genome`]: row layout, padding, population stacking, decode.
//! - [`ops`]: structural and attribute edits, mutation, crossover, distance.
//! - [`inference`]: transform / forward / batch forward and the function registry.
//! - [`evolution`]: configuration, speciation, stagnation, spawn apportionment,
//!   reproduction and the generational loop.
//! - [`problems`]: XOR, function regression and cart-pole.
//! - [`export`]: graph-description text, formulas and genome documents.
//! - [`oracle`]: an object-graph reference genome used by the test suites.
//! - [`validate`]: structural validity checks.
//! - [`rng`]: splittable counter-based keys.
//! - [`random`]: random valid genomes for tests and benchmarks.

pub mod error;
pub mod evolution;
pub mod export;
pub mod genome;
pub mod inference;
pub mod ops;
pub mod oracle;
pub mod problems;
pub mod random;
pub mod rng;
pub mod validate;

pub use error::{Error, Result};
pub use evolution::{evolve, EvolveOutcome, NeatConfig, RunStats};
pub use genome::{AttributeSchema, ConnGene, GenomeLimits, GenomeTensors, NodeGene, PopulationTensors};
pub use inference::{Activation, Aggregation, TransformedNetwork};
pub use rng::RngKey;
