//! Clustered graph-based associative memories whose neurons compute noisily.
//!
//! This crate is `no_std` (it needs `alloc`). It holds the model types, the
//! synthetic network generator, the recall algorithms and the analysis
//! routines. File formats, configuration and the experiment runner live in the
//! `noisy-recall` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod degree;
mod error;
pub mod generator;
pub mod learn;
pub mod linalg;
pub mod model;
pub mod recall;
pub mod rng;

pub use degree::DegreeDistribution;
pub use error::{AnalysisError, GeneratorError, LearnError, ModelError};
pub use generator::{ContractedGraph, GeneratorSpec, PatternBasis};
pub use model::{Cluster, NetworkModel, NoiseSpec, PatternNoise, RecallOutcome, Thresholds};
pub use recall::PeelingLimits;
