//! Random-cluster model toolkit: regions and duality on planar lattices, the
//! measure and its exact enumeration, Monte Carlo samplers, crossing events,
//! strip-density estimators and a phase classifier.

pub mod classify;
pub mod error;
pub mod events;
pub mod exact;
pub mod fit;
pub mod lattice;
pub mod measure;
pub mod sampler;
pub mod strip;
pub mod unionfind;

pub use error::{Error, Result};
