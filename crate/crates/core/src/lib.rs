//! Modeling and optimization of dynamic scattering arrays: a few driven
//! dipoles surrounded by a cloud of varactor-loaded scatterers whose
//! near-field coupling shapes the radiated signal.

pub mod em;
pub mod error;
pub mod exec;
pub mod channel;
pub mod linalg;
pub mod multiport;
pub mod optimizer;
pub mod seed;
pub mod targets;

pub use error::{DsaError, Result};
pub use exec::Exec;
