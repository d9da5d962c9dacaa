//! Positive ground states of linearly coupled fractional Schrödinger
//! systems on a periodic box, computed by minimizing the energy over the
//! Nehari manifold.

pub mod error;
pub mod grid;
pub mod cli;
pub mod energy;
pub mod experiments;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
