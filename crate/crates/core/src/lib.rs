//! Quadratically regularized optimal transport on finitely supported
//! measures: exact dual solvers, sparse couplings, support-section
//! diagnostics, plug-in limit laws and a Monte Carlo harness for the
//! `√n` central limit theorems.

pub mod coupling;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod limit_law;
pub mod measures;
pub mod par;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
