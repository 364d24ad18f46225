//! Simulation and optimization toolkit for Stuart-Landau oscillator networks
//! embedded into sparse triad graphs.
//!
//! The crate covers the full pipeline:
//!
//! - [`graphs`]: complete, ring, and triad-embedded coupling graphs, plus the
//!   unembedding (chain-average) map.
//! - [`dynamics`]: time integration of the Stuart-Landau network, its
//!   feedback-pumped variant, and the Kuramoto phase model.
//! - [`metrics`]: coherence order parameters, the three XY energies, the
//!   gauge-invariant phase RMSE, winding numbers, and error ratios.
//! - [`optimizer`]: basin hopping with gradient-based local minimization and
//!   an exhaustive-grid oracle for tiny instances.
//! - [`harness`]: seeded Monte-Carlo sweeps over network size, coupling, and
//!   disorder axes, with CSV output and threshold/fit analysis.
//! - [`io`]: text graph files and the triad sidecar format.

pub mod dynamics;
pub mod error;
pub mod graphs;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod optimizer;
pub mod seed;

pub use error::{Error, Result};
