//! Two-phase image segmentation by iterative convolution-thresholding with
//! optional digital-topology preservation.
//!
//! Masks evolve on a periodic grid with spacing `h = 1 / max(rows, cols)`.
//! Each iteration thresholds a linearized energy score; with topology
//! preservation on, only simple pixels are allowed to flip, so the number of
//! foreground and background components never changes.

// Negated float comparisons in this crate are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod convolution;
pub mod error;
pub mod grid;
pub mod init;
pub mod io;
pub mod models;
pub mod solver;
pub mod synthetic;
pub mod topology;

pub use convolution::{perimeter_estimate, HeatMultiplier};
pub use error::{Error, Result};
pub use grid::{mask_flip_count, BinaryMask, ImageGrid, ScalarField, Shape};
pub use init::InitShape;
pub use models::{LifParams, Model};
pub use solver::{run, run_observed, EnergyTrace, IterationRecord, Outcome, SolverParams, Termination};
pub use topology::{is_simple, label_components, Connectivity, ConnectivityPair, PixelCoord};
