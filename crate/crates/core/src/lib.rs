//! Verification toolkit for a priori estimates and Liouville-type nonexistence
//! conditions for quasilinear subelliptic systems on Carnot groups.
//!
//! The crate is organised bottom-up: group structure and homogeneous norms,
//! horizontal calculus, quadrature over gauge balls, cutoffs, weak Harnack
//! scans, the estimate chain, exponent conditions, radial counterexamples and
//! finally configuration-driven runs.

pub mod calculus;
pub mod carnot;
pub mod config;
pub mod error;
pub mod estimates;
pub mod fields;
pub mod harnack;
pub mod liouville;
pub mod norm;
pub mod quadrature;
pub mod report;
pub mod runner;
pub mod sharpness;
pub mod test_functions;

pub use carnot::{custom_group, euclidean_group, heisenberg_group, CarnotGroup, FrameMatrix, GroupStructure};
pub use error::{Error, Result};
pub use norm::{gauge_norm, HomogeneousNorm, Region, RegionKind};

/// Version string echoed in every report.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
