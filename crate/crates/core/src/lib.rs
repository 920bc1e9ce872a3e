//! Fixed points of metrically nonspreading mappings in Hadamard spaces.
//!
//! The crate works in three model spaces (ℝⁿ, ℍⁿ and finite metric trees)
//! and provides
//!
//! * the quasilinearization bracket and CAT(0) inequality checkers,
//! * metric projections, proximity mappings and the glued two-branch map,
//! * a Monte-Carlo classifier for (firmly) metrically nonspreading maps,
//! * Picard, Mann and cyclic iterations with full traces,
//! * asymptotic-center and Δ-limit diagnostics,
//! * a config-driven harness used by the `nonspread` command line tool.

pub mod classify;
pub mod config;
pub mod convex;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod instances;
pub mod mappings;
pub mod sampling;
pub mod search;
pub mod solvers;
pub mod spaces;

pub use error::{Error, Result};
pub use geometry::{Pair, Point, SpaceTag};
pub use spaces::Space;
