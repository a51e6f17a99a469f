//! Spherical point sets built from planar lattices, and the tools to judge them.
//!
//! The pipeline: a full-rank 2x2 matrix `Q` spans a lattice, [`lattice`] tiles
//! the unit square with scaled lattice cells and picks one point per cell,
//! [`lambert`] pushes those points onto the unit sphere through the
//! equal-area cylinder map, and [`discrepancy`] measures how uniformly the
//! result covers the sphere (spherical cap discrepancy and separation
//! distance). [`bounds`] evaluates the closed-form discrepancy bounds that
//! the construction is guaranteed to satisfy, and [`intersect`] counts
//! lattice cells met by a planar curve, which is the combinatorial heart of
//! those bounds.
//!
//! Everything is deterministic: randomness is always drawn from a named seed
//! and parallel reductions are ordered.

pub mod bounds;
pub mod cli;
pub mod curves;
pub mod discrepancy;
pub mod error;
pub mod intersect;
pub mod lambert;
pub mod lattice;
pub mod planar;
pub(crate) mod quad;

pub use error::{Error, Result};
