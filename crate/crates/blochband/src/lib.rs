//! Floquet-Bloch band structures of square-lattice Schrodinger operators.
//!
//! The library assembles truncated plane-wave eigenproblems for
//! `-div (T^T T)^{-1} grad + V` on the unit square lattice, detects the
//! fourfold-symmetry-protected quadratic band degeneracies at the corner of
//! the Brillouin zone, extracts the local effective-Hamiltonian parameters,
//! follows the pair of Dirac points that split off under linear deformations
//! of the lattice, and quantifies symmetry-breaking gap openings together
//! with the Chern numbers of the resulting isolated bands.

pub mod basis;
pub mod bloch;
pub mod breaking;
pub mod chern;
pub mod config;
pub mod deformation;
pub mod degeneracy;
pub mod dirac;
pub mod eigh;
pub mod error;
pub mod lattice;
pub mod linalg2;
pub mod potential;
pub mod report;

pub use basis::PlaneWaveBasis;
pub use deformation::{Deformation, DeformationKind};
pub use error::{Error, Result};
pub use lattice::{FourierIndex, LatticeGeometry};
pub use potential::{EvenScalarField, OddPotential, SquareLatticePotential};
