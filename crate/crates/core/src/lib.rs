//! Capacity-approaching LDPC degree distributions for the binary erasure
//! channel.
//!
//! The density-evolution condition `x - λ(1 - ρ(1 - εx)) ≥ 0` on `[0, 1]` is
//! turned into a finite set of linear matrix inequalities through a
//! sum-of-squares certificate, and the resulting semidefinite programs are
//! solved by the dense interior-point method in [`solver`]. The [`de`]
//! module checks every answer independently by iterating density evolution.

pub mod de;
pub mod ensemble;
pub mod error;
pub mod polynomial;
pub mod solver;
pub mod sos;
pub mod workflow;

pub use ensemble::{DegreeDistribution, EnsembleSpec};
pub use error::{Error, Result};
pub use polynomial::Polynomial;
