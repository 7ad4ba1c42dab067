//! Numerical toolkit for the Caffarelli–Silvestre extension on the upper
//! hemisphere and half-ball in dimension N = 2.
//!
//! * [`geometry`]: parameters, grids, weighted quadrature, arc sets, fields.
//! * [`spectral`]: mixed Dirichlet/Neumann first eigenvalues, exponent maps,
//!   the symmetric k-sweep and the sphere β-pair.
//! * [`rearrange`]: polarization and foliated Schwarz symmetrization.
//! * [`competition`]: the β-competition system on the half-ball and its
//!   frequency, doubling, Pohozaev and scaling diagnostics.

pub mod competition;
pub mod error;
pub mod geometry;
mod linalg;
pub mod quad;
pub mod rearrange;
pub mod spectral;

pub use error::{Error, Result};
