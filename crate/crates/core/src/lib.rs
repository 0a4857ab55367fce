//! Mesh-free semi-Lagrangian transport on the unit sphere.
//!
//! A scalar field carried by a prescribed tangent velocity field is advanced
//! by tracing every node back along the flow and interpolating the previous
//! field at the departure points. Three interchangeable interpolation
//! backends are provided: a global inverse-multiquadric interpolant, local
//! polyharmonic-spline stencils augmented with spherical harmonics, and a
//! partition of unity over spherical-cap patches.

pub mod basis;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod interp;
pub mod linalg;
pub mod testcases;
pub mod transport;

pub use error::{Error, Result};
pub use geometry::{NodeSet, UnitVec3};
