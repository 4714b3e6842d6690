//! Field concentration between two nearly touching convex inclusions.
//!
//! The crate builds planar inclusion scenes whose facing boundaries share a
//! flat contact set, meshes them with gap-graded triangulations, solves the
//! component Dirichlet problems with P1 finite elements, and assembles the
//! capacitance system that fixes the conductor potentials. Sweeps over the
//! gap parameter and log-log fits expose the dependence of the field on the
//! size of the flat set; a quadrature oracle covers the capacitance integrals
//! in higher dimensions.

pub mod asymptotics;
pub mod auxiliary;
pub mod capacitance;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod harmonic;
pub mod mesh;
pub mod presets;

pub use error::{Error, Result};
