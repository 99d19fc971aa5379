//! Numerical laboratory for the thermomechanical Cucker-Smale model: a
//! particle solver for the kinetic equation, a pseudo-spectral solver for the
//! hydrodynamic system, an exact bounded-Lipschitz distance between atomic
//! measures, and weak-form residual checks tying the two together.

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod hydro;
pub mod initial;
pub mod kinetic;
pub mod kernels;
pub mod measures;
pub mod weak_form;

pub use error::{Aborted, Error, Result, SimResult};
pub use geometry::{torus_distance, TorusGeometry};
