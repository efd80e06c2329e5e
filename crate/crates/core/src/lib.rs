//! Rotationally symmetric Weingarten surfaces in the space of radii of curvature.

pub mod error;
pub mod ext;
pub mod integrator;
pub mod mesh;
pub mod mobius;
pub mod numeric;
pub mod relations;
pub mod roc_core;
pub mod semiquadratic;
pub mod variational;

pub use error::{Error, Result};
pub use ext::{ExtReal, GaussAngle, Pole, RoCPoint, EPS_POLE};
