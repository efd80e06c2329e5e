//! Quadrature, interpolation, root finding, limit extrapolation and the RK stepper.

pub mod extrap;
pub mod interp;
pub mod quad;
pub mod rk;
pub mod root;
