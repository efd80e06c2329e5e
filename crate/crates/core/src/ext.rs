//! Projectively extended reals, Gauss angles and points of RoC space.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default distance from the poles inside which `cot` is not evaluated.
pub const EPS_POLE: f64 = 1e-6;

/// A point of the one-point compactified real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    /// Maps non-finite floats to the point at infinity. NaN is rejected.
    pub fn from_f64(x: f64) -> Result<Self> {
        if x.is_nan() {
            Err(Error::Domain("NaN is not a point of the extended line".into()))
        } else if x.is_infinite() {
            Ok(ExtReal::Infinity)
        } else {
            Ok(ExtReal::Finite(x))
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinity)
    }

    /// `f64` view with infinity as `+inf`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// 1/x with 1/0 = ∞ and 1/∞ = 0.
    pub fn recip(self) -> Self {
        match self {
            ExtReal::Infinity => ExtReal::Finite(0.0),
            ExtReal::Finite(x) if x == 0.0 => ExtReal::Infinity,
            ExtReal::Finite(x) => ExtReal::Finite(1.0 / x),
        }
    }

    /// Fractional linear map (a x + b)/(c x + d).
    pub fn mobius(self, a: f64, b: f64, c: f64, d: f64) -> Self {
        match self {
            ExtReal::Infinity => {
                if c == 0.0 {
                    ExtReal::Infinity
                } else {
                    ExtReal::Finite(a / c)
                }
            }
            ExtReal::Finite(x) => {
                let den = c * x + d;
                if den == 0.0 {
                    ExtReal::Infinity
                } else {
                    ExtReal::Finite((a * x + b) / den)
                }
            }
        }
    }

    /// Distance on the finite part; two infinities are at distance zero.
    pub fn dist(self, other: Self) -> f64 {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs(),
            (ExtReal::Infinity, ExtReal::Infinity) => 0.0,
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::Infinity => write!(f, "inf"),
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        if x.is_infinite() {
            ExtReal::Infinity
        } else {
            ExtReal::Finite(x)
        }
    }
}

/// Angle between the symmetry axis and the outward normal.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct GaussAngle(f64);

impl GaussAngle {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&value) {
            return Err(Error::Invalid(format!("Gauss angle {value} outside [0, pi]")));
        }
        Ok(GaussAngle(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_pole(self) -> bool {
        self.0 == 0.0 || self.0 == PI
    }

    pub fn near_pole(self, eps: f64) -> bool {
        self.0 < eps || self.0 > PI - eps
    }

    pub fn cot(self, eps: f64) -> Result<f64> {
        if self.near_pole(eps) {
            return Err(Error::Singular(self.0));
        }
        Ok(self.0.cos() / self.0.sin())
    }
}

/// Which end of the symmetry axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pole {
    North,
    South,
}

impl Pole {
    pub fn angle(self) -> f64 {
        match self {
            Pole::North => 0.0,
            Pole::South => PI,
        }
    }

    /// Angle at distance `t` from this pole.
    pub fn offset(self, t: f64) -> f64 {
        match self {
            Pole::North => t,
            Pole::South => PI - t,
        }
    }
}

/// Radii of curvature attained at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoCPoint {
    pub r1: ExtReal,
    pub r2: ExtReal,
}

impl RoCPoint {
    pub fn new(r1: f64, r2: f64) -> Self {
        RoCPoint { r1: r1.into(), r2: r2.into() }
    }

    pub fn is_umbilic(&self) -> bool {
        matches!((self.r1, self.r2), (ExtReal::Finite(a), ExtReal::Finite(b)) if a == b)
    }

    pub fn is_umbilic_tol(&self, tol: f64) -> bool {
        match (self.r1, self.r2) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs() <= tol * (1.0 + a.abs()),
            _ => false,
        }
    }

    pub fn is_flat(&self) -> bool {
        self.r2.is_infinite()
    }

    pub fn finite(&self) -> Option<(f64, f64)> {
        Some((self.r1.finite()?, self.r2.finite()?))
    }

    /// Curvature pair (k₁, k₂).
    pub fn curvatures(&self) -> (ExtReal, ExtReal) {
        (self.r1.recip(), self.r2.recip())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_rules() {
        assert_eq!(ExtReal::Infinity.mobius(2.0, 1.0, 4.0, 3.0), ExtReal::Finite(0.5));
        assert_eq!(ExtReal::Infinity.mobius(2.0, 1.0, 0.0, 0.5), ExtReal::Infinity);
        assert_eq!(ExtReal::Finite(-0.75).mobius(2.0, 1.0, 4.0, 3.0), ExtReal::Infinity);
        assert_eq!(ExtReal::Finite(0.0).recip(), ExtReal::Infinity);
        assert_eq!(ExtReal::Infinity.recip(), ExtReal::Finite(0.0));
    }

    #[test]
    fn gauss_angle_bounds() {
        assert!(GaussAngle::new(-0.1).is_err());
        assert!(GaussAngle::new(PI).unwrap().is_pole());
        assert!(GaussAngle::new(0.0).unwrap().cot(EPS_POLE).is_err());
        let c = GaussAngle::new(PI / 4.0).unwrap().cot(EPS_POLE).unwrap();
        assert!((c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn umbilic_and_flat() {
        assert!(RoCPoint::new(2.0, 2.0).is_umbilic());
        assert!(!RoCPoint::new(f64::INFINITY, f64::INFINITY).is_umbilic());
        assert!(RoCPoint::new(1.0, f64::INFINITY).is_flat());
    }
}
