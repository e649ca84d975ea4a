//! Möbius transformations and classical Schottky groups.

mod mobius;
mod schottky;
mod word;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{chordal_distance, RiemannSpherePoint};

pub use mobius::{MoebiusClass, MoebiusMap};
pub use schottky::{GroupDocument, LimitSetSample, OrbitCloud, SchottkyGroup, DEFAULT_REDUCTION_DEPTH};
pub use word::{enumerate_reduced_words, free_group_word_count, letters, words_of_length, GroupWord, DEFAULT_WORD_CAP};

/// Euclidean circle, read and written as `{"cx": .., "cy": .., "r": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircleRepr", into = "CircleRepr")]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircleRepr {
    cx: f64,
    cy: f64,
    r: f64,
}

impl TryFrom<CircleRepr> for Circle {
    type Error = Error;

    fn try_from(c: CircleRepr) -> Result<Self> {
        Circle::new(Complex64::new(c.cx, c.cy), c.r)
    }
}

impl From<Circle> for CircleRepr {
    fn from(c: Circle) -> Self {
        CircleRepr { cx: c.center.re, cy: c.center.im, r: c.radius }
    }
}

impl Circle {
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || !center.is_finite() {
            return Err(Error::InvalidCircle(format!("center {center}, radius {radius}")));
        }
        Ok(Circle { center, radius })
    }

    /// Open disk membership.
    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius
    }

    /// Largest chordal distance between two points of the closed disk.
    pub fn chordal_diameter(&self) -> f64 {
        let n = self.center.norm();
        let dir = if n > 0.0 { self.center / n } else { Complex64::new(1.0, 0.0) };
        // both points lie on the symmetry meridian, hence are antipodal on the cap rim
        let near = RiemannSpherePoint::Finite(self.center - self.radius * dir);
        let far = RiemannSpherePoint::Finite(self.center + self.radius * dir);
        chordal_distance(&near, &far)
    }
}
