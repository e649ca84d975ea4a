//! Points of the Riemann sphere and the chordal metric.
//!
//! Points are kept as complex numbers with a separate point at infinity.
//! Simulation code works on the unit sphere in R^3; [`to_unit_vector`] and
//! [`from_unit_vector`] are the stereographic charts between the two models
//! (north pole = infinity, south pole = 0).
//!
//! [`to_unit_vector`]: RiemannSpherePoint::to_unit_vector
//! [`from_unit_vector`]: RiemannSpherePoint::from_unit_vector

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RiemannSpherePoint {
    Finite(Complex64),
    Infinity,
}

impl RiemannSpherePoint {
    pub fn new(x: f64, y: f64) -> Self {
        RiemannSpherePoint::Finite(Complex64::new(x, y))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, RiemannSpherePoint::Infinity)
    }

    pub fn finite(&self) -> Option<Complex64> {
        match *self {
            RiemannSpherePoint::Finite(z) => Some(z),
            RiemannSpherePoint::Infinity => None,
        }
    }

    /// Inverse stereographic projection onto the unit sphere.
    pub fn to_unit_vector(&self) -> Vec3 {
        match *self {
            RiemannSpherePoint::Infinity => [0.0, 0.0, 1.0],
            RiemannSpherePoint::Finite(z) => {
                let n = z.norm_sqr();
                if !n.is_finite() {
                    return [0.0, 0.0, 1.0];
                }
                let s = 1.0 + n;
                [2.0 * z.re / s, 2.0 * z.im / s, (n - 1.0) / s]
            }
        }
    }

    /// Stereographic projection from the north pole. `v` must be a unit vector.
    pub fn from_unit_vector(v: Vec3) -> Self {
        let [x, y, h] = v;
        let rho = x * x + y * y;
        if h > 0.0 {
            // (x+iy)/(1-h) rewritten to avoid cancellation near the pole
            if rho == 0.0 {
                return RiemannSpherePoint::Infinity;
            }
            let k = (1.0 + h) / rho;
            RiemannSpherePoint::Finite(Complex64::new(x * k, y * k))
        } else {
            let k = 1.0 / (1.0 - h);
            RiemannSpherePoint::Finite(Complex64::new(x * k, y * k))
        }
    }

    pub fn chordal_distance(&self, other: &RiemannSpherePoint) -> f64 {
        chordal_distance(self, other)
    }
}

impl From<Complex64> for RiemannSpherePoint {
    fn from(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            RiemannSpherePoint::Finite(z)
        } else {
            RiemannSpherePoint::Infinity
        }
    }
}

/// Chordal distance `2|z-w| / sqrt((1+|z|^2)(1+|w|^2))`, in `[0, 2]`.
pub fn chordal_distance(z: &RiemannSpherePoint, w: &RiemannSpherePoint) -> f64 {
    use RiemannSpherePoint::*;
    match (*z, *w) {
        (Infinity, Infinity) => 0.0,
        (Finite(a), Infinity) | (Infinity, Finite(a)) => 2.0 / (1.0 + a.norm_sqr()).sqrt(),
        (Finite(a), Finite(b)) => {
            let d = 2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt();
            d.min(2.0)
        }
    }
}

#[inline]
pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn dist3(a: &Vec3, b: &Vec3) -> f64 {
    norm(&sub(a, b))
}

#[inline]
pub(crate) fn normalize(a: Vec3) -> Vec3 {
    let n = norm(&a);
    [a[0] / n, a[1] / n, a[2] / n]
}

#[inline]
pub(crate) fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn chordal_examples() {
        let zero = RiemannSpherePoint::new(0.0, 0.0);
        let one = RiemannSpherePoint::new(1.0, 0.0);
        assert_eq!(chordal_distance(&zero, &zero), 0.0);
        assert_eq!(chordal_distance(&RiemannSpherePoint::Infinity, &RiemannSpherePoint::Infinity), 0.0);
        assert_abs_diff_eq!(chordal_distance(&zero, &RiemannSpherePoint::Infinity), 2.0);
        assert_abs_diff_eq!(chordal_distance(&zero, &one), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn poles() {
        assert_eq!(RiemannSpherePoint::Infinity.to_unit_vector(), [0.0, 0.0, 1.0]);
        assert_eq!(RiemannSpherePoint::new(0.0, 0.0).to_unit_vector(), [0.0, 0.0, -1.0]);
        assert!(RiemannSpherePoint::from_unit_vector([0.0, 0.0, 1.0]).is_infinite());
    }

    proptest! {
        #[test]
        fn chart_round_trip(x in -1e3f64..1e3, y in -1e3f64..1e3) {
            let p = RiemannSpherePoint::new(x, y);
            let q = RiemannSpherePoint::from_unit_vector(p.to_unit_vector());
            prop_assert!(chordal_distance(&p, &q) < 1e-12);
        }

        #[test]
        fn chordal_matches_ambient_distance(x in -50f64..50.0, y in -50f64..50.0, u in -50f64..50.0, v in -50f64..50.0) {
            let p = RiemannSpherePoint::new(x, y);
            let q = RiemannSpherePoint::new(u, v);
            let ambient = dist3(&p.to_unit_vector(), &q.to_unit_vector());
            prop_assert!((chordal_distance(&p, &q) - ambient).abs() < 1e-12);
            prop_assert_eq!(chordal_distance(&p, &p), 0.0);
        }
    }
}
