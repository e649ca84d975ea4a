use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::RiemannSpherePoint;

use super::Circle;

const IDENTITY_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;

/// Fractional-linear map `z -> (az + b) / (cz + d)`, stored with `ad - bc = 1`.
///
/// Since `M` and `-M` act identically, normalization also fixes a sign: the
/// entry of largest modulus gets a nonnegative real part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoebiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoebiusClass {
    Identity,
    Elliptic,
    Parabolic,
    Loxodromic,
}

impl fmt::Display for MoebiusClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MoebiusClass::Identity => "identity",
            MoebiusClass::Elliptic => "elliptic",
            MoebiusClass::Parabolic => "parabolic",
            MoebiusClass::Loxodromic => "loxodromic",
        };
        f.write_str(s)
    }
}

impl MoebiusMap {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        MoebiusMap { a: one, b: zero, c: zero, d: one }
    }

    /// Builds and normalizes a map from arbitrary (nonsingular) entries.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        MoebiusMap { a, b, c, d }.normalize()
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn normalize(self) -> Result<Self> {
        let det = self.determinant();
        let scale = self.a.norm().max(self.b.norm()).max(self.c.norm()).max(self.d.norm());
        if !(det.norm() > 1e-300 * scale * scale) || !det.is_finite() {
            return Err(Error::DegenerateMatrix(det.norm()));
        }
        let k = det.sqrt().inv();
        let mut m = MoebiusMap { a: self.a * k, b: self.b * k, c: self.c * k, d: self.d * k };
        let entries = [m.a, m.b, m.c, m.d];
        let mut lead = entries[0];
        for e in &entries[1..] {
            if e.norm() > lead.norm() {
                lead = *e;
            }
        }
        if lead.re < 0.0 || (lead.re == 0.0 && lead.im < 0.0) {
            m = MoebiusMap { a: -m.a, b: -m.b, c: -m.c, d: -m.d };
        }
        Ok(m)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MoebiusMap) -> MoebiusMap {
        let raw = MoebiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        };
        // products of unimodular matrices stay unimodular; renormalize to
        // remove drift and fix the sign
        raw.normalize().unwrap_or(raw)
    }

    pub fn inverse(&self) -> MoebiusMap {
        let raw = MoebiusMap { a: self.d, b: -self.b, c: -self.c, d: self.a };
        raw.normalize().unwrap_or(raw)
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    pub fn apply(&self, z: &RiemannSpherePoint) -> RiemannSpherePoint {
        match *z {
            RiemannSpherePoint::Infinity => {
                if self.c == Complex64::new(0.0, 0.0) {
                    RiemannSpherePoint::Infinity
                } else {
                    RiemannSpherePoint::from(self.a / self.c)
                }
            }
            RiemannSpherePoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den == Complex64::new(0.0, 0.0) {
                    RiemannSpherePoint::Infinity
                } else {
                    RiemannSpherePoint::from((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// Applies the map to a finite point; `None` when the image is infinity.
    pub fn apply_finite(&self, z: Complex64) -> Option<Complex64> {
        let den = self.c * z + self.d;
        if den == Complex64::new(0.0, 0.0) {
            None
        } else {
            Some((self.a * z + self.b) / den)
        }
    }

    /// Dilation of the map for the spherical metric,
    /// `|m'(z)| (1 + |z|^2) / (1 + |m(z)|^2)`.
    ///
    /// With `ad - bc = 1` this equals `(1 + |z|^2) / (|az + b|^2 + |cz + d|^2)`,
    /// which stays finite at the pole and tends to `1 / (|a|^2 + |c|^2)` at infinity.
    pub fn spherical_conformal_factor(&self, z: &RiemannSpherePoint) -> f64 {
        match *z {
            RiemannSpherePoint::Infinity => 1.0 / (self.a.norm_sqr() + self.c.norm_sqr()),
            RiemannSpherePoint::Finite(z) => {
                let num = self.a * z + self.b;
                let den = self.c * z + self.d;
                let n = z.norm_sqr();
                if n.is_finite() && n < 1e150 {
                    (1.0 + n) / (num.norm_sqr() + den.norm_sqr())
                } else {
                    // chart at infinity
                    1.0 / (self.a.norm_sqr() + self.c.norm_sqr())
                }
            }
        }
    }

    /// Euclidean derivative modulus `|m'(z)| = 1 / |cz + d|^2`.
    pub fn planar_derivative(&self, z: Complex64) -> f64 {
        1.0 / (self.c * z + self.d).norm_sqr()
    }

    pub fn is_identity(&self) -> bool {
        let one = Complex64::new(1.0, 0.0);
        let near = |x: Complex64, y: Complex64| (x - y).norm() <= IDENTITY_TOL;
        let zero = Complex64::new(0.0, 0.0);
        near(self.b, zero)
            && near(self.c, zero)
            && ((near(self.a, one) && near(self.d, one)) || (near(self.a, -one) && near(self.d, -one)))
    }

    pub fn classify(&self) -> MoebiusClass {
        if self.is_identity() {
            return MoebiusClass::Identity;
        }
        let t2 = self.trace() * self.trace();
        if (t2 - Complex64::new(4.0, 0.0)).norm() <= TRACE_TOL {
            MoebiusClass::Parabolic
        } else if t2.im.abs() <= TRACE_TOL && t2.re >= 0.0 && t2.re < 4.0 {
            MoebiusClass::Elliptic
        } else {
            MoebiusClass::Loxodromic
        }
    }

    /// Fixed points on the sphere (one or two; one for parabolics and the identity
    /// has no isolated fixed points, reported as empty).
    pub fn fixed_points(&self) -> Vec<RiemannSpherePoint> {
        if self.is_identity() {
            return Vec::new();
        }
        let zero = Complex64::new(0.0, 0.0);
        if self.c == zero {
            // affine: z = b / (d - a) and infinity
            let mut out = vec![RiemannSpherePoint::Infinity];
            if self.d != self.a {
                out.push(RiemannSpherePoint::from(self.b / (self.d - self.a)));
            }
            return out;
        }
        let disc = (self.trace() * self.trace() - Complex64::new(4.0, 0.0)).sqrt();
        let amd = self.a - self.d;
        let z1 = (amd + disc) / (2.0 * self.c);
        let z2 = (amd - disc) / (2.0 * self.c);
        if (z1 - z2).norm() <= 1e-14 * (1.0 + z1.norm()) {
            vec![RiemannSpherePoint::from(z1)]
        } else {
            vec![RiemannSpherePoint::from(z1), RiemannSpherePoint::from(z2)]
        }
    }

    /// Image of a circle whose interior does not contain the pole `-d/c`.
    ///
    /// Returns `None` if the pole lies on or inside the circle (image is not a
    /// bounded disk).
    pub fn image_circle(&self, circle: &Circle) -> Option<Circle> {
        let zero = Complex64::new(0.0, 0.0);
        if self.c == zero {
            let center = self.apply_finite(circle.center)?;
            let radius = circle.radius * (self.a / self.d).norm();
            return Circle::new(center, radius).ok();
        }
        let pole = -self.d / self.c;
        let offset = pole - circle.center;
        if offset.norm() <= circle.radius {
            return None;
        }
        // the reflection of the pole in the circle is sent to the image center
        let mirror = circle.center + circle.radius * circle.radius / offset.conj();
        let center = self.apply_finite(mirror)?;
        let on_circle = circle.center + circle.radius * offset / offset.norm();
        let radius = (self.apply_finite(on_circle)? - center).norm();
        Circle::new(center, radius).ok()
    }
}

impl Mul for MoebiusMap {
    type Output = MoebiusMap;

    fn mul(self, rhs: MoebiusMap) -> MoebiusMap {
        self.compose(&rhs)
    }
}
