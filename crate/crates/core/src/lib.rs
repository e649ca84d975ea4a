//! Monte Carlo laboratory for Brownian motion on the Riemann sphere around
//! Schottky limit sets.
//!
//! * [`kleinian`]: Möbius algebra, Schottky groups, limit set samples, orbits.
//! * [`brownian`]: geodesic random walk on the sphere, planar walks, hitting.
//! * [`transport`]: conformal time change and Brownian certification tests.
//! * [`measure`]: empirical harmonic measures and accumulation experiments.
//! * [`torus`]: linear foliations of the 3-torus.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brownian;
pub mod error;
pub mod index;
pub mod kleinian;
pub mod measure;
pub mod rng;
pub mod sphere;
pub mod stats;
pub mod torus;
pub mod transport;

pub use error::{Error, Result};
pub use kleinian::{Circle, GroupWord, LimitSetSample, MoebiusClass, MoebiusMap, OrbitCloud, SchottkyGroup};
pub use rng::{GaussianSource, RngStream};
pub use sphere::{chordal_distance, RiemannSpherePoint};
