//! Brownian paths on the unit sphere and in the plane.
//!
//! Sphere steps use the geodesic random walk: an isotropic Gaussian tangent
//! vector with covariance `dt * I2` is pushed through the exponential map, so
//! every point stays exactly on the sphere. Hitting is tested against the
//! `epsilon`-thickening of a finite target sample at every step.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::PointIndex;
use crate::kleinian::{GroupWord, LimitSetSample};
use crate::rng::{GaussianSource, RngStream};
use crate::sphere::{cross, dot, normalize, RiemannSpherePoint, Vec3};

pub const DEFAULT_DT: f64 = 1e-4;
pub const DEFAULT_EPSILON: f64 = 1e-2;
pub const DEFAULT_HORIZON: f64 = 500.0;
/// Largest admissible sphere step.
pub const MAX_SPHERE_DT: f64 = 1e-2;
/// Number of dt-halvings allowed near the unit circle in [`simulate_disk_exit`].
pub const DISK_EXIT_REFINEMENTS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Sphere,
    Plane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Hit,
    Horizon,
    LeftDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub time: f64,
    pub point: RiemannSpherePoint,
    pub address: GroupWord,
    /// index of the nearest target point
    pub target_index: usize,
}

/// A stored Brownian trajectory. Only every `thinning`-th step is kept, but
/// the first and last states always are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub geometry: Geometry,
    pub times: Vec<f64>,
    pub points: Vec<RiemannSpherePoint>,
    pub hit: Option<Hit>,
    pub stopped_reason: StopReason,
    pub steps: u64,
    pub seed: u64,
    pub path_index: u64,
    pub dt: f64,
    pub epsilon: f64,
}

impl PathRecord {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Path on a caller-supplied time grid (e.g. deterministic test curves).
    pub fn from_samples(geometry: Geometry, times: Vec<f64>, points: Vec<RiemannSpherePoint>) -> Result<Self> {
        if times.len() != points.len() {
            return Err(Error::Precondition("times and points must be parallel".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("times must be strictly increasing".into()));
        }
        if geometry == Geometry::Plane && points.iter().any(|p| p.is_infinite()) {
            return Err(Error::Precondition("planar paths cannot pass through infinity".into()));
        }
        let dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
        Ok(PathRecord {
            geometry,
            times,
            points,
            hit: None,
            stopped_reason: StopReason::Horizon,
            steps: 0,
            seed: 0,
            path_index: 0,
            dt,
            epsilon: 0.0,
        })
    }

    /// CSV in the unit-vector model: a `#` header naming the parameters, then `t,x,y,z`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# seed={},path_index={},dt={},epsilon={}",
            self.seed, self.path_index, self.dt, self.epsilon
        );
        out.push_str("t,x,y,z\n");
        for (t, p) in self.times.iter().zip(&self.points) {
            let [x, y, z] = p.to_unit_vector();
            let _ = writeln!(out, "{t},{x},{y},{z}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    pub epsilon: f64,
    pub dt: f64,
    pub horizon: f64,
    /// store every `thinning`-th step; `u64::MAX` keeps only the endpoints
    pub thinning: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams { epsilon: DEFAULT_EPSILON, dt: DEFAULT_DT, horizon: DEFAULT_HORIZON, thinning: 1 }
    }
}

impl WalkParams {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_SPHERE_DT) {
            return Err(Error::Precondition(format!("dt must lie in (0, {MAX_SPHERE_DT}], got {}", self.dt)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Precondition("epsilon must be positive".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Precondition("horizon must be positive".into()));
        }
        if self.thinning == 0 {
            return Err(Error::Precondition("thinning must be at least 1".into()));
        }
        Ok(())
    }
}

/// Hitting target: a limit set sample with a nearest-point index.
#[derive(Debug, Clone)]
pub struct Target {
    index: PointIndex,
    addresses: Vec<GroupWord>,
}

impl Target {
    pub fn new(sample: &LimitSetSample) -> Self {
        Target { index: PointIndex::new(&sample.points), addresses: sample.addresses.clone() }
    }

    /// Arbitrary point set; every address is the empty word.
    pub fn from_points(points: &[RiemannSpherePoint]) -> Self {
        Target { index: PointIndex::new(points), addresses: vec![GroupWord::empty(); points.len()] }
    }

    pub fn nearest(&self, v: &Vec3) -> Option<(usize, f64)> {
        self.index.nearest(v)
    }

    pub fn distance(&self, p: &RiemannSpherePoint) -> f64 {
        self.nearest(&p.to_unit_vector()).map_or(f64::INFINITY, |(_, d)| d)
    }

    pub fn address(&self, i: usize) -> &GroupWord {
        &self.addresses[i]
    }

    pub fn point(&self, i: usize) -> RiemannSpherePoint {
        RiemannSpherePoint::from_unit_vector(self.index.point(i))
    }

    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }
}

/// Resumable simulation state: the global step count, the current point and
/// the stream positioned at the next draw.
#[derive(Debug, Clone)]
pub struct WalkState {
    pub step: u64,
    pub point: Vec3,
    pub rng: RngStream,
}

impl WalkState {
    pub fn start(point: &RiemannSpherePoint, rng: RngStream) -> Self {
        WalkState { step: 0, point: point.to_unit_vector(), rng }
    }
}

pub(crate) fn tangent_basis(p: &Vec3) -> (Vec3, Vec3) {
    let a = if p[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let k = dot(&a, p);
    let e1 = normalize([a[0] - k * p[0], a[1] - k * p[1], a[2] - k * p[2]]);
    let e2 = cross(p, &e1);
    (e1, e2)
}

/// One geodesic random-walk step on the unit sphere. Returns the new point
/// and the chordal length of the step.
#[inline]
pub fn step_unit<G: GaussianSource + ?Sized>(p: &Vec3, dt: f64, gauss: &mut G) -> (Vec3, f64) {
    let (g1, g2) = gauss.gaussian_pair();
    let sd = dt.sqrt();
    let theta = sd * (g1 * g1 + g2 * g2).sqrt();
    if theta == 0.0 {
        return (*p, 0.0);
    }
    let (e1, e2) = tangent_basis(p);
    let (c1, c2) = (g1 / (g1 * g1 + g2 * g2).sqrt(), g2 / (g1 * g1 + g2 * g2).sqrt());
    let u = [c1 * e1[0] + c2 * e2[0], c1 * e1[1] + c2 * e2[1], c1 * e1[2] + c2 * e2[2]];
    let (s, c) = theta.sin_cos();
    let next = normalize([c * p[0] + s * u[0], c * p[1] + s * u[1], c * p[2] + s * u[2]]);
    (next, 2.0 * (0.5 * theta).sin().abs())
}

/// Geodesic random-walk step for a point of the Riemann sphere.
pub fn step_sphere<G: GaussianSource + ?Sized>(
    p: &RiemannSpherePoint,
    dt: f64,
    gauss: &mut G,
) -> Result<RiemannSpherePoint> {
    if !(dt > 0.0 && dt <= MAX_SPHERE_DT) {
        return Err(Error::Precondition(format!("dt must lie in (0, {MAX_SPHERE_DT}]")));
    }
    let (next, chord) = step_unit(&p.to_unit_vector(), dt, gauss);
    if chord == 0.0 {
        return Ok(*p);
    }
    Ok(RiemannSpherePoint::from_unit_vector(next))
}

/// Runs a sphere walk from `start` until it comes within `epsilon` of the
/// target or the horizon is reached.
pub fn simulate_until_hit(
    start: &RiemannSpherePoint,
    target: &Target,
    params: &WalkParams,
    rng: RngStream,
) -> Result<PathRecord> {
    simulate_from(WalkState::start(start, rng), target, params).map(|(path, _)| path)
}

/// Continues a walk from an arbitrary state. Splitting a run at any step and
/// resuming from the returned state reproduces the unsplit run.
pub fn simulate_from(state: WalkState, target: &Target, params: &WalkParams) -> Result<(PathRecord, WalkState)> {
    params.validate()?;
    let WalkState { mut step, point, mut rng } = state;
    let mut p = point;
    let eps = params.epsilon;
    let dt = params.dt;

    let mut path = PathRecord {
        geometry: Geometry::Sphere,
        times: vec![step as f64 * dt],
        points: vec![RiemannSpherePoint::from_unit_vector(p)],
        hit: None,
        stopped_reason: StopReason::Horizon,
        steps: 0,
        seed: rng.seed(),
        path_index: rng.path_index(),
        dt,
        epsilon: eps,
    };

    let mut slack = match target.nearest(&p) {
        Some((_, d)) if d <= eps => {
            return Err(Error::Precondition(format!("start is within epsilon of the target (distance {d:e})")));
        }
        Some((_, d)) => d - eps,
        None => f64::INFINITY,
    };

    let first = step;
    while (step as f64) * dt < params.horizon {
        let (next, chord) = step_unit(&p, dt, &mut rng);
        p = next;
        step += 1;
        let t = step as f64 * dt;
        // the distance to the target can only shrink by the chordal length
        // travelled, so the index is queried once the slack is used up
        slack -= chord;
        if slack <= 0.0 {
            let (i, d) = target.nearest(&p).expect("nonempty target");
            if d <= eps {
                let here = RiemannSpherePoint::from_unit_vector(p);
                path.times.push(t);
                path.points.push(here);
                path.hit = Some(Hit { time: t, point: here, address: target.address(i).clone(), target_index: i });
                path.stopped_reason = StopReason::Hit;
                break;
            }
            slack = d - eps;
        }
        if step % params.thinning == 0 {
            path.times.push(t);
            path.points.push(RiemannSpherePoint::from_unit_vector(p));
        }
    }
    if path.stopped_reason == StopReason::Horizon && path.times.last() != Some(&(step as f64 * dt)) {
        path.times.push(step as f64 * dt);
        path.points.push(RiemannSpherePoint::from_unit_vector(p));
    }
    path.steps = step - first;
    Ok((path, WalkState { step, point: p, rng }))
}

/// Independent walks `path_index = 0..n_paths` from the same start. Output
/// order and content do not depend on the rayon pool size.
pub fn simulate_batch(
    start: &RiemannSpherePoint,
    target: &Target,
    params: &WalkParams,
    seed: u64,
    n_paths: u64,
) -> Result<Vec<PathRecord>> {
    (0..n_paths).into_par_iter().map(|i| simulate_until_hit(start, target, params, RngStream::new(seed, i))).collect()
}

/// Planar Brownian motion (covariance `dt * I2` per step) for at most
/// `max_steps` steps, stopped before the first point where `inside` fails.
pub fn simulate_planar<F: Fn(Complex64) -> bool>(
    start: Complex64,
    dt: f64,
    max_steps: u64,
    inside: F,
    mut rng: RngStream,
) -> Result<PathRecord> {
    if !(dt > 0.0) {
        return Err(Error::Precondition("dt must be positive".into()));
    }
    if !inside(start) {
        return Err(Error::Precondition("start lies outside the domain".into()));
    }
    let sd = dt.sqrt();
    let mut z = start;
    let mut times = Vec::with_capacity(max_steps as usize + 1);
    let mut points = Vec::with_capacity(max_steps as usize + 1);
    times.push(0.0);
    points.push(RiemannSpherePoint::Finite(z));
    let mut stopped = StopReason::Horizon;
    let mut step = 0;
    while step < max_steps {
        let (g1, g2) = rng.gaussian_pair();
        let next = z + Complex64::new(sd * g1, sd * g2);
        if !inside(next) {
            stopped = StopReason::LeftDomain;
            break;
        }
        z = next;
        step += 1;
        times.push(step as f64 * dt);
        points.push(RiemannSpherePoint::Finite(z));
    }
    Ok(PathRecord {
        geometry: Geometry::Plane,
        times,
        points,
        hit: None,
        stopped_reason: stopped,
        steps: step,
        seed: rng.seed(),
        path_index: rng.path_index(),
        dt,
        epsilon: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskExit {
    pub point: Complex64,
    pub angle: f64,
    pub time: f64,
    pub steps: u64,
}

/// First exit of planar Brownian motion from the unit disk.
///
/// Within `10 sqrt(h)` of the circle the step `h` is halved (at most
/// [`DISK_EXIT_REFINEMENTS`] times) so the overshoot shrinks with the
/// distance to the boundary; the first outside point is projected radially.
pub fn simulate_disk_exit<G: GaussianSource + ?Sized>(start: Complex64, dt: f64, gauss: &mut G) -> Result<DiskExit> {
    if !(start.norm() < 1.0) {
        return Err(Error::Precondition("disk exit start must satisfy |z| < 1".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Precondition("dt must be positive".into()));
    }
    let min_dt = dt / f64::from(1u32 << DISK_EXIT_REFINEMENTS);
    let mut z = start;
    let mut time = 0.0;
    let mut steps = 0;
    loop {
        let gap = 1.0 - z.norm();
        let mut h = dt;
        while 10.0 * h.sqrt() > gap && h > min_dt {
            h *= 0.5;
        }
        let (g1, g2) = gauss.gaussian_pair();
        let sd = h.sqrt();
        z += Complex64::new(sd * g1, sd * g2);
        time += h;
        steps += 1;
        let r = z.norm();
        if r >= 1.0 {
            let point = z / r;
            return Ok(DiskExit { point, angle: point.arg(), time, steps });
        }
    }
}

/// `{n_paths, hit_fraction, mean_hit_time, horizon, epsilon, dt, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub n_paths: u64,
    pub hit_fraction: f64,
    pub mean_hit_time: Option<f64>,
    pub horizon: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub seed: u64,
}

impl BatchSummary {
    pub fn from_paths(paths: &[PathRecord], params: &WalkParams, seed: u64) -> Self {
        let hit_times: Vec<f64> = paths.iter().filter_map(|p| p.hit.as_ref().map(|h| h.time)).collect();
        let n = paths.len() as u64;
        BatchSummary {
            n_paths: n,
            hit_fraction: if n == 0 { 0.0 } else { hit_times.len() as f64 / n as f64 },
            mean_hit_time: if hit_times.is_empty() {
                None
            } else {
                Some(hit_times.iter().sum::<f64>() / hit_times.len() as f64)
            },
            horizon: params.horizon,
            epsilon: params.epsilon,
            dt: params.dt,
            seed,
        }
    }
}
