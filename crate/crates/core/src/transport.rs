//! Conformal time change and statistical certification of Brownian paths.
//!
//! If `Phi` is conformal with dilation `lambda`, the image `Phi(B_t)` run on
//! the clock `sigma(t) = int_0^t lambda^2(B_u) du` is again Brownian.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brownian::{simulate_until_hit, tangent_basis, Geometry, PathRecord, Target, WalkParams};
use crate::error::{Error, Result};
use crate::kleinian::{SchottkyGroup, DEFAULT_WORD_CAP};
use crate::rng::RngStream;
use crate::sphere::{sub, RiemannSpherePoint};
use crate::stats::{linear_fit, quantile_sorted};

/// Floor on the distance inside the reciprocal-distance dilation.
pub const RECIP_DIST_FLOOR: f64 = 1e-4;
/// Relative tolerance on the quadratic-variation slope in [`bm_stat_test`].
pub const QV_SLOPE_TOLERANCE: f64 = 0.05;
/// Bound on the excess-kurtosis z-score in [`bm_stat_test`].
pub const KURTOSIS_Z_BOUND: f64 = 4.0;
pub const MIN_TEST_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeChangeProfile {
    pub times: Vec<f64>,
    pub sigma: Vec<f64>,
    pub lambda_sq: Vec<f64>,
}

impl TimeChangeProfile {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `sigma(T-)`, the clock at the last stored sample.
    pub fn final_sigma(&self) -> f64 {
        self.sigma.last().copied().unwrap_or(0.0)
    }

    /// `sigma(t)` by linear interpolation between samples.
    pub fn sigma_at(&self, t: f64) -> f64 {
        interpolate(&self.times, &self.sigma, t)
    }

    /// `sigma^{-1}(s)` by monotone linear interpolation.
    pub fn inverse(&self, s: f64) -> Result<f64> {
        self.check_strict()?;
        Ok(interpolate(&self.sigma, &self.times, s))
    }

    fn check_strict(&self) -> Result<()> {
        match self.sigma.windows(2).position(|w| !(w[1] > w[0])) {
            Some(index) => Err(Error::DegenerateProfile { index }),
            None => Ok(()),
        }
    }

    /// `t,sigma` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,sigma\n");
        for (t, s) in self.times.iter().zip(&self.sigma) {
            let _ = writeln!(out, "{t},{s}");
        }
        out
    }
}

/// Piecewise-linear interpolation of `ys` over increasing `xs`, clamped at the ends.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v <= x);
    if i == 0 {
        return ys[0];
    }
    if i == xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[i - 1], xs[i]);
    ys[i - 1] + (x - x0) / (x1 - x0) * (ys[i] - ys[i - 1])
}

/// Builds `sigma` by the trapezoid rule from the dilation `factor` (which
/// returns `lambda`, not `lambda^2`) at every stored point.
pub fn time_change_profile<F>(path: &PathRecord, factor: F) -> Result<TimeChangeProfile>
where
    F: Fn(&RiemannSpherePoint) -> f64,
{
    let mut lambda_sq = Vec::with_capacity(path.len());
    for (index, p) in path.points.iter().enumerate() {
        let l = factor(p);
        if !l.is_finite() || l < 0.0 {
            return Err(Error::NonFiniteFactor { index });
        }
        lambda_sq.push(l * l);
    }
    let mut sigma = Vec::with_capacity(path.len());
    let mut acc = 0.0;
    for i in 0..path.len() {
        if i > 0 {
            acc += 0.5 * (lambda_sq[i - 1] + lambda_sq[i]) * (path.times[i] - path.times[i - 1]);
        }
        sigma.push(acc);
    }
    Ok(TimeChangeProfile { times: path.times.clone(), sigma, lambda_sq })
}

/// How [`reparametrize`] reads the image path at a grid time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lookup {
    /// interpolate between neighbouring samples, output times on the grid
    #[default]
    Linear,
    /// take the sample whose clock is nearest to each grid time and report
    /// that sample's exact clock; repeated samples are dropped
    Nearest,
}

/// The image path on the clock `sigma`, sampled at `s = 0, h, 2h, ...`.
pub fn reparametrize(
    image: &PathRecord,
    profile: &TimeChangeProfile,
    grid_step: f64,
    lookup: Lookup,
) -> Result<PathRecord> {
    if image.len() != profile.len() {
        return Err(Error::Precondition("image path and profile must be parallel".into()));
    }
    if image.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if !(grid_step > 0.0) {
        return Err(Error::Precondition("grid step must be positive".into()));
    }
    profile.check_strict()?;
    let sigma = &profile.sigma;
    let last = *sigma.last().unwrap();
    let n_grid = (last / grid_step).floor() as usize + 1;
    let mut times = Vec::with_capacity(n_grid);
    let mut points = Vec::with_capacity(n_grid);
    for k in 0..n_grid {
        let s = k as f64 * grid_step;
        let i = sigma.partition_point(|&v| v <= s).min(sigma.len() - 1).max(1);
        let (s0, s1) = (sigma[i - 1], sigma[i]);
        let frac = ((s - s0) / (s1 - s0)).clamp(0.0, 1.0);
        match lookup {
            Lookup::Linear => {
                times.push(s);
                points.push(lerp_point(&image.points[i - 1], &image.points[i], frac, image.geometry));
            }
            Lookup::Nearest => {
                let j = if frac < 0.5 { i - 1 } else { i };
                if times.last().is_some_and(|&t| t >= sigma[j]) {
                    continue;
                }
                times.push(sigma[j]);
                points.push(image.points[j]);
            }
        }
    }
    Ok(PathRecord { times, points, hit: None, steps: 0, dt: grid_step, ..image.clone_header() })
}

impl PathRecord {
    fn clone_header(&self) -> PathRecord {
        PathRecord {
            geometry: self.geometry,
            times: Vec::new(),
            points: Vec::new(),
            hit: self.hit.clone(),
            stopped_reason: self.stopped_reason,
            steps: self.steps,
            seed: self.seed,
            path_index: self.path_index,
            dt: self.dt,
            epsilon: self.epsilon,
        }
    }
}

fn lerp_point(a: &RiemannSpherePoint, b: &RiemannSpherePoint, f: f64, geometry: Geometry) -> RiemannSpherePoint {
    match (geometry, a.finite(), b.finite()) {
        (Geometry::Plane, Some(za), Some(zb)) => RiemannSpherePoint::Finite(za + (zb - za) * f),
        _ => {
            let (u, v) = (a.to_unit_vector(), b.to_unit_vector());
            let w = [0, 1, 2].map(|k| u[k] + f * (v[k] - u[k]));
            let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
            RiemannSpherePoint::from_unit_vector([w[0] / n, w[1] / n, w[2] / n])
        }
    }
}

/// Squared increment between two samples: planar for planar paths, chordal otherwise.
fn squared_increment(a: &RiemannSpherePoint, b: &RiemannSpherePoint, geometry: Geometry) -> f64 {
    match (geometry, a.finite(), b.finite()) {
        (Geometry::Plane, Some(za), Some(zb)) => (zb - za).norm_sqr(),
        _ => {
            let d = a.chordal_distance(b);
            d * d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticVariation {
    /// fitted quadratic variation per unit time
    pub slope: f64,
    pub r2: f64,
    /// quadratic variation over the whole path
    pub total: f64,
}

/// Sums squared increments over consecutive blocks of `block` steps and fits
/// the cumulative sum against time at the dyadic prefixes (and the origin).
pub fn quadratic_variation(path: &PathRecord, block: usize) -> Result<QuadraticVariation> {
    let block = block.max(1);
    if path.len() < 2 * block {
        return Err(Error::TooFewSamples { needed: 2 * block, got: path.len() });
    }
    let idx: Vec<usize> = (0..path.len()).step_by(block).collect();
    let mut cumulative = vec![0.0];
    for w in idx.windows(2) {
        let q = squared_increment(&path.points[w[0]], &path.points[w[1]], path.geometry);
        cumulative.push(cumulative.last().unwrap() + q);
    }
    let m = idx.len() - 1;
    let t0 = path.times[0];
    let (mut xs, mut ys) = (vec![0.0], vec![0.0]);
    let mut k = m;
    while k >= 1 {
        xs.push(path.times[idx[k]] - t0);
        ys.push(cumulative[k]);
        k /= 2;
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(QuadraticVariation { slope: fit.slope, r2: fit.r2, total: cumulative[m] })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmTestReport {
    pub qv_slope: f64,
    pub qv_r2: f64,
    pub increment_kurtosis_z: f64,
    pub increment_independence_corr: f64,
    pub n_increments: usize,
    pub pass: bool,
}

/// Certifies a path as Brownian with quadratic variation `expected_slope * t`:
/// slope within [`QV_SLOPE_TOLERANCE`], Gaussian increments (excess-kurtosis
/// z-score below [`KURTOSIS_Z_BOUND`]) and uncorrelated successive increments
/// (lag-1 correlation below `4/sqrt(n)`).
pub fn bm_stat_test(path: &PathRecord, expected_slope: f64) -> Result<BmTestReport> {
    if path.len() < MIN_TEST_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_TEST_SAMPLES, got: path.len() });
    }
    if !(expected_slope > 0.0) {
        return Err(Error::Precondition("expected slope must be positive".into()));
    }
    let qv = quadratic_variation(path, 1)?;

    // per-coordinate increments, scaled to unit variance under the null
    let n = path.len() - 1;
    let mut us = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for i in 0..n {
        let (a, b) = (&path.points[i], &path.points[i + 1]);
        let (dx, dy) = match (path.geometry, a.finite(), b.finite()) {
            (Geometry::Plane, Some(za), Some(zb)) => ((zb - za).re, (zb - za).im),
            _ => {
                let (u, v) = (a.to_unit_vector(), b.to_unit_vector());
                let d = sub(&v, &u);
                let (e1, e2) = tangent_basis(&u);
                (d[0] * e1[0] + d[1] * e1[1] + d[2] * e1[2], d[0] * e2[0] + d[1] * e2[1] + d[2] * e2[2])
            }
        };
        let scale = ((path.times[i + 1] - path.times[i]) * expected_slope / 2.0).sqrt();
        us[0].push(dx / scale);
        us[1].push(dy / scale);
    }

    let all = us.iter().flatten();
    let count = 2 * n;
    let mean = all.clone().sum::<f64>() / count as f64;
    let m2 = all.clone().map(|u| (u - mean).powi(2)).sum::<f64>() / count as f64;
    let m4 = all.map(|u| (u - mean).powi(4)).sum::<f64>() / count as f64;
    let kurtosis = m4 / (m2 * m2) - 3.0;
    let kurtosis_z = kurtosis / (24.0 / count as f64).sqrt();

    let (mut num, mut den) = (0.0, 0.0);
    for u in &us {
        for w in u.windows(2) {
            num += (w[0] - mean) * (w[1] - mean);
        }
        den += u.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    }
    let corr = num / den;

    let pass = (qv.slope - expected_slope).abs() / expected_slope < QV_SLOPE_TOLERANCE
        && kurtosis_z.abs() < KURTOSIS_Z_BOUND
        && corr.abs() < 4.0 / (n as f64).sqrt();
    Ok(BmTestReport {
        qv_slope: qv.slope,
        qv_r2: qv.r2,
        increment_kurtosis_z: kurtosis_z,
        increment_independence_corr: corr,
        n_increments: n,
        pass,
    })
}

/// Holomorphic test maps with known dilation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestMap {
    Translate(Complex64),
    Scale(Complex64),
    Square,
    Inverse,
}

impl TestMap {
    pub fn apply(&self, z: Complex64) -> Complex64 {
        match *self {
            TestMap::Translate(c) => z + c,
            TestMap::Scale(c) => z * c,
            TestMap::Square => z * z,
            TestMap::Inverse => z.inv(),
        }
    }

    /// `|Phi'(z)|`.
    pub fn dilation(&self, z: Complex64) -> f64 {
        match *self {
            TestMap::Translate(_) => 1.0,
            TestMap::Scale(c) => c.norm(),
            TestMap::Square => 2.0 * z.norm(),
            TestMap::Inverse => 1.0 / z.norm_sqr(),
        }
    }

    /// Applies the map pointwise to a planar path, keeping the source times.
    pub fn map_path(&self, path: &PathRecord) -> Result<PathRecord> {
        let mut points = Vec::with_capacity(path.len());
        for (index, p) in path.points.iter().enumerate() {
            let w = p.finite().map(|z| self.apply(z));
            match w {
                Some(w) if w.is_finite() => points.push(RiemannSpherePoint::Finite(w)),
                _ => return Err(Error::NonFiniteFactor { index }),
            }
        }
        Ok(PathRecord { times: path.times.clone(), points, ..path.clone_header() })
    }
}

impl fmt::Display for TestMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestMap::Translate(c) => write!(f, "translate:{}", fmt_complex(c)),
            TestMap::Scale(c) => write!(f, "scale:{}", fmt_complex(c)),
            TestMap::Square => f.write_str("square"),
            TestMap::Inverse => f.write_str("inverse"),
        }
    }
}

fn fmt_complex(c: &Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        format!("{}{:+}i", c.re, c.im)
    }
}

impl FromStr for TestMap {
    type Err = Error;

    /// `translate:<c>`, `scale:<c>`, `square` or `inverse`; `<c>` is a real
    /// number or `a+bi`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Precondition(format!("unknown map {s:?}"));
        match s.split_once(':') {
            None if s == "square" => Ok(TestMap::Square),
            None if s == "inverse" => Ok(TestMap::Inverse),
            Some(("translate", c)) => Ok(TestMap::Translate(c.parse().map_err(|_| bad())?)),
            Some(("scale", c)) => {
                let c: Complex64 = c.parse().map_err(|_| bad())?;
                if c == Complex64::new(0.0, 0.0) {
                    return Err(bad());
                }
                Ok(TestMap::Scale(c))
            }
            _ => Err(bad()),
        }
    }
}

/// Dilation used to build a time change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DilationMode {
    Identity,
    Constant(f64),
    /// dilation of `z -> z^2`, planar or spherical by path geometry
    Square,
    /// `1 / max(d(z, sample), RECIP_DIST_FLOOR)`
    RecipDist,
}

impl DilationMode {
    /// `lambda` at `p`. The reciprocal-distance mode needs a target.
    pub fn lambda(&self, p: &RiemannSpherePoint, geometry: Geometry, target: Option<&Target>) -> Result<f64> {
        Ok(match *self {
            DilationMode::Identity => 1.0,
            DilationMode::Constant(c) => c,
            DilationMode::Square => match (geometry, p.finite()) {
                (Geometry::Plane, Some(z)) => 2.0 * z.norm(),
                (_, Some(z)) => {
                    let r2 = z.norm_sqr();
                    2.0 * z.norm() * (1.0 + r2) / (1.0 + r2 * r2)
                }
                (_, None) => 0.0,
            },
            DilationMode::RecipDist => {
                let target = target.ok_or_else(|| Error::Precondition("recip-dist needs a limit set sample".into()))?;
                1.0 / target.distance(p).max(RECIP_DIST_FLOOR)
            }
        })
    }
}

impl fmt::Display for DilationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DilationMode::Identity => f.write_str("identity"),
            DilationMode::Constant(c) => write!(f, "const:{c}"),
            DilationMode::Square => f.write_str("square"),
            DilationMode::RecipDist => f.write_str("recip-dist"),
        }
    }
}

impl FromStr for DilationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(DilationMode::Identity),
            "square" => Ok(DilationMode::Square),
            "recip-dist" => Ok(DilationMode::RecipDist),
            _ => match s.strip_prefix("const:").and_then(|c| c.parse::<f64>().ok()) {
                Some(c) if c.is_finite() && c >= 0.0 => Ok(DilationMode::Constant(c)),
                _ => Err(Error::Precondition(format!("unknown factor {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub epsilon: f64,
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaTable {
    pub factor: String,
    pub n_paths: u64,
    /// paths that reached the smallest epsilon before the horizon
    pub n_hit: u64,
    pub depth: usize,
    pub rows: Vec<SigmaRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaRun {
    pub n_paths: u64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
}

/// `sigma(T_eps)` for nested stopping levels. Each path is simulated once to
/// the smallest epsilon; the larger levels are read off the same path as the
/// first sample within `eps` of the limit sample, so `T_eps` and
/// `sigma(T_eps)` are monotone along every path. Medians and quartiles are
/// taken over the paths that reach every level.
pub fn sigma_at_hit_statistics(
    group: &SchottkyGroup,
    start: &RiemannSpherePoint,
    epsilons: &[f64],
    factor: DilationMode,
    run: &SigmaRun,
) -> Result<SigmaTable> {
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0)) || epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Precondition("epsilons must be positive and strictly decreasing".into()));
    }
    let eps_min = *epsilons.last().unwrap();
    let depth = group.depth_for_epsilon(eps_min, DEFAULT_WORD_CAP)?;
    let sample = group.sample_limit_set(depth, 1, DEFAULT_WORD_CAP)?;
    let target = Target::new(&sample);
    let params = WalkParams { epsilon: eps_min, dt: run.dt, horizon: run.horizon, thinning: 1 };

    let per_path: Vec<Option<Vec<f64>>> = (0..run.n_paths)
        .into_par_iter()
        .map(|i| -> Result<Option<Vec<f64>>> {
            let path = simulate_until_hit(start, &target, &params, RngStream::new(run.seed, i))?;
            if path.hit.is_none() {
                return Ok(None);
            }
            let profile =
                time_change_profile(&path, |p| factor.lambda(p, Geometry::Sphere, Some(&target)).unwrap_or(f64::NAN))?;
            let mut values = Vec::with_capacity(epsilons.len());
            let mut i = 0;
            for &eps in epsilons {
                while target.distance(&path.points[i]) > eps {
                    i += 1;
                }
                values.push(profile.sigma[i]);
            }
            Ok(Some(values))
        })
        .collect::<Result<_>>()?;

    let hits: Vec<&Vec<f64>> = per_path.iter().flatten().collect();
    let mut rows = Vec::with_capacity(epsilons.len());
    for (k, &epsilon) in epsilons.iter().enumerate() {
        let mut col: Vec<f64> = hits.iter().map(|v| v[k]).collect();
        col.sort_by(f64::total_cmp);
        let q = |p| if col.is_empty() { f64::NAN } else { quantile_sorted(&col, p) };
        rows.push(SigmaRow { epsilon, median: q(0.5), lower_quartile: q(0.25), upper_quartile: q(0.75) });
    }
    Ok(SigmaTable { factor: factor.to_string(), n_paths: run.n_paths, n_hit: hits.len() as u64, depth, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize, t: f64) -> PathRecord {
        let times: Vec<f64> = (0..=n).map(|k| t * k as f64 / n as f64).collect();
        let points = times.iter().map(|&u| RiemannSpherePoint::new(u, 0.0)).collect();
        PathRecord::from_samples(Geometry::Plane, times, points).unwrap()
    }

    #[test]
    fn constant_factors() {
        let path = ramp(100, 1.0);
        let one = time_change_profile(&path, |_| 1.0).unwrap();
        assert_eq!(one.sigma, path.times);
        let two = time_change_profile(&path, |_| 2.0).unwrap();
        for (s, t) in two.sigma.iter().zip(&path.times) {
            assert!((s - 4.0 * t).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_consistency() {
        let path = ramp(50, 2.0);
        let p = time_change_profile(&path, |z| 2.0 * z.finite().unwrap().norm()).unwrap();
        assert_eq!(p.sigma[0], 0.0);
        for i in 0..50 {
            let step = 0.5 * (p.lambda_sq[i] + p.lambda_sq[i + 1]) * (p.times[i + 1] - p.times[i]);
            // the increment is the trapezoid term up to rounding of the running sum
            assert!((p.sigma[i + 1] - p.sigma[i] - step).abs() <= 4.0 * f64::EPSILON * p.sigma[i + 1]);
        }
    }

    #[test]
    fn pole_is_reported() {
        let path = ramp(10, 1.0);
        let err = time_change_profile(&path, |z| 1.0 / z.finite().unwrap().norm()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteFactor { index: 0 }));
    }

    #[test]
    fn plateau_is_degenerate() {
        let path = ramp(10, 1.0);
        let p = time_change_profile(&path, |z| if z.finite().unwrap().re < 0.5 { 1.0 } else { 0.0 }).unwrap();
        assert!(matches!(reparametrize(&path, &p, 0.1, Lookup::Linear), Err(Error::DegenerateProfile { .. })));
        assert!(p.inverse(0.1).is_err());
    }

    #[test]
    fn identity_time_change_resamples() {
        let path = ramp(100, 1.0);
        let p = time_change_profile(&path, |_| 1.0).unwrap();
        let out = reparametrize(&path, &p, 0.05, Lookup::Linear).unwrap();
        assert_eq!(out.len(), 21);
        for (t, z) in out.times.iter().zip(&out.points) {
            assert!((z.finite().unwrap().re - t).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_time_change_maps_grid_points() {
        let path = ramp(100, 1.0);
        let p = time_change_profile(&path, |_| 2.0).unwrap();
        let out = reparametrize(&path, &p, 0.04, Lookup::Linear).unwrap();
        // s = 4 t0 with t0 = k / 100
        for (k, z) in out.points.iter().enumerate() {
            assert!((z.finite().unwrap().re - k as f64 / 100.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let path = ramp(1000, 1.0);
        let p = time_change_profile(&path, |z| 2.0 * z.finite().unwrap().norm()).unwrap();
        let mut s = 0.0;
        while s < p.final_sigma() {
            assert!((p.sigma_at(p.inverse(s).unwrap()) - s).abs() < 1e-6);
            s += 1e-3;
        }
    }

    #[test]
    fn nearest_lookup_uses_sample_clock() {
        let path = ramp(100, 1.0);
        let p = time_change_profile(&path, |z| 1.0 + z.finite().unwrap().re).unwrap();
        let out = reparametrize(&path, &p, 0.013, Lookup::Nearest).unwrap();
        assert!(out.times.windows(2).all(|w| w[1] > w[0]));
        for (s, z) in out.times.iter().zip(&out.points) {
            let j = p.sigma.iter().position(|v| v == s).unwrap();
            assert_eq!(*z, path.points[j]);
        }
    }

    #[test]
    fn ramp_quadratic_variation_halves() {
        let coarse = quadratic_variation(&ramp(1000, 1.0), 1).unwrap();
        let fine = quadratic_variation(&ramp(2000, 1.0), 1).unwrap();
        assert!((coarse.total - 1e-3).abs() < 1e-12);
        assert!((fine.total / coarse.total - 0.5).abs() < 1e-9);
        assert!(quadratic_variation(&ramp(3, 1.0), 4).is_err());
    }

    #[test]
    fn ramp_fails_bm_test() {
        let r = bm_stat_test(&ramp(20_000, 1.0), 2.0).unwrap();
        assert!(!r.pass);
        assert!(r.qv_slope < 1e-3);
        assert!(bm_stat_test(&ramp(100, 1.0), 2.0).is_err());
    }

    #[test]
    fn parse_modes() {
        for s in ["identity", "const:2.5", "square", "recip-dist"] {
            assert_eq!(s.parse::<DilationMode>().unwrap().to_string(), s);
        }
        assert!("const:-1".parse::<DilationMode>().is_err());
        assert!("cube".parse::<DilationMode>().is_err());
        for s in ["translate:1", "scale:2", "square", "inverse", "translate:1+2i"] {
            assert_eq!(s.parse::<TestMap>().unwrap().to_string(), s);
        }
        assert!("scale:0".parse::<TestMap>().is_err());
    }

    #[test]
    fn test_map_dilations_match_finite_differences() {
        let z = Complex64::new(0.7, -1.1);
        let h = 1e-6;
        for map in [
            TestMap::Translate(Complex64::new(1.0, 0.0)),
            TestMap::Scale(Complex64::new(2.0, 0.0)),
            TestMap::Square,
            TestMap::Inverse,
        ] {
            let fd = (map.apply(z + h) - map.apply(z)).norm() / h;
            assert!((fd - map.dilation(z)).abs() < 1e-5, "{map}");
        }
    }
}
