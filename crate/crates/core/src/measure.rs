//! Empirical harmonic measures on the limit set and accumulation experiments.
//!
//! Exit samples are binned by reduced-word addresses: the depth-`d` bin of a
//! sample is the length-`d` prefix of the address of the limit point it hit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::brownian::{simulate_batch, PathRecord, Target, WalkParams};
use crate::error::{Error, Result};
use crate::index::PointIndex;
use crate::kleinian::{
    enumerate_reduced_words, GroupWord, OrbitCloud, SchottkyGroup, DEFAULT_REDUCTION_DEPTH, DEFAULT_WORD_CAP,
};
use crate::sphere::RiemannSpherePoint;
use crate::transport::TimeChangeProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitSample {
    pub point: RiemannSpherePoint,
    pub address: GroupWord,
    pub time: f64,
    pub path_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitParameters {
    pub start: RiemannSpherePoint,
    pub epsilon: f64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    /// depth of the limit set sample the paths were stopped on
    pub depth: usize,
    pub rank: usize,
    pub n_attempted: u64,
    pub n_hit: u64,
}

/// Conditional exit law: hits only, with the attempt count alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitMeasure {
    pub parameters: ExitParameters,
    pub samples: Vec<ExitSample>,
}

#[derive(Serialize, Deserialize)]
struct SampleRow {
    x: f64,
    y: f64,
    z: f64,
    address: GroupWord,
    t: f64,
    path: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDocument {
    parameters: ExitParameters,
    samples: Vec<SampleRow>,
}

impl ExitMeasure {
    pub fn n_hit(&self) -> u64 {
        self.parameters.n_hit
    }

    pub fn n_attempted(&self) -> u64 {
        self.parameters.n_attempted
    }

    pub fn hit_fraction(&self) -> f64 {
        hit_fraction(self.parameters.n_hit, self.parameters.n_attempted)
    }

    /// Fraction of attempted paths that hit before `horizon`.
    pub fn hit_fraction_by(&self, horizon: f64) -> f64 {
        let n = self.samples.iter().filter(|s| s.time <= horizon).count() as u64;
        hit_fraction(n, self.parameters.n_attempted)
    }

    /// Hit counts per depth-`depth` address prefix; bins without hits are absent.
    pub fn histogram(&self, depth: usize) -> Result<BTreeMap<GroupWord, u64>> {
        if depth > self.parameters.depth {
            return Err(Error::Precondition(format!(
                "bin depth {depth} exceeds sample depth {}",
                self.parameters.depth
            )));
        }
        let mut bins = BTreeMap::new();
        for s in &self.samples {
            *bins.entry(s.address.prefix(depth)).or_insert(0) += 1;
        }
        Ok(bins)
    }

    /// The measure the first `n` paths would have produced on their own.
    pub fn first_paths(&self, n: u64) -> ExitMeasure {
        let n = n.min(self.parameters.n_attempted);
        let samples: Vec<ExitSample> = self.samples.iter().filter(|s| s.path_index < n).cloned().collect();
        ExitMeasure {
            parameters: ExitParameters { n_attempted: n, n_hit: samples.len() as u64, ..self.parameters.clone() },
            samples,
        }
    }

    /// Pools two measures generated with the same parameters apart from the seed.
    pub fn merge(&self, other: &ExitMeasure) -> Result<ExitMeasure> {
        let (a, b) = (&self.parameters, &other.parameters);
        if a.start != b.start
            || a.epsilon != b.epsilon
            || a.dt != b.dt
            || a.horizon != b.horizon
            || a.depth != b.depth
            || a.rank != b.rank
        {
            return Err(Error::MismatchedMeasures(
                "merge needs identical start, epsilon, dt, horizon and depth".into(),
            ));
        }
        let mut samples = self.samples.clone();
        samples.extend_from_slice(&other.samples);
        Ok(ExitMeasure {
            parameters: ExitParameters {
                n_attempted: a.n_attempted + b.n_attempted,
                n_hit: a.n_hit + b.n_hit,
                ..a.clone()
            },
            samples,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = MeasureDocument {
            parameters: self.parameters.clone(),
            samples: self
                .samples
                .iter()
                .map(|s| {
                    let [x, y, z] = s.point.to_unit_vector();
                    SampleRow { x, y, z, address: s.address.clone(), t: s.time, path: s.path_index }
                })
                .collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<ExitMeasure> {
        let doc: MeasureDocument = serde_json::from_str(text)?;
        if doc.samples.len() as u64 != doc.parameters.n_hit || doc.parameters.n_hit > doc.parameters.n_attempted {
            return Err(Error::Precondition("sample count disagrees with n_hit".into()));
        }
        let samples = doc
            .samples
            .into_iter()
            .map(|r| ExitSample {
                point: RiemannSpherePoint::from_unit_vector([r.x, r.y, r.z]),
                address: r.address,
                time: r.t,
                path_index: r.path,
            })
            .collect();
        Ok(ExitMeasure { parameters: doc.parameters, samples })
    }
}

fn hit_fraction(hits: u64, attempted: u64) -> f64 {
    if attempted == 0 {
        0.0
    } else {
        hits as f64 / attempted as f64
    }
}

/// The limit set sample used to stop paths at thickness `epsilon`: depth by
/// the diameter rule, one point per nested disk.
pub fn stopping_target(group: &SchottkyGroup, epsilon: f64) -> Result<(Target, usize)> {
    let depth = group.depth_for_epsilon(epsilon, DEFAULT_WORD_CAP)?;
    let sample = group.sample_limit_set(depth, 1, DEFAULT_WORD_CAP)?;
    Ok((Target::new(&sample), depth))
}

/// Runs `n_paths` walks from `start` and keeps the hits.
pub fn estimate_exit_measure(
    group: &SchottkyGroup,
    start: &RiemannSpherePoint,
    n_paths: u64,
    params: &WalkParams,
    seed: u64,
) -> Result<ExitMeasure> {
    let (target, depth) = stopping_target(group, params.epsilon)?;
    let params = WalkParams { thinning: u64::MAX, ..*params };
    let paths = simulate_batch(start, &target, &params, seed, n_paths)?;
    Ok(exit_measure_from_paths(&paths, start, &params, seed, depth, group.rank()))
}

pub fn exit_measure_from_paths(
    paths: &[PathRecord],
    start: &RiemannSpherePoint,
    params: &WalkParams,
    seed: u64,
    depth: usize,
    rank: usize,
) -> ExitMeasure {
    let samples: Vec<ExitSample> = paths
        .iter()
        .filter_map(|p| p.hit.as_ref().map(|h| (p.path_index, h)))
        .map(|(path_index, h)| ExitSample { point: h.point, address: h.address.clone(), time: h.time, path_index })
        .collect();
    ExitMeasure {
        parameters: ExitParameters {
            start: *start,
            epsilon: params.epsilon,
            dt: params.dt,
            horizon: params.horizon,
            seed,
            depth,
            rank,
            n_attempted: paths.len() as u64,
            n_hit: samples.len() as u64,
        },
        samples,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureComparison {
    pub depth: usize,
    pub shared_bins: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub undersampled_bins: usize,
}

/// Ratios of normalized depth-`depth` bin masses `m1 / m2` over the bins where
/// both measures have at least `min_bin` hits.
pub fn compare_measures(m1: &ExitMeasure, m2: &ExitMeasure, depth: usize, min_bin: u64) -> Result<MeasureComparison> {
    let (a, b) = (&m1.parameters, &m2.parameters);
    if a.epsilon != b.epsilon || a.rank != b.rank || a.depth != b.depth {
        return Err(Error::MismatchedMeasures("measures must share the group and epsilon".into()));
    }
    let (h1, h2) = (m1.histogram(depth)?, m2.histogram(depth)?);
    let (n1, n2) = (m1.n_hit() as f64, m2.n_hit() as f64);
    let mut shared = 0;
    let mut undersampled = 0;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for word in enumerate_reduced_words(a.rank, depth) {
        let c1 = h1.get(&word).copied().unwrap_or(0);
        let c2 = h2.get(&word).copied().unwrap_or(0);
        if c1 >= min_bin && c2 >= min_bin && c1 > 0 && c2 > 0 {
            shared += 1;
            let r = (c1 as f64 / n1) / (c2 as f64 / n2);
            lo = lo.min(r);
            hi = hi.max(r);
        } else {
            undersampled += 1;
        }
    }
    if shared == 0 {
        return Err(Error::NoSharedBins);
    }
    Ok(MeasureComparison { depth, shared_bins: shared, ratio_min: lo, ratio_max: hi, undersampled_bins: undersampled })
}

/// Fraction of the depth-`depth` address bins that received at least one hit.
pub fn support_coverage(m: &ExitMeasure, depth: usize) -> Result<f64> {
    let hist = m.histogram(depth)?;
    let total = enumerate_reduced_words(m.parameters.rank, depth).len();
    Ok(hist.len() as f64 / total as f64)
}

/// Fraction of exit samples within chordal `delta` of some cloud point.
pub fn accumulation_mass(m: &ExitMeasure, cloud: &OrbitCloud, delta: f64) -> f64 {
    mass_near(m, &PointIndex::new(&cloud.points), delta)
}

fn mass_near(m: &ExitMeasure, index: &PointIndex, delta: f64) -> f64 {
    if m.samples.is_empty() {
        return 0.0;
    }
    let near = m.samples.iter().filter(|s| index.nearest_within(&s.point.to_unit_vector(), delta).is_some()).count();
    near as f64 / m.samples.len() as f64
}

/// `(n, accumulation_mass(m, orbit_cloud(y, n), delta))` for `n = 0..=max_len`.
pub fn accumulation_curve(
    group: &SchottkyGroup,
    y: &RiemannSpherePoint,
    m: &ExitMeasure,
    delta: f64,
    max_len: usize,
) -> Result<Vec<(usize, f64)>> {
    let cloud = group.orbit_cloud(y, max_len, DEFAULT_WORD_CAP)?;
    Ok((0..=max_len)
        .map(|n| {
            let index = PointIndex::new(&cloud.points[..cloud.prefix_len(n)]);
            (n, mass_near(m, &index, delta))
        })
        .collect())
}

/// Largest distance from a point of `points` to the cloud; the cloud is
/// `delta`-dense in `points` iff this is at most `delta`.
pub fn covering_radius(cloud: &OrbitCloud, points: &[RiemannSpherePoint]) -> f64 {
    let index = PointIndex::new(&cloud.points);
    points.iter().map(|p| index.nearest(&p.to_unit_vector()).map_or(f64::INFINITY, |(_, d)| d)).fold(0.0, f64::max)
}

/// One entry of the path into the orbit neighbourhood, in clock time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub start: f64,
    pub end: f64,
}

/// Entries of `path` into the union of chordal `radius`-balls around `w(y)`,
/// `|w| <= word_ball`, reported on the clock of `profile`.
///
/// A visit lasts until the path is farther than `2 * radius` from every
/// ball center, so jitter across the boundary is not counted twice. The scan
/// stops at the first point that cannot be reduced to the fundamental domain.
pub fn revisit_times(
    path: &PathRecord,
    profile: &TimeChangeProfile,
    group: &SchottkyGroup,
    y: &RiemannSpherePoint,
    radius: f64,
    word_ball: usize,
) -> Result<Vec<Visit>> {
    if profile.len() != path.len() {
        return Err(Error::Precondition("profile and path must be parallel".into()));
    }
    if !group.in_fundamental_domain(y) {
        return Err(Error::Precondition("y must lie in the fundamental domain".into()));
    }
    let cloud = group.orbit_cloud(y, word_ball, DEFAULT_WORD_CAP)?;
    let index = PointIndex::new(&cloud.points);
    let mut visits: Vec<Visit> = Vec::new();
    let mut inside = false;
    for (p, &s) in path.points.iter().zip(&profile.sigma) {
        if matches!(
            group.reduce_to_fundamental_domain(p, DEFAULT_REDUCTION_DEPTH),
            Err(Error::ReductionDepthExceeded(_))
        ) {
            break;
        }
        let d = index.nearest(&p.to_unit_vector()).map_or(f64::INFINITY, |(_, d)| d);
        if inside {
            if d > 2.0 * radius {
                inside = false;
            } else if d <= radius {
                visits.last_mut().unwrap().end = s;
            }
        } else if d <= radius {
            inside = true;
            visits.push(Visit { start: s, end: s });
        }
    }
    Ok(visits)
}
