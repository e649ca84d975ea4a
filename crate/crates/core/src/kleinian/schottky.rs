use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{chordal_distance, RiemannSpherePoint};

use super::word::{check_budget, free_group_word_count, letters, words_of_length};
use super::{Circle, GroupWord, MoebiusMap};

const PAIRING_TOL: f64 = 1e-9;
/// Default bound on the number of letters peeled off by [`SchottkyGroup::reduce_to_fundamental_domain`].
pub const DEFAULT_REDUCTION_DEPTH: usize = 64;

/// Classical Schottky group: generator `k` maps the exterior of the first
/// circle of pair `k` onto the interior of the second.
///
/// Disk naming follows the letters: `disk(k)` is the interior of the second
/// circle of pair `k` (where `g_k` sends everything outside `disk(-k)`), and
/// `disk(-k)` is the interior of the first circle.
#[derive(Debug, Clone)]
pub struct SchottkyGroup {
    circle_pairs: Vec<(Circle, Circle)>,
    generators: Vec<MoebiusMap>,
    /// indexed by `letter_slot`
    letter_maps: Vec<MoebiusMap>,
    attracting: Vec<RiemannSpherePoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDocument {
    pub pairs: Vec<[Circle; 2]>,
}

/// Finite sample of the limit set: for every reduced word `w` of length
/// `depth`, a few genuine limit points inside the nested disk of `w`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitSetSample {
    pub points: Vec<RiemannSpherePoint>,
    pub addresses: Vec<GroupWord>,
    pub depth: usize,
}

/// Images of `base` under every reduced word of length at most
/// `max_word_length`, in breadth-first (shortest words first) order.
#[derive(Debug, Clone)]
pub struct OrbitCloud {
    pub base: RiemannSpherePoint,
    pub points: Vec<RiemannSpherePoint>,
    pub max_word_length: usize,
    rank: usize,
}

impl OrbitCloud {
    /// Number of leading points that come from words of length `<= n`.
    pub fn prefix_len(&self, n: usize) -> usize {
        let n = n.min(self.max_word_length);
        free_group_word_count(self.rank, n).map_or(self.points.len(), |c| c as usize)
    }

    pub fn truncated(&self, n: usize) -> OrbitCloud {
        let n = n.min(self.max_word_length);
        OrbitCloud {
            base: self.base,
            points: self.points[..self.prefix_len(n)].to_vec(),
            max_word_length: n,
            rank: self.rank,
        }
    }

    pub fn empty(base: RiemannSpherePoint) -> OrbitCloud {
        OrbitCloud { base, points: Vec::new(), max_word_length: 0, rank: 0 }
    }
}

#[inline]
fn letter_slot(letter: i32) -> usize {
    let k = letter.unsigned_abs() as usize - 1;
    2 * k + usize::from(letter < 0)
}

impl SchottkyGroup {
    pub fn from_circle_pairs(pairs: Vec<(Circle, Circle)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyGroup);
        }
        let circles: Vec<Circle> = pairs.iter().flat_map(|(a, b)| [*a, *b]).collect();
        for i in 0..circles.len() {
            for j in i + 1..circles.len() {
                let gap = (circles[i].center - circles[j].center).norm();
                if !(gap > circles[i].radius + circles[j].radius) {
                    return Err(Error::CirclesOverlap { first: i, second: j });
                }
            }
        }

        let mut generators = Vec::with_capacity(pairs.len());
        for (k, (src, dst)) in pairs.iter().enumerate() {
            // z -> c2 + r1 r2 / (z - c1)
            let rr = Complex64::new(src.radius * dst.radius, 0.0);
            let g = MoebiusMap::new(dst.center, rr - dst.center * src.center, Complex64::new(1.0, 0.0), -src.center)?;
            verify_pairing(k, &g, src, dst)?;
            generators.push(g);
        }

        let mut letter_maps = Vec::with_capacity(2 * generators.len());
        for g in &generators {
            letter_maps.push(*g);
            letter_maps.push(g.inverse());
        }

        let mut group = SchottkyGroup { circle_pairs: pairs, generators, letter_maps, attracting: Vec::new() };
        let mut attracting = Vec::with_capacity(group.letter_maps.len());
        for l in letters(group.rank()) {
            let disk = group.disk(l);
            let fixed = group
                .letter_map(l)
                .fixed_points()
                .into_iter()
                .find(|p| p.finite().is_some_and(|z| disk.contains(z)))
                .ok_or_else(|| Error::InvalidCircle(format!("letter {l} has no attracting fixed point in its disk")))?;
            attracting.push(fixed);
        }
        group.attracting = attracting;
        Ok(group)
    }

    /// Rank-2 group pairing `(2, 1) <-> (-2, 1)` and `(2i, 1) <-> (-2i, 1)`.
    pub fn example() -> Self {
        let c = |x: f64, y: f64| Circle::new(Complex64::new(x, y), 1.0).expect("valid circle");
        SchottkyGroup::from_circle_pairs(vec![(c(2.0, 0.0), c(-2.0, 0.0)), (c(0.0, 2.0), c(0.0, -2.0))])
            .expect("example group is a valid Schottky configuration")
    }

    pub fn from_document(doc: GroupDocument) -> Result<Self> {
        SchottkyGroup::from_circle_pairs(doc.pairs.into_iter().map(|[a, b]| (a, b)).collect())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        SchottkyGroup::from_document(serde_json::from_str(text)?)
    }

    pub fn to_document(&self) -> GroupDocument {
        GroupDocument { pairs: self.circle_pairs.iter().map(|(a, b)| [*a, *b]).collect() }
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn is_elementary(&self) -> bool {
        self.rank() == 1
    }

    pub fn generators(&self) -> &[MoebiusMap] {
        &self.generators
    }

    pub fn circle_pairs(&self) -> &[(Circle, Circle)] {
        &self.circle_pairs
    }

    pub fn circles(&self) -> impl Iterator<Item = &Circle> {
        self.circle_pairs.iter().flat_map(|(a, b)| [a, b])
    }

    pub fn letter_map(&self, letter: i32) -> &MoebiusMap {
        &self.letter_maps[letter_slot(letter)]
    }

    pub fn disk(&self, letter: i32) -> Circle {
        let (src, dst) = self.circle_pairs[letter.unsigned_abs() as usize - 1];
        if letter > 0 {
            dst
        } else {
            src
        }
    }

    pub fn attracting_fixed_point(&self, letter: i32) -> RiemannSpherePoint {
        self.attracting[letter_slot(letter)]
    }

    pub fn word_map(&self, word: &GroupWord) -> MoebiusMap {
        word.letters().iter().fold(MoebiusMap::identity(), |acc, &l| acc.compose(self.letter_map(l)))
    }

    /// Nested disk of a nonempty word: `w' (disk(last))` with `w'` the word minus its last letter.
    pub fn word_disk(&self, word: &GroupWord) -> Option<Circle> {
        let last = word.last()?;
        let head = self.word_map(&word.prefix(word.len() - 1));
        head.image_circle(&self.disk(last))
    }

    /// All reduced words of length `<= max_len` with their normalized matrices,
    /// shortest first.
    pub fn enumerate_words(&self, max_len: usize, cap: usize) -> Result<Vec<(GroupWord, MoebiusMap)>> {
        check_budget(free_group_word_count(self.rank(), max_len), cap)?;
        let all = letters(self.rank());
        let mut out = vec![(GroupWord::empty(), MoebiusMap::identity())];
        let mut level_start = 0;
        for _ in 0..max_len {
            let level_end = out.len();
            for i in level_start..level_end {
                for &l in &all {
                    let (w, m) = &out[i];
                    if let Some(next) = w.extended(l) {
                        let prod = m.compose(self.letter_map(l));
                        out.push((next, prod));
                    }
                }
            }
            level_start = level_end;
        }
        Ok(out)
    }

    /// Depth-`depth` limit set sample.
    ///
    /// For a word `w` ending in letter `s`, the seeds are attracting fixed
    /// points of letters `t != -s` (starting with `s` itself), so every
    /// emitted point `w(fix(t))` is a limit point inside the nested disk of `w`.
    pub fn sample_limit_set(&self, depth: usize, per_disk: usize, cap: usize) -> Result<LimitSetSample> {
        if depth == 0 {
            return Err(Error::Precondition("limit set depth must be at least 1".into()));
        }
        let per_disk = per_disk.clamp(1, 2 * self.rank() - 1);
        let n_words = words_of_length(self.rank(), depth);
        check_budget(n_words.and_then(|n| n.checked_mul(per_disk as u128)), cap)?;

        let all = letters(self.rank());
        let mut sample = LimitSetSample { points: Vec::new(), addresses: Vec::new(), depth };
        let mut stack: Vec<(GroupWord, MoebiusMap)> = vec![(GroupWord::empty(), MoebiusMap::identity())];
        while let Some((w, m)) = stack.pop() {
            if w.len() == depth {
                let s = w.last().expect("depth >= 1");
                let seeds = std::iter::once(s).chain(all.iter().copied().filter(|&t| t != s && t != -s));
                for t in seeds.take(per_disk) {
                    sample.points.push(m.apply(&self.attracting_fixed_point(t)));
                    sample.addresses.push(w.clone());
                }
                continue;
            }
            // reversed so that pops come out in canonical letter order
            for &l in all.iter().rev() {
                if let Some(next) = w.extended(l) {
                    let prod = m.compose(self.letter_map(l));
                    stack.push((next, prod));
                }
            }
        }
        Ok(sample)
    }

    /// Maximum chordal diameter among the nested disks of words of length `depth`.
    pub fn max_disk_diameter(&self, depth: usize, cap: usize) -> Result<f64> {
        if depth == 0 {
            return Ok(2.0);
        }
        let words = self.enumerate_words(depth - 1, cap)?;
        let mut worst = 0.0f64;
        for (w, m) in words.iter().filter(|(w, _)| w.len() == depth - 1) {
            for l in letters(self.rank()) {
                if w.last() == Some(-l) {
                    continue;
                }
                let disk = m
                    .image_circle(&self.disk(l))
                    .ok_or_else(|| Error::Precondition("nested disk is not bounded".into()))?;
                worst = worst.max(disk.chordal_diameter());
            }
        }
        Ok(worst)
    }

    /// Smallest depth whose nested disks all have chordal diameter `< epsilon / 2`.
    pub fn depth_for_epsilon(&self, epsilon: f64, cap: usize) -> Result<usize> {
        if !(epsilon > 0.0) {
            return Err(Error::Precondition("epsilon must be positive".into()));
        }
        let mut depth = 1;
        loop {
            if self.max_disk_diameter(depth, cap)? < epsilon / 2.0 {
                return Ok(depth);
            }
            depth += 1;
            // the next depth's disks must fit the word budget
            check_budget(words_of_length(self.rank(), depth), cap)?;
        }
    }

    /// Pulls `z` back into the closed fundamental domain (outside every open
    /// Schottky disk). Returns the reduced point `p` and the word `w` with `w(p) = z`.
    pub fn reduce_to_fundamental_domain(
        &self,
        z: &RiemannSpherePoint,
        max_steps: usize,
    ) -> Result<(RiemannSpherePoint, GroupWord)> {
        let mut p = *z;
        let mut word = GroupWord::empty();
        let all = letters(self.rank());
        'outer: while let Some(zf) = p.finite() {
            for &l in &all {
                if self.disk(l).contains(zf) {
                    // numerical ping-pong on a boundary: the cancelling letter
                    // would only undo the previous step
                    if word.last() == Some(-l) {
                        break 'outer;
                    }
                    if word.len() >= max_steps {
                        return Err(Error::ReductionDepthExceeded(max_steps));
                    }
                    p = self.letter_map(-l).apply(&p);
                    word.push_unchecked(l);
                    continue 'outer;
                }
            }
            break;
        }
        Ok((p, word))
    }

    pub fn orbit_cloud(&self, base: &RiemannSpherePoint, max_len: usize, cap: usize) -> Result<OrbitCloud> {
        let words = self.enumerate_words(max_len, cap)?;
        Ok(OrbitCloud {
            base: *base,
            points: words.iter().map(|(_, m)| m.apply(base)).collect(),
            max_word_length: max_len,
            rank: self.rank(),
        })
    }

    pub fn in_fundamental_domain(&self, z: &RiemannSpherePoint) -> bool {
        match z.finite() {
            None => true,
            Some(zf) => self.circles().all(|c| !c.contains(zf)),
        }
    }
}

fn verify_pairing(k: usize, g: &MoebiusMap, src: &Circle, dst: &Circle) -> Result<()> {
    let mut worst = 0.0f64;
    for i in 0..32 {
        let th = i as f64 * std::f64::consts::TAU / 32.0;
        let z = src.center + Complex64::from_polar(src.radius, th);
        let residual = match g.apply_finite(z) {
            Some(w) => ((w - dst.center).norm() - dst.radius).abs() / dst.radius,
            None => f64::INFINITY,
        };
        worst = worst.max(residual);
        let outside = src.center + Complex64::from_polar(2.0 * src.radius, th);
        let inside = g.apply_finite(outside).is_some_and(|w| dst.contains(w));
        if !inside {
            worst = f64::INFINITY;
        }
    }
    if worst > PAIRING_TOL {
        return Err(Error::PairingViolated { generator: k, residual: worst });
    }
    Ok(())
}

impl LimitSetSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Chordal distance from `z` to the nearest sample point (brute force).
    pub fn distance_to(&self, z: &RiemannSpherePoint) -> f64 {
        self.points.iter().map(|p| chordal_distance(p, z)).fold(f64::INFINITY, f64::min)
    }
}
