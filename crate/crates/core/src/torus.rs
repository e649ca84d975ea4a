//! Linear foliations of the 3-torus.
//!
//! A direction is given symbolically: each component is a finite sum of
//! rational multiples of square roots of square-free integers. Square roots of
//! distinct square-free integers are linearly independent over the rationals,
//! so the rational rank of the components is the rank of their coordinate
//! vectors in the basis `{sqrt(d)}`, computed exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of independent square roots a direction may involve.
pub const MAX_SQUARE_ROOTS: usize = 3;

/// `sum_d c_d sqrt(d)` with `d` square-free and every `c_d` nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Component {
    terms: BTreeMap<u64, BigRational>,
}

impl Component {
    pub fn zero() -> Self {
        Component::default()
    }

    /// `(p / q) sqrt(d)` in canonical form.
    pub fn new(p: i64, q: i64, d: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::ParseDirection(format!("{p}/{q}*sqrt({d})")));
        }
        let mut c = Component::zero();
        c.add_term(BigRational::new(p.into(), q.into()), d);
        Ok(c)
    }

    fn add_term(&mut self, coeff: BigRational, d: u64) {
        if d == 0 || coeff.is_zero() {
            return;
        }
        let (square, free) = split_square(d);
        let coeff = coeff * BigRational::from_integer(BigInt::from(square));
        let entry = self.terms.entry(free).or_insert_with(BigRational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&free);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `(square-free d, coefficient)` pairs in increasing `d`.
    pub fn terms(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.terms.iter().map(|(d, c)| (*d, c))
    }

    pub fn to_f64(&self) -> f64 {
        self.terms.iter().map(|(d, c)| c.to_f64().unwrap_or(f64::NAN) * (*d as f64).sqrt()).sum()
    }
}

/// `d = s^2 * f` with `f` square-free.
fn split_square(mut d: u64) -> (u64, u64) {
    let (mut square, mut free) = (1, 1);
    let mut p = 2;
    while p * p <= d {
        let mut k = 0;
        while d.is_multiple_of(p) {
            d /= p;
            k += 1;
        }
        square *= p.pow(k / 2);
        if k % 2 == 1 {
            free *= p;
        }
        p += 1;
    }
    (square, free * d)
}

fn prime_factors(mut d: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= d {
        if d.is_multiple_of(p) {
            out.push(p);
            while d.is_multiple_of(p) {
                d /= p;
            }
        }
        p += 1;
    }
    if d > 1 {
        out.push(d);
    }
    out
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (d, c)) in self.terms.iter().enumerate() {
            if i > 0 && !c.is_negative() {
                f.write_str("+")?;
            }
            if *d == 1 {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}*sqrt({d})")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Component {
    type Err = Error;

    /// Terms `[+-] p[/q] [* sqrt(d)]` or `[+-] sqrt(d)`, joined by `+`/`-`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ParseDirection(s.to_string());
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if text.is_empty() {
            return Err(bad());
        }
        let mut terms = Vec::new();
        let mut current = String::new();
        let mut depth = 0;
        for ch in text.chars() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                '+' | '-' if depth == 0 && !current.is_empty() && !current.ends_with(['*', '/']) => {
                    terms.push(std::mem::take(&mut current));
                }
                _ => {}
            }
            current.push(ch);
        }
        terms.push(current);

        let mut out = Component::zero();
        for term in terms {
            let (negative, body) = match term.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, term.strip_prefix('+').unwrap_or(&term)),
            };
            let (coeff_text, radicand) = if let Some(r) = body.strip_prefix("sqrt(") {
                ("1", r)
            } else if let Some((c, r)) = body.split_once("*sqrt(") {
                (c, r)
            } else {
                (body, "1)")
            };
            let d: u64 = radicand.strip_suffix(')').and_then(|r| r.parse().ok()).ok_or_else(bad)?;
            let coeff = parse_rational(coeff_text).ok_or_else(bad)?;
            out.add_term(if negative { -coeff } else { coeff }, d);
        }
        Ok(out)
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.parse::<BigInt>().ok()?, q.parse::<BigInt>().ok()?),
        None => (s.parse::<BigInt>().ok()?, BigInt::one()),
    };
    if q.is_zero() || p.is_negative() || q.is_negative() {
        return None;
    }
    Some(BigRational::new(p, q))
}

/// Direction of a linear flow on the 3-torus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraicDirection {
    components: [Component; 3],
}

impl AlgebraicDirection {
    pub fn new(components: [Component; 3]) -> Result<Self> {
        if components.iter().all(Component::is_zero) {
            return Err(Error::Precondition("direction must be nonzero".into()));
        }
        let radicands: Vec<u64> = components.iter().flat_map(|c| c.terms().map(|(d, _)| d)).collect();
        let independent = square_root_rank(&radicands);
        if independent > MAX_SQUARE_ROOTS {
            return Err(Error::UnsupportedField(format!(
                "components involve {independent} independent square roots, at most {MAX_SQUARE_ROOTS} are supported"
            )));
        }
        Ok(AlgebraicDirection { components })
    }

    pub fn components(&self) -> &[Component; 3] {
        &self.components
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.components[i].to_f64())
    }

    /// Dimension of the rational span of the three components.
    pub fn rational_rank(&self) -> usize {
        let basis: Vec<u64> = {
            let mut ds: Vec<u64> = self.components.iter().flat_map(|c| c.terms().map(|(d, _)| d)).collect();
            ds.sort_unstable();
            ds.dedup();
            ds
        };
        let mut rows: Vec<Vec<BigRational>> = self
            .components
            .iter()
            .map(|c| basis.iter().map(|d| c.terms.get(d).cloned().unwrap_or_else(BigRational::zero)).collect())
            .collect();
        row_rank(&mut rows)
    }
}

/// Number of independent square roots among `sqrt(d)`: the rank over GF(2)
/// of the prime-exponent parity vectors of the radicands.
fn square_root_rank(radicands: &[u64]) -> usize {
    let mut primes: Vec<u64> = radicands.iter().filter(|&&d| d > 1).flat_map(|&d| prime_factors(d)).collect();
    primes.sort_unstable();
    primes.dedup();
    let mut rows: Vec<Vec<bool>> = radicands
        .iter()
        .filter(|&&d| d > 1)
        .map(|&d| {
            let f = prime_factors(d);
            primes.iter().map(|p| f.contains(p)).collect()
        })
        .collect();
    let mut rank = 0;
    for col in 0..primes.len() {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][col]) else { continue };
        rows.swap(rank, pivot);
        for r in 0..rows.len() {
            if r != rank && rows[r][col] {
                let pivot_row = rows[rank].clone();
                rows[r].iter_mut().zip(pivot_row).for_each(|(a, b)| *a ^= b);
            }
        }
        rank += 1;
    }
    rank
}

fn row_rank(rows: &mut [Vec<BigRational>]) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else { continue };
        rows.swap(rank, pivot);
        let (head, tail) = rows.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        for row in tail.iter_mut().filter(|row| !row[col].is_zero()) {
            let factor = &row[col] / &pivot_row[col];
            for (x, y) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= &factor * y;
            }
        }
        rank += 1;
    }
    rank
}

impl fmt::Display for AlgebraicDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = &self.components;
        write!(f, "({a},{b},{c})")
    }
}

impl FromStr for AlgebraicDirection {
    type Err = Error;

    /// Three comma-separated components, optionally in parentheses.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim();
        let inner = inner.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(inner);
        let mut parts = Vec::new();
        let (mut depth, mut start) = (0, 0);
        for (i, ch) in inner.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' if depth == 0 => {
                    parts.push(&inner[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        parts.push(&inner[start..]);
        if parts.len() != 3 {
            return Err(Error::ParseDirection(s.to_string()));
        }
        let components = [parts[0].parse()?, parts[1].parse()?, parts[2].parse()?];
        AlgebraicDirection::new(components)
    }
}

impl Serialize for AlgebraicDirection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AlgebraicDirection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentType {
    Wandering,
    SemiWandering,
    Dense,
}

impl fmt::Display for ComponentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComponentType::Wandering => "wandering",
            ComponentType::SemiWandering => "semi_wandering",
            ComponentType::Dense => "dense",
        })
    }
}

/// Rank 1: closed leaves; rank 2: leaf closures are 2-tori; rank 3: dense leaves.
pub fn classify_slope(v: &AlgebraicDirection) -> ComponentType {
    match v.rational_rank() {
        1 => ComponentType::Wandering,
        2 => ComponentType::SemiWandering,
        _ => ComponentType::Dense,
    }
}

/// Fraction of the `grid^3` cells crossed by the leaf `t * v mod 1`,
/// `0 <= t <= t_max`, through the origin.
///
/// Cells are traversed exactly: the next cell boundary along each axis is at
/// `t = k / (grid |v_i|)` for an integer `k`, so no crossing is skipped. At a
/// simultaneous crossing all axes advance together. The starting cell is the
/// one the leaf occupies for small `t > 0`.
pub fn sample_leaf_closure(v: &AlgebraicDirection, t_max: f64, grid: usize) -> Result<f64> {
    if grid < 8 {
        return Err(Error::Precondition("grid must be at least 8".into()));
    }
    if !(t_max >= 0.0) {
        return Err(Error::Precondition("t_max must be nonnegative".into()));
    }
    let g = grid as i64;
    let rate = v.to_f64().map(|x| x * grid as f64);
    // unwrapped cell coordinates and crossings made along each axis
    let mut cell = rate.map(|r| if r < 0.0 { -1i64 } else { 0 });
    let mut crossings = [0u64; 3];
    let next_time = |axis: usize, k: u64| {
        if rate[axis] == 0.0 {
            f64::INFINITY
        } else {
            (k + 1) as f64 / rate[axis].abs()
        }
    };
    let mut visited = vec![false; grid * grid * grid];
    let mut count = 0usize;
    loop {
        let idx = cell.map(|c| c.rem_euclid(g) as usize);
        let slot = (idx[0] * grid + idx[1]) * grid + idx[2];
        if !visited[slot] {
            visited[slot] = true;
            count += 1;
            if count == visited.len() {
                break;
            }
        }
        let times = [0, 1, 2].map(|a| next_time(a, crossings[a]));
        let t = times.iter().copied().fold(f64::INFINITY, f64::min);
        if t > t_max {
            break;
        }
        for a in 0..3 {
            if times[a] == t {
                cell[a] += rate[a].signum() as i64;
                crossings[a] += 1;
            }
        }
    }
    Ok(count as f64 / visited.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dir(s: &str) -> AlgebraicDirection {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_canonicalize() {
        let c: Component = "6/4*sqrt(8)".parse().unwrap();
        assert_eq!(c, Component::new(3, 1, 2).unwrap());
        assert_eq!(c.to_string(), "3*sqrt(2)");
        assert_eq!("-sqrt(12)".parse::<Component>().unwrap().to_string(), "-2*sqrt(3)");
        assert_eq!("1+sqrt(2)-1".parse::<Component>().unwrap().to_string(), "1*sqrt(2)");
        assert_eq!("sqrt(0)".parse::<Component>().unwrap(), Component::zero());
        assert!("sqrt(x)".parse::<Component>().is_err());
        assert!("1/0".parse::<Component>().is_err());
        assert_eq!(dir("(1, sqrt(2), 0)").to_string(), "(1,1*sqrt(2),0)");
        assert!("(0,0,0)".parse::<AlgebraicDirection>().is_err());
        assert!("(1,2)".parse::<AlgebraicDirection>().is_err());
    }

    #[test]
    fn trichotomy() {
        assert_eq!(classify_slope(&dir("(1,0,0)")), ComponentType::Wandering);
        assert_eq!(classify_slope(&dir("(1,sqrt(2),0)")), ComponentType::SemiWandering);
        assert_eq!(classify_slope(&dir("(1,sqrt(2),sqrt(3))")), ComponentType::Dense);
        assert_eq!(classify_slope(&dir("(1,2,3/7)")), ComponentType::Wandering);
        assert_eq!(classify_slope(&dir("(sqrt(2),sqrt(8),0)")), ComponentType::Wandering);
        assert_eq!(classify_slope(&dir("(1,sqrt(2),1+sqrt(2))")), ComponentType::SemiWandering);
        assert_eq!(classify_slope(&dir("(sqrt(6),sqrt(2),sqrt(3))")), ComponentType::Dense);
    }

    #[test]
    fn too_many_square_roots() {
        let err = "(sqrt(2)+sqrt(7),sqrt(3),sqrt(5))".parse::<AlgebraicDirection>().unwrap_err();
        assert!(matches!(err, Error::UnsupportedField(_)));
        // sqrt(6) lies in Q(sqrt 2, sqrt 3)
        assert!("(sqrt(2)+sqrt(6),sqrt(3),1)".parse::<AlgebraicDirection>().is_ok());
    }

    #[test]
    fn axis_line_occupancy_is_exact() {
        let v = dir("(1,0,0)");
        assert_eq!(sample_leaf_closure(&v, 1.0, 16).unwrap(), 1.0 / 256.0);
        assert_eq!(sample_leaf_closure(&v, 50.0, 16).unwrap(), 1.0 / 256.0);
        assert_eq!(sample_leaf_closure(&dir("(0,0,-3)"), 10.0, 8).unwrap(), 1.0 / 64.0);
        assert!(sample_leaf_closure(&v, 1.0, 4).is_err());
    }

    #[test]
    fn rational_diagonal_is_closed() {
        // crossings happen at lattice corners: one cell per step
        assert_eq!(sample_leaf_closure(&dir("(1,1,0)"), 100.0, 16).unwrap(), 16.0 / 4096.0);
        assert_eq!(sample_leaf_closure(&dir("(1,2,0)"), 100.0, 16).unwrap(), 32.0 / 4096.0);
    }

    #[test]
    fn occupancy_examples() {
        let semi = sample_leaf_closure(&dir("(1,sqrt(2),0)"), 1e4, 16).unwrap();
        assert!((semi * 16.0 - 1.0).abs() < 0.02, "{semi}");
        let dense = sample_leaf_closure(&dir("(1,sqrt(2),sqrt(3))"), 1e5, 16).unwrap();
        assert!(dense >= 0.99, "{dense}");
    }

    proptest! {
        #[test]
        fn rank_is_invariant_under_scaling_and_permutation(
            p in 1i64..50, q in 1i64..50, negate in any::<bool>(),
            perm in 0usize..6, pick in 0usize..4,
        ) {
            let bases = [["1", "0", "0"], ["1", "sqrt(2)", "0"], ["1", "sqrt(2)", "sqrt(3)"], ["sqrt(5)", "2*sqrt(5)", "sqrt(3)"]];
            let base = bases[pick];
            let v = dir(&format!("({},{},{})", base[0], base[1], base[2]));
            let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let scale = BigRational::new(p.into(), q.into()) * if negate { -BigRational::one() } else { BigRational::one() };
            let comps = orders[perm].map(|i| {
                let mut c = Component::zero();
                for (d, coeff) in v.components()[i].terms() {
                    c.add_term(coeff * &scale, d);
                }
                c
            });
            let w = AlgebraicDirection::new(comps).unwrap();
            prop_assert_eq!(classify_slope(&w), classify_slope(&v));
        }

        #[test]
        fn occupancy_nondecreasing_in_time(t in 0.0f64..200.0, extra in 0.0f64..200.0) {
            let v = dir("(1,sqrt(2),sqrt(3))");
            let a = sample_leaf_closure(&v, t, 8).unwrap();
            let b = sample_leaf_closure(&v, t + extra, 8).unwrap();
            prop_assert!(a <= b);
        }
    }
}
