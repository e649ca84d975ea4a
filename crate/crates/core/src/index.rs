//! Nearest-neighbour queries on the unit sphere (chordal = Euclidean in R^3).

use crate::sphere::{dist3, RiemannSpherePoint, Vec3};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
struct Node {
    center: Vec3,
    radius: f64,
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

/// Ball tree over a fixed point set.
#[derive(Debug, Clone)]
pub struct PointIndex {
    points: Vec<Vec3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl PointIndex {
    pub fn new(points: &[RiemannSpherePoint]) -> Self {
        Self::from_vectors(points.iter().map(|p| p.to_unit_vector()).collect())
    }

    pub fn from_vectors(points: Vec<Vec3>) -> Self {
        let mut index = PointIndex { order: (0..points.len()).collect(), points, nodes: Vec::new() };
        if !index.points.is_empty() {
            index.build(0, index.points.len());
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> Vec3 {
        self.points[i]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let slice = &self.order[start..end];
        let mut center = [0.0; 3];
        for &i in slice {
            for (c, x) in center.iter_mut().zip(self.points[i]) {
                *c += x;
            }
        }
        let n = slice.len() as f64;
        center.iter_mut().for_each(|c| *c /= n);
        let radius = slice.iter().map(|&i| dist3(&center, &self.points[i])).fold(0.0, f64::max);

        let id = self.nodes.len();
        self.nodes.push(Node { center, radius, start, end, children: None });
        if end - start > LEAF_SIZE {
            let axis = (0..3)
                .max_by(|&a, &b| {
                    let spread = |ax: usize| {
                        let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                            (lo.min(self.points[i][ax]), hi.max(self.points[i][ax]))
                        });
                        hi - lo
                    };
                    spread(a).total_cmp(&spread(b))
                })
                .unwrap_or(0);
            let mid = (end - start) / 2;
            let points = &self.points;
            self.order[start..end].select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
            let left = self.build(start, start + mid);
            let right = self.build(start + mid, end);
            self.nodes[id].children = Some((left, right));
        }
        id
    }

    /// Nearest point and its chordal distance.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        self.nearest_within(q, f64::INFINITY)
    }

    /// Nearest point at distance `<= bound`, if any.
    pub fn nearest_within(&self, q: &Vec3, bound: f64) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut limit = bound;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let lower = dist3(q, &node.center) - node.radius;
            if lower > limit {
                continue;
            }
            match node.children {
                None => {
                    for &i in &self.order[node.start..node.end] {
                        let d = dist3(q, &self.points[i]);
                        // ties resolve to the lowest index for determinism
                        let better = match best {
                            None => d <= limit,
                            Some((bi, bd)) => d < bd || (d == bd && i < bi),
                        };
                        if better {
                            best = Some((i, d));
                            limit = d;
                        }
                    }
                }
                Some((l, r)) => {
                    let dl = dist3(q, &self.nodes[l].center) - self.nodes[l].radius;
                    let dr = dist3(q, &self.nodes[r].center) - self.nodes[r].radius;
                    if dl < dr {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{GaussianSource, RngStream};
    use crate::sphere::normalize;

    fn random_unit(r: &mut RngStream) -> Vec3 {
        let (a, b) = r.gaussian_pair();
        let (c, _) = r.gaussian_pair();
        normalize([a, b, c])
    }

    #[test]
    fn matches_brute_force() {
        let mut r = RngStream::new(11, 0);
        let pts: Vec<Vec3> = (0..777).map(|_| random_unit(&mut r)).collect();
        let index = PointIndex::from_vectors(pts.clone());
        for _ in 0..500 {
            let q = random_unit(&mut r);
            let (bi, bd) =
                pts.iter().enumerate().map(|(i, p)| (i, dist3(&q, p))).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
            let (i, d) = index.nearest(&q).unwrap();
            assert_eq!(i, bi);
            assert_eq!(d, bd);
            assert_eq!(index.nearest_within(&q, bd * 0.999), None);
            assert_eq!(index.nearest_within(&q, bd).map(|x| x.0), Some(bi));
        }
    }

    #[test]
    fn empty_index() {
        let index = PointIndex::from_vectors(Vec::new());
        assert!(index.nearest(&[0.0, 0.0, 1.0]).is_none());
    }
}
