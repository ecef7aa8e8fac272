//! Exact k-nearest-neighbour search over static 3D point sets.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Vec3;

const LEAF_SIZE: usize = 12;

#[derive(Clone, Debug)]
enum Node {
    Leaf { start: u32, end: u32 },
    Split { axis: u8, value: f64, left: u32, right: u32 },
}

/// A balanced kd-tree returning exact neighbours. Ties are broken by lower point index.
#[derive(Clone, Debug)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    indices: Vec<u32>,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    dist2: f64,
    index: u32,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.index.cmp(&other.index))
    }
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut tree = Self {
            points: points.iter().map(|p| [p.x, p.y, p.z]).collect(),
            indices: (0..points.len() as u32).collect(),
            nodes: Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, start: usize, end: usize) -> u32 {
        let id = self.nodes.len() as u32;
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start: start as u32, end: end as u32 });
            return id;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.indices[start..end] {
            let p = self.points[i as usize];
            for d in 0..3 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let axis = (0..3).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap();
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.indices[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a as usize][axis].total_cmp(&points[b as usize][axis]).then(a.cmp(&b))
        });
        let value = self.points[self.indices[mid] as usize][axis];
        self.nodes.push(Node::Split { axis: axis as u8, value, left: 0, right: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[id as usize] {
            *l = left;
            *r = right;
        }
        id
    }

    #[inline]
    fn dist2(&self, i: u32, q: &[f64; 3]) -> f64 {
        let p = self.points[i as usize];
        let (dx, dy, dz) = (p[0] - q[0], p[1] - q[1], p[2] - q[2]);
        dx * dx + dy * dy + dz * dz
    }

    /// Nearest point as `(index, distance)`, `None` for an empty tree.
    pub fn nearest(&self, query: &Vec3) -> Option<(usize, f64)> {
        if self.is_empty() {
            return None;
        }
        let q = [query.x, query.y, query.z];
        let mut best = Candidate { dist2: f64::INFINITY, index: u32::MAX };
        self.nearest_rec(0, &q, &mut best);
        Some((best.index as usize, best.dist2.sqrt()))
    }

    fn nearest_rec(&self, node: u32, q: &[f64; 3], best: &mut Candidate) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &i in &self.indices[start as usize..end as usize] {
                    let c = Candidate { dist2: self.dist2(i, q), index: i };
                    if c < *best {
                        *best = c;
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_rec(near, q, best);
                if diff * diff <= best.dist2 {
                    self.nearest_rec(far, q, best);
                }
            }
        }
    }

    /// The `k` nearest points as `(index, distance)` sorted by ascending distance.
    /// Returns fewer than `k` entries only when the tree holds fewer points.
    pub fn knn(&self, query: &Vec3, k: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(k);
        self.knn_into(query, k, &mut out);
        out
    }

    pub fn knn_into(&self, query: &Vec3, k: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        if k == 0 || self.is_empty() {
            return;
        }
        let q = [query.x, query.y, query.z];
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, &q, k, &mut heap);
        let mut found = heap.into_vec();
        found.sort_unstable();
        out.extend(found.into_iter().map(|c| (c.index as usize, c.dist2.sqrt())));
    }

    fn knn_rec(&self, node: u32, q: &[f64; 3], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &i in &self.indices[start as usize..end as usize] {
                    let c = Candidate { dist2: self.dist2(i, q), index: i };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_rec(near, q, k, heap);
                if heap.len() < k || diff * diff <= heap.peek().unwrap().dist2 {
                    self.knn_rec(far, q, k, heap);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_scan(points: &[Vec3], q: &Vec3, k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = points.iter().enumerate().map(|(i, p)| (i, (p - q).norm())).collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    fn random_points(rng: &mut impl Rng, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let points = random_points(&mut rng, 200);
        let tree = KdTree::new(&points);
        for _ in 0..300 {
            let q = Vec3::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            for k in [1, 3, 5, 17] {
                let got = tree.knn(&q, k);
                let want = linear_scan(&points, &q, k);
                assert_eq!(got.len(), want.len());
                for (g, w) in got.iter().zip(&want) {
                    assert_eq!(g.0, w.0);
                    assert!((g.1 - w.1).abs() < 1e-15);
                }
            }
            let (i, d) = tree.nearest(&q).unwrap();
            assert_eq!(i, linear_scan(&points, &q, 1)[0].0);
            assert!((d - linear_scan(&points, &q, 1)[0].1).abs() < 1e-15);
        }
    }

    #[test]
    fn duplicate_points_break_ties_by_index() {
        let points = vec![Vec3::new(1.0, 0.0, 0.0); 40];
        let tree = KdTree::new(&points);
        let got = tree.knn(&Vec3::zeros(), 3);
        assert_eq!(got.iter().map(|g| g.0).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn empty_tree() {
        let tree = KdTree::new(&[]);
        assert!(tree.nearest(&Vec3::zeros()).is_none());
        assert!(tree.knn(&Vec3::zeros(), 4).is_empty());
    }
}
