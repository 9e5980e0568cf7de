//! Planar point geometry, pairwise distances, and an exact k-nearest-neighbor
//! index.
//!
//! Coordinates are projected planar units (e.g. UTM meters); all distances are
//! Euclidean. The index is a kd-tree whose queries are exact: results always
//! equal a brute-force scan, with distance ties broken by the smaller point id
//! so downstream consumers stay deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the projected plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    /// Builds a point, rejecting NaN/infinite coordinates.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "coordinates must be finite, got ({x}, {y})"
            )));
        }
        Ok(Self { x, y })
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &Point2) -> f64 {
        self.distance_sq(other).sqrt()
    }

    /// Squared Euclidean distance (avoids the sqrt when comparing).
    pub fn distance_sq(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Sample locations with one scalar observation per location.
///
/// Point ids are the positional indices `0..len`. Duplicate coordinates are
/// allowed but flagged; the kriging solver decides what to do with them.
#[derive(Debug, Clone)]
pub struct PointSet {
    points: Vec<Point2>,
    values: Vec<f64>,
    has_duplicates: bool,
}

impl PointSet {
    /// Builds a point set, validating lengths and finiteness.
    pub fn new(points: Vec<Point2>, values: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter(
                "point set must contain at least one point".into(),
            ));
        }
        if points.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: points.len(),
                right: values.len(),
                context: "points vs values",
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "value at index {i} is not finite"
            )));
        }
        let has_duplicates = detect_duplicates(&points);
        Ok(Self {
            points,
            values,
            has_duplicates,
        })
    }

    /// Convenience constructor from `(x, y)` tuples.
    pub fn from_xy(coords: &[(f64, f64)], values: Vec<f64>) -> Result<Self> {
        let points = coords
            .iter()
            .map(|&(x, y)| Point2::new(x, y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points, values)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when two points share exactly the same coordinates.
    pub fn has_duplicate_coordinates(&self) -> bool {
        self.has_duplicates
    }

    /// New point set holding the rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let points = indices.iter().map(|&i| self.points[i]).collect();
        let values = indices.iter().map(|&i| self.values[i]).collect();
        Self::new(points, values)
    }

    /// Replaces the values, keeping the geometry.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.points.clone(), values)
    }
}

fn detect_duplicates(points: &[Point2]) -> bool {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        points[a]
            .x
            .total_cmp(&points[b].x)
            .then(points[a].y.total_cmp(&points[b].y))
    });
    order.windows(2).any(|w| {
        let (p, q) = (points[w[0]], points[w[1]]);
        p.x == q.x && p.y == q.y
    })
}

/// Full symmetric matrix of Euclidean distances.
///
/// The diagonal is exactly zero.
pub fn pairwise_distances(ps: &PointSet) -> DMatrix<f64> {
    let n = ps.len();
    let pts = ps.points();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = pts[i].distance(&pts[j]);
            m[(i, j)] = d;
            m[(j, i)] = d;
        }
    }
    m
}

/// Exact k-nearest-neighbor index over a point set's coordinates.
///
/// Immutable after construction; concurrent read queries are safe.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    points: Vec<Point2>,
    nodes: Vec<KdNode>,
    root: Option<usize>,
}

#[derive(Debug, Clone)]
struct KdNode {
    point: usize,
    axis: u8,
    left: Option<usize>,
    right: Option<usize>,
}

/// Max-heap entry: worst candidate (largest distance, then largest id) on top.
#[derive(Debug, PartialEq)]
struct HeapEntry {
    dist_sq: f64,
    id: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KnnIndex {
    /// Builds the index over the coordinates of `ps`.
    pub fn build(ps: &PointSet) -> Self {
        let points = ps.points().to_vec();
        let mut ids: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(points.len());
        let root = build_node(&points, &mut ids[..], 0, &mut nodes);
        Self {
            points,
            nodes,
            root,
        }
    }

    /// Number of indexed points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `min(k, n)` nearest indexed points to `q`, ascending by distance.
    ///
    /// Ties on distance are broken by the smaller point id.
    pub fn knn_query(&self, q: Point2, k: usize) -> Vec<(usize, f64)> {
        assert!(k >= 1, "k must be at least 1");
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(k + 1);
        if let Some(root) = self.root {
            self.search(root, q, k, &mut heap);
        }
        let mut out: Vec<(usize, f64)> = heap
            .into_iter()
            .map(|e| (e.id, e.dist_sq.sqrt()))
            .collect();
        out.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }

    fn search(&self, node_idx: usize, q: Point2, k: usize, heap: &mut BinaryHeap<HeapEntry>) {
        let node = &self.nodes[node_idx];
        let p = self.points[node.point];
        let d_sq = q.distance_sq(&p);
        let candidate = HeapEntry {
            dist_sq: d_sq,
            id: node.point,
        };
        if heap.len() < k {
            heap.push(candidate);
        } else if candidate < *heap.peek().expect("non-empty heap") {
            heap.pop();
            heap.push(candidate);
        }

        let (q_coord, p_coord) = if node.axis == 0 {
            (q.x, p.x)
        } else {
            (q.y, p.y)
        };
        let (near, far) = if q_coord <= p_coord {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if let Some(n) = near {
            self.search(n, q, k, heap);
        }
        if let Some(f) = far {
            let axis_gap = q_coord - p_coord;
            let axis_gap_sq = axis_gap * axis_gap;
            // Visit the far side on ties too: an equidistant point with a
            // smaller id may live there.
            let worst = heap.peek().map(|e| e.dist_sq).unwrap_or(f64::INFINITY);
            if heap.len() < k || axis_gap_sq <= worst {
                self.search(f, q, k, heap);
            }
        }
    }
}

fn build_node(
    points: &[Point2],
    ids: &mut [usize],
    depth: usize,
    nodes: &mut Vec<KdNode>,
) -> Option<usize> {
    if ids.is_empty() {
        return None;
    }
    let axis = (depth % 2) as u8;
    let mid = ids.len() / 2;
    ids.select_nth_unstable_by(mid, |&a, &b| {
        let (ca, cb) = if axis == 0 {
            (points[a].x, points[b].x)
        } else {
            (points[a].y, points[b].y)
        };
        ca.total_cmp(&cb).then(a.cmp(&b))
    });
    let point = ids[mid];
    let (left_ids, rest) = ids.split_at_mut(mid);
    let right_ids = &mut rest[1..];
    let left = build_node(points, left_ids, depth + 1, nodes);
    let right = build_node(points, right_ids, depth + 1, nodes);
    nodes.push(KdNode {
        point,
        axis,
        left,
        right,
    });
    Some(nodes.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64) -> Point2 {
        Point2::new(x, y).unwrap()
    }

    /// Brute-force oracle with the same tie rule as the index.
    fn brute_knn(points: &[Point2], q: Point2, k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, q.distance(p)))
            .collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    #[test]
    fn point_rejects_non_finite() {
        assert!(Point2::new(f64::NAN, 0.0).is_err());
        assert!(Point2::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn pointset_validates_lengths_and_values() {
        assert!(PointSet::from_xy(&[], vec![]).is_err());
        assert!(PointSet::from_xy(&[(0.0, 0.0)], vec![1.0, 2.0]).is_err());
        assert!(PointSet::from_xy(&[(0.0, 0.0)], vec![f64::NAN]).is_err());
    }

    #[test]
    fn pointset_flags_duplicates() {
        let ps = PointSet::from_xy(&[(1.0, 2.0), (1.0, 2.0), (3.0, 4.0)], vec![1.0, 2.0, 3.0])
            .unwrap();
        assert!(ps.has_duplicate_coordinates());
        let ps = PointSet::from_xy(&[(1.0, 2.0), (1.0, 2.1)], vec![1.0, 2.0]).unwrap();
        assert!(!ps.has_duplicate_coordinates());
    }

    #[test]
    fn pairwise_345_triangle() {
        let ps = PointSet::from_xy(&[(0.0, 0.0), (3.0, 4.0)], vec![0.0, 0.0]).unwrap();
        let d = pairwise_distances(&ps);
        assert_eq!(d[(0, 1)], 5.0);
        assert_eq!(d[(1, 0)], 5.0);
        assert_eq!(d[(0, 0)], 0.0);
        assert_eq!(d[(1, 1)], 0.0);
    }

    #[test]
    fn pairwise_single_point() {
        let ps = PointSet::from_xy(&[(2.0, 2.0)], vec![1.0]).unwrap();
        let d = pairwise_distances(&ps);
        assert_eq!(d.nrows(), 1);
        assert_eq!(d[(0, 0)], 0.0);
    }

    #[test]
    fn pairwise_collinear() {
        let ps = PointSet::from_xy(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], vec![0.0; 3]).unwrap();
        let d = pairwise_distances(&ps);
        assert_eq!(d[(0, 1)], 1.0);
        assert_eq!(d[(1, 2)], 1.0);
        assert_eq!(d[(0, 2)], 2.0);
    }

    #[test]
    fn knn_at_indexed_location() {
        let ps = PointSet::from_xy(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], vec![0.0; 3]).unwrap();
        let idx = KnnIndex::build(&ps);
        let res = idx.knn_query(pt(1.0, 0.0), 1);
        assert_eq!(res, vec![(1, 0.0)]);
    }

    #[test]
    fn knn_nearest_two() {
        let ps = PointSet::from_xy(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], vec![0.0; 3]).unwrap();
        let idx = KnnIndex::build(&ps);
        let res = idx.knn_query(pt(0.9, 0.0), 2);
        assert_eq!(res[0].0, 1);
        assert!((res[0].1 - 0.1).abs() < 1e-12);
        assert_eq!(res[1].0, 0);
        assert!((res[1].1 - 0.9).abs() < 1e-12);
    }

    #[test]
    fn knn_tie_goes_to_lower_id() {
        let ps = PointSet::from_xy(&[(1.0, 0.0), (-1.0, 0.0)], vec![0.0; 2]).unwrap();
        let idx = KnnIndex::build(&ps);
        let res = idx.knn_query(pt(0.0, 0.0), 1);
        assert_eq!(res, vec![(0, 1.0)]);
    }

    #[test]
    fn knn_k_larger_than_n_returns_all() {
        let ps = PointSet::from_xy(&[(0.0, 0.0), (1.0, 1.0)], vec![0.0; 2]).unwrap();
        let idx = KnnIndex::build(&ps);
        let res = idx.knn_query(pt(5.0, 5.0), 10);
        assert_eq!(res.len(), 2);
    }

    proptest! {
        #[test]
        fn knn_matches_brute_force(
            coords in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..120),
            qx in -120.0f64..120.0,
            qy in -120.0f64..120.0,
            k in 1usize..15,
        ) {
            let n = coords.len();
            let ps = PointSet::from_xy(&coords, vec![0.0; n]).unwrap();
            let idx = KnnIndex::build(&ps);
            let got = idx.knn_query(pt(qx, qy), k);
            let want = brute_knn(ps.points(), pt(qx, qy), k);
            prop_assert_eq!(got, want);
        }

        #[test]
        fn knn_exact_on_gridded_ties(
            k in 1usize..10,
            qx in 0usize..4,
            qy in 0usize..4,
        ) {
            // Integer grid forces many exact distance ties.
            let mut coords = Vec::new();
            for x in 0..4 {
                for y in 0..4 {
                    coords.push((x as f64, y as f64));
                }
            }
            let ps = PointSet::from_xy(&coords, vec![0.0; coords.len()]).unwrap();
            let idx = KnnIndex::build(&ps);
            let q = pt(qx as f64, qy as f64);
            prop_assert_eq!(idx.knn_query(q, k), brute_knn(ps.points(), q, k));
        }

        #[test]
        fn triangle_inequality(
            coords in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..40),
        ) {
            let n = coords.len();
            let ps = PointSet::from_xy(&coords, vec![0.0; n]).unwrap();
            let d = pairwise_distances(&ps);
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((d[(i, j)] - d[(j, i)]).abs() == 0.0);
                    for l in 0..n {
                        prop_assert!(d[(i, j)] <= d[(i, l)] + d[(l, j)] + 1e-9);
                    }
                }
            }
        }
    }
}
