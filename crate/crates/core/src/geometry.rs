//! Inter-branch distance between straight branch segments.
//!
//! `branch_distance` averages the four point-to-segment distances between the
//! endpoints of one branch and the other branch. It is non-negative,
//! symmetric and zero only for coincident segments, but it does not satisfy
//! the triangle inequality, so it is a semi-metric.

use std::collections::HashMap;

use crate::grid::{BranchId, GridCase};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub p1: Point,
    pub p2: Point,
}

impl Segment {
    pub fn new(p1: Point, p2: Point) -> Self {
        Segment { p1, p2 }
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Shortest Euclidean distance from `v` to segment `u`.
pub fn point_segment_distance(v: Point, u: &Segment) -> f64 {
    let m = sub(u.p2, u.p1);
    let len2 = m[0] * m[0] + m[1] * m[1];
    if len2 == 0.0 {
        return norm(sub(v, u.p1));
    }
    let w = sub(v, u.p1);
    let t = (w[0] * m[0] + w[1] * m[1]) / len2;
    if t <= 0.0 {
        norm(w)
    } else if t >= 1.0 {
        norm(sub(v, u.p2))
    } else {
        norm([w[0] - t * m[0], w[1] - t * m[1]])
    }
}

/// Mean of the four endpoint-to-segment distances between `u` and `v`, km.
pub fn branch_distance(u: &Segment, v: &Segment) -> f64 {
    (point_segment_distance(u.p1, v)
        + point_segment_distance(u.p2, v)
        + point_segment_distance(v.p1, u)
        + point_segment_distance(v.p2, u))
        / 4.0
}

/// Symmetric matrix of pairwise branch distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub ids: Vec<BranchId>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }
}

/// Pairwise distances between the listed branches.
pub fn distance_matrix(case: &GridCase, branch_ids: &[BranchId]) -> crate::Result<DistanceMatrix> {
    let idx = case.branch_indices(branch_ids)?;
    let segs: Vec<Segment> = idx.iter().map(|&i| case.branch_segment(i)).collect();
    let n = segs.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = branch_distance(&segs[i], &segs[j]);
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix {
        ids: branch_ids.to_vec(),
        values,
    })
}

/// Lazily filled distance cache keyed by dense branch-index pairs.
#[derive(Debug, Default)]
pub struct DistanceCache {
    inner: std::sync::RwLock<HashMap<(usize, usize), f64>>,
}

impl DistanceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn distance(&self, case: &GridCase, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let key = (a.min(b), a.max(b));
        if let Some(&d) = self.inner.read().expect("cache lock").get(&key) {
            return d;
        }
        let d = branch_distance(&case.branch_segment(key.0), &case.branch_segment(key.1));
        self.inner.write().expect("cache lock").insert(key, d);
        d
    }
}
