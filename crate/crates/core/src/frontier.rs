//! Pareto frontiers of achievable regions.
//!
//! A region is a down-set, so it is stored as its upper boundary only: a list
//! of rate pairs sorted by increasing `r1` with strictly decreasing `r2`.
//! Between stored points the boundary is the straight segment joining them
//! (time sharing); left of the first point it is flat and right of the last
//! point the region ends.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{Provenance, RatePair};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frontier {
    points: Vec<RatePair>,
}

/// Total order used to break ties between equal rate pairs: lower sequence
/// number first, then the rest of the provenance.
fn tie_order(a: &Provenance, b: &Provenance) -> Ordering {
    a.seq
        .cmp(&b.seq)
        .then_with(|| a.scheme.as_str().cmp(b.scheme.as_str()))
        .then_with(|| a.vertex.cmp(&b.vertex))
        .then_with(|| {
            for (x, y) in a.params.iter().zip(&b.params) {
                match x.total_cmp(y) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            a.params.len().cmp(&b.params.len())
        })
}

impl Frontier {
    pub fn new() -> Self {
        Frontier::default()
    }

    /// Pareto frontier of any collection of points. The result does not
    /// depend on the order of the input.
    pub fn from_points(points: impl IntoIterator<Item = RatePair>) -> Self {
        let mut all: Vec<RatePair> = points.into_iter().collect();
        all.sort_by(|a, b| {
            b.r1.total_cmp(&a.r1)
                .then_with(|| b.r2.total_cmp(&a.r2))
                .then_with(|| tie_order(&a.provenance, &b.provenance))
        });
        let mut kept: Vec<RatePair> = Vec::new();
        let mut best_r2 = f64::NEG_INFINITY;
        for p in all {
            if p.r2 > best_r2 {
                best_r2 = p.r2;
                kept.push(p);
            }
        }
        kept.reverse();
        Frontier { points: kept }
    }

    pub fn points(&self) -> &[RatePair] {
        &self.points
    }

    pub fn into_points(self) -> Vec<RatePair> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Adds a point. Returns whether it was kept.
    pub fn insert(&mut self, p: RatePair) -> bool {
        let pts = &mut self.points;
        let idx = pts.partition_point(|q| q.r1 < p.r1);
        if let Some(q) = pts.get(idx) {
            if q.r2 >= p.r2 {
                let tie = q.r1 == p.r1 && q.r2 == p.r2;
                if tie && tie_order(&p.provenance, &q.provenance) == Ordering::Less {
                    pts[idx] = p;
                    return true;
                }
                return false;
            }
            if q.r1 == p.r1 {
                pts.remove(idx);
            }
        }
        let mut start = idx;
        while start > 0 && pts[start - 1].r2 <= p.r2 {
            start -= 1;
        }
        pts.splice(start..idx, std::iter::once(p));
        true
    }

    /// Union of two regions.
    pub fn merge(&self, other: &Frontier) -> Frontier {
        Frontier::from_points(self.points.iter().chain(&other.points).cloned())
    }

    /// Boundary of the convex hull of the region: the concave chain from the
    /// highest point to the rightmost one. Collinear interior points are
    /// dropped.
    pub fn convex_hull(&self) -> Result<Frontier> {
        if self.points.is_empty() {
            return Err(Error::Empty("frontier"));
        }
        let mut hull: Vec<RatePair> = Vec::with_capacity(self.points.len());
        for p in &self.points {
            while hull.len() >= 2 {
                let o = &hull[hull.len() - 2];
                let a = &hull[hull.len() - 1];
                let cross = (a.r1 - o.r1) * (p.r2 - o.r2) - (a.r2 - o.r2) * (p.r1 - o.r1);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p.clone());
        }
        Ok(Frontier { points: hull })
    }

    pub fn max_r1(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.r1)
    }

    pub fn max_r2(&self) -> f64 {
        self.points.first().map_or(0.0, |p| p.r2)
    }

    /// Largest `r2` on the boundary at abscissa `r1`, or `None` past the
    /// region's right edge.
    pub fn upper(&self, r1: f64) -> Option<f64> {
        let pts = &self.points;
        let last = pts.last()?;
        if r1 > last.r1 {
            return None;
        }
        let i = pts.partition_point(|q| q.r1 < r1);
        let q = &pts[i];
        if i == 0 || q.r1 == r1 {
            return Some(q.r2);
        }
        let o = &pts[i - 1];
        Some(o.r2 + (q.r2 - o.r2) * (r1 - o.r1) / (q.r1 - o.r1))
    }

    /// Largest `r1` on the boundary with `r2 ≥ r2_min`; 0 when no point
    /// reaches `r2_min`.
    pub fn corner_query(&self, r2_min: f64) -> f64 {
        let pts = &self.points;
        if pts.is_empty() || r2_min > pts[0].r2 {
            return 0.0;
        }
        let i = pts.partition_point(|q| q.r2 >= r2_min) - 1;
        let o = &pts[i];
        match pts.get(i + 1) {
            None => o.r1,
            Some(q) => o.r1 + (q.r1 - o.r1) * (o.r2 - r2_min) / (o.r2 - q.r2),
        }
    }

    /// Largest `r2` on the boundary with `r1 ≥ r1_min`; 0 when no point
    /// reaches `r1_min`.
    pub fn corner_query_r2(&self, r1_min: f64) -> f64 {
        self.upper(r1_min.max(0.0)).unwrap_or(0.0)
    }

    /// Whether `(r1, r2)` lies in the region.
    pub fn contains(&self, r1: f64, r2: f64) -> bool {
        self.upper(r1).is_some_and(|u| r2 <= u)
    }

    /// Smallest `t` such that `p − (t, t)` lies in the region. Negative for
    /// interior points.
    pub fn excess(&self, p: &RatePair) -> f64 {
        if self.points.is_empty() {
            return f64::INFINITY;
        }
        let inside = |t: f64| self.contains(p.r1 - t, p.r2 - t);
        let mut lo = (p.r1 - self.max_r1()).min(p.r2 - self.max_r2()) - 1.0;
        let mut hi = p.r1.max(p.r2).max(lo + 1.0);
        while !inside(hi) {
            hi += (hi - lo).max(1.0);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if inside(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if hi > 0.0 && inside(0.0) {
            return 0.0;
        }
        hi
    }

    /// Horizontal and vertical distance from `p` to the boundary; both
    /// positive exactly when `p` lies outside the region.
    pub fn coordinate_excess(&self, p: &RatePair) -> (f64, f64) {
        let h = if p.r2 > self.max_r2() { p.r1 } else { p.r1 - self.corner_query(p.r2) };
        let v = if p.r1 > self.max_r1() { p.r2 } else { p.r2 - self.corner_query_r2(p.r1) };
        (h, v)
    }

    /// Whether every point of `other` lies in this region after moving it
    /// down-left by `slack` in both coordinates.
    pub fn dominates(&self, other: &Frontier, slack: f64) -> bool {
        other.points.iter().all(|p| self.contains(p.r1 - slack, p.r2 - slack))
    }

    /// Point of `other` farthest outside this region, with its excess.
    pub fn max_violation<'a>(&self, other: &'a Frontier) -> Option<(&'a RatePair, f64)> {
        other.points.iter().map(|p| (p, self.excess(p))).max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Point of `other` strictly outside this region, with the largest
    /// margin `t` such that `p − (t, t)` is still outside. `None` when every
    /// point of `other` lies inside.
    pub fn strictness_witness<'a>(&self, other: &'a Frontier) -> Option<(&'a RatePair, f64)> {
        self.max_violation(other).filter(|&(_, t)| t > 0.0)
    }
}

impl FromIterator<RatePair> for Frontier {
    fn from_iter<I: IntoIterator<Item = RatePair>>(iter: I) -> Self {
        Frontier::from_points(iter)
    }
}

/// Maximal vertices of `{r1, r2 ≥ 0 : a·r1 + b·r2 ≤ c for all (a, b, c)}`
/// with nonnegative `a`, `b`, sorted by `r1`. Empty if the region is empty.
pub fn down_set_vertices(constraints: &[(f64, f64, f64)]) -> Vec<(f64, f64)> {
    let mut lines: Vec<(f64, f64, f64)> = vec![(1.0, 0.0, 0.0), (0.0, 1.0, 0.0)];
    lines.extend_from_slice(constraints);
    let feasible = |x: f64, y: f64| {
        x >= 0.0 && y >= 0.0 && constraints.iter().all(|&(a, b, c)| a * x + b * y <= c + 1e-12 * c.abs().max(1.0))
    };
    let mut cand: Vec<(f64, f64)> = Vec::new();
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (a1, b1, c1) = lines[i];
            let (a2, b2, c2) = lines[j];
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-300 {
                continue;
            }
            let x = ((c1 * b2 - c2 * b1) / det).max(0.0);
            let y = ((a1 * c2 - a2 * c1) / det).max(0.0);
            if feasible(x, y) {
                cand.push((x, y));
            }
        }
    }
    cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for (x, y) in cand {
        let tol = 1e-12 * y.abs().max(1.0);
        if y > best + tol {
            best = y;
            out.push((x, y));
        }
    }
    out.reverse();
    out
}
