//! Grid evaluation of the half-space-depth transducer.
//!
//! Adding a candidate `ỹ` to the data changes the depth count of data point
//! `y_i` by at most one: it goes from `e_i` (depth among the other data) to
//! `e_i + 1` unless `ỹ` can join one of the largest groups of other points
//! that fit in an open half-plane through `y_i`. Those groups are found once,
//! so each candidate costs one depth sweep plus a few arc tests.

use crate::error::{check_dim, Error, Result};
use crate::nonconformity::depth::{cross, dot, AngularSweep};
use crate::nonconformity::halfspace_depth_count;
use crate::sample::Sample;

use super::{CandidateEngine, TransducerResult};

/// Closed counter-clockwise arc from `from` to `to`, spanning less than a half turn.
#[derive(Debug, Clone, Copy)]
struct Arc {
    from: [f64; 2],
    to: [f64; 2],
}

impl Arc {
    fn contains(&self, w: [f64; 2]) -> bool {
        let a = cross(self.from, w);
        let b = cross(w, self.to);
        a >= 0.0
            && b >= 0.0
            && !(a == 0.0 && dot(self.from, w) < 0.0)
            && !(b == 0.0 && dot(w, self.to) < 0.0)
    }
}

#[derive(Debug, Clone)]
struct Anchor {
    point: [f64; 2],
    /// Depth count among the other data points.
    depth: usize,
    /// Directions from which the candidate can NOT join a largest open
    /// half-plane group; one arc per such group. Empty `blocked` with
    /// `lonely` set means there are no other distinct points.
    blocked: Vec<Arc>,
    lonely: bool,
}

impl Anchor {
    /// Whether the candidate at direction `w` from this point lowers its
    /// depth count by joining a maximal excluded group.
    fn joins_group(&self, w: [f64; 2]) -> bool {
        if w == [0.0, 0.0] {
            return false;
        }
        self.lonely || self.blocked.iter().any(|arc| !arc.contains(w))
    }
}

/// Precomputed state for evaluating the depth transducer at many candidates.
#[derive(Debug, Clone)]
pub struct DepthEngine {
    data: Vec<[f64; 2]>,
    anchors: Vec<Anchor>,
    /// `by_depth[k]`: anchors with depth `k`.
    by_depth: Vec<Vec<usize>>,
    /// `at_most[k] = #{i : depth_i ≤ k}`.
    at_most: Vec<usize>,
    hull: Vec<[f64; 2]>,
}

impl DepthEngine {
    pub fn new(data: &Sample) -> Result<Self> {
        check_dim(2, data.dim())?;
        let pts: Vec<[f64; 2]> = data.points().map(|p| [p[0], p[1]]).collect();
        let n = pts.len();
        let anchors: Vec<Anchor> = pts
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let dirs: Vec<[f64; 2]> = pts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, q)| [q[0] - p[0], q[1] - p[1]])
                    .filter(|d| *d != [0.0, 0.0])
                    .collect();
                let lonely = dirs.is_empty();
                let sweep = AngularSweep::new(dirs);
                let blocked = sweep
                    .best_starts
                    .iter()
                    .map(|&j| {
                        let first = sweep.dirs[j];
                        let last = sweep.window_end(j);
                        Arc {
                            from: [-first[0], -first[1]],
                            to: [-last[0], -last[1]],
                        }
                    })
                    .collect();
                Anchor {
                    point: p,
                    depth: n - 1 - sweep.max_run,
                    blocked,
                    lonely,
                }
            })
            .collect();
        let mut by_depth = vec![Vec::new(); n + 1];
        for (i, a) in anchors.iter().enumerate() {
            by_depth[a.depth].push(i);
        }
        let mut at_most = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for group in &by_depth {
            acc += group.len();
            at_most.push(acc);
        }
        Ok(DepthEngine {
            hull: convex_hull(&pts),
            data: pts,
            anchors,
            by_depth,
            at_most,
        })
    }

    fn strictly_outside_hull(&self, q: [f64; 2]) -> bool {
        let h = &self.hull;
        if h.len() < 3 {
            return false;
        }
        (0..h.len()).any(|k| {
            let a = h[k];
            let b = h[(k + 1) % h.len()];
            let e = [b[0] - a[0], b[1] - a[1]];
            let v = [q[0] - a[0], q[1] - a[1]];
            let scale = e[0].abs() + e[1].abs();
            cross(e, v) < -1e-9 * scale * (scale + v[0].abs() + v[1].abs())
        })
    }

    /// Depth count of `q` among the data.
    fn depth_of(&self, q: [f64; 2]) -> Result<usize> {
        if self.strictly_outside_hull(q) {
            return Ok(0);
        }
        let refs: Vec<&[f64]> = self.data.iter().map(|p| &p[..]).collect();
        halfspace_depth_count(q, &refs)
    }
}

impl CandidateEngine for DepthEngine {
    fn transduce(&self, candidate: &[f64]) -> Result<TransducerResult> {
        check_dim(2, candidate.len())?;
        let q = [candidate[0], candidate[1]];
        if !(q[0].is_finite() && q[1].is_finite()) {
            return Err(Error::domain("candidate must be finite"));
        }
        let n = self.data.len();
        let d = self.depth_of(q)?;
        let joins = |i: usize| {
            let a = &self.anchors[i];
            a.joins_group([q[0] - a.point[0], q[1] - a.point[1]])
        };
        // depth_i + [not joined] <= d  <=>  T_i >= T_{n+1}
        let mut count = 1;
        let mut tie_count = 1;
        if d >= 1 {
            count += self.at_most[(d - 1).min(n)];
            if let Some(group) = self.by_depth.get(d - 1) {
                tie_count += group.iter().filter(|&&i| !joins(i)).count();
            }
        }
        if let Some(group) = self.by_depth.get(d) {
            let joined = group.iter().filter(|&&i| joins(i)).count();
            count += joined;
            tie_count += joined;
        }
        Ok(TransducerResult {
            count,
            n,
            tie_count,
        })
    }
}

/// Counter-clockwise hull without collinear vertices.
fn convex_hull(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = pts.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let turn = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        cross([a[0] - o[0], a[1] - o[1]], [b[0] - o[0], b[1] - o[1]])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for &pt in iter {
            while hull.len() >= start + 2
                && turn(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0.0
            {
                hull.pop();
            }
            hull.push(pt);
        }
        hull.pop();
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_and_edge_points() {
        let pts = [
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.5, 0.5],
            [0.5, 0.0],
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        let data = Sample::from_points(&pts).unwrap();
        let e = DepthEngine::new(&data).unwrap();
        assert!(e.strictly_outside_hull([2.0, 0.5]));
        assert!(!e.strictly_outside_hull([1.0, 0.5]));
        assert!(!e.strictly_outside_hull([0.5, 0.5]));
    }

    #[test]
    fn arc_membership_is_closed() {
        let arc = Arc {
            from: [1.0, 0.0],
            to: [0.0, 1.0],
        };
        assert!(arc.contains([1.0, 0.0]));
        assert!(arc.contains([1.0, 1.0]));
        assert!(arc.contains([0.0, 2.0]));
        assert!(!arc.contains([-1.0, 0.0]));
        assert!(!arc.contains([1.0, -0.1]));
        let ray = Arc {
            from: [1.0, 1.0],
            to: [2.0, 2.0],
        };
        assert!(ray.contains([3.0, 3.0]));
        assert!(!ray.contains([-1.0, -1.0]));
    }
}
