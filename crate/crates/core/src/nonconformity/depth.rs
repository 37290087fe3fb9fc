//! Tukey half-space depth in the plane.

use crate::conformal::{CandidateEngine, DepthEngine};
use crate::error::{check_dim, Error, Result};
use crate::sample::Sample;

use super::NonconformityMeasure;

#[inline]
pub(crate) fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `b` lies in the half-open half-turn `[angle(a), angle(a) + π)`.
#[inline]
pub(crate) fn in_half_turn(a: [f64; 2], b: [f64; 2]) -> bool {
    let c = cross(a, b);
    c > 0.0 || (c == 0.0 && dot(a, b) > 0.0)
}

/// Directions sorted by angle, plus the largest number of them that fit in
/// one open half-plane through the origin, and the starting indices of every
/// window achieving it.
pub(crate) struct AngularSweep {
    pub dirs: Vec<[f64; 2]>,
    pub max_run: usize,
    pub best_starts: Vec<usize>,
}

impl AngularSweep {
    pub(crate) fn new(mut dirs: Vec<[f64; 2]>) -> Self {
        dirs.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
        let k = dirs.len();
        let mut runs = vec![0usize; k];
        let mut end = 0usize;
        for j in 0..k {
            end = end.max(j + 1);
            while end < j + k && in_half_turn(dirs[j], dirs[end % k]) {
                end += 1;
            }
            runs[j] = end - j;
        }
        let max_run = runs.iter().copied().max().unwrap_or(0);
        // a window starting inside a group of equal directions wraps around to
        // the rest of that group, so only group leaders mark window bounds
        let leads = |j: usize| {
            let prev = dirs[(j + k - 1) % k];
            k == 1 || !(cross(prev, dirs[j]) == 0.0 && dot(prev, dirs[j]) > 0.0)
        };
        let mut best_starts: Vec<usize> =
            (0..k).filter(|&j| runs[j] == max_run && leads(j)).collect();
        if best_starts.is_empty() && k > 0 {
            // every direction is the same
            best_starts.push(0);
        }
        AngularSweep {
            dirs,
            max_run,
            best_starts,
        }
    }

    /// Last direction of the maximal window starting at group leader `j`.
    pub(crate) fn window_end(&self, j: usize) -> [f64; 2] {
        self.dirs[(j + self.max_run - 1) % self.dirs.len()]
    }
}

fn as_pair(p: &[f64]) -> Result<[f64; 2]> {
    check_dim(2, p.len())?;
    Ok([p[0], p[1]])
}

/// Smallest number of cloud points in a closed half-plane whose boundary
/// passes through `point`. Cloud points equal to `point` count in every half-plane.
pub fn halfspace_depth_count(point: [f64; 2], cloud: &[&[f64]]) -> Result<usize> {
    if cloud.is_empty() {
        return Err(Error::domain("depth needs a nonempty cloud"));
    }
    let mut dirs = Vec::with_capacity(cloud.len());
    for p in cloud {
        let p = as_pair(p)?;
        let d = [p[0] - point[0], p[1] - point[1]];
        if d != [0.0, 0.0] {
            dirs.push(d);
        }
    }
    Ok(cloud.len() - AngularSweep::new(dirs).max_run)
}

/// Tukey depth as a fraction of the cloud size.
pub fn tukey_depth_2d(point: [f64; 2], cloud: &[&[f64]]) -> Result<f64> {
    Ok(halfspace_depth_count(point, cloud)? as f64 / cloud.len() as f64)
}

/// `½ − depth(point | bag)`.
pub fn depth_measure(bag: &[&[f64]], point: &[f64]) -> Result<f64> {
    Ok(0.5 - tukey_depth_2d(as_pair(point)?, bag)?)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DepthMeasure;

impl NonconformityMeasure for DepthMeasure {
    fn name(&self) -> String {
        "depth2d".into()
    }

    fn dim(&self) -> Option<usize> {
        Some(2)
    }

    fn score(&self, bag: &[&[f64]], point: &[f64]) -> Result<f64> {
        depth_measure(bag, point)
    }

    fn candidate_engine(&self, data: &Sample) -> Option<Result<Box<dyn CandidateEngine>>> {
        Some(DepthEngine::new(data).map(|e| Box::new(e) as Box<dyn CandidateEngine>))
    }
}
