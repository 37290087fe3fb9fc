//! Candidate grids for evaluating plausibility contours.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::sample::Sample;

/// Absolute half-width used for an axis along which the data have zero range.
pub const DEGENERATE_AXIS_PAD: f64 = 1.0;

/// One axis of a tensor-product grid: `count` equally spaced points on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::domain("axis bounds must be finite"));
        }
        if count == 0 {
            return Err(Error::domain("axis needs at least one point"));
        }
        if count == 1 && lo != hi || count > 1 && lo >= hi {
            return Err(Error::domain(format!(
                "axis [{lo}, {hi}] with {count} points is not strictly increasing"
            )));
        }
        Ok(Axis { lo, hi, count })
    }

    pub fn step(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.hi - self.lo) / (self.count - 1) as f64
        }
    }

    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.count {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / (self.count - 1).max(1) as f64
        }
    }

    fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.value(k)).collect()
    }

    /// Nearest index with exact midpoints going to the lower index.
    fn nearest(&self, x: f64) -> usize {
        if self.count == 1 || x <= self.lo {
            return 0;
        }
        if x >= self.hi {
            return self.count - 1;
        }
        let below = (((x - self.lo) / self.step()).floor() as usize).min(self.count - 2);
        // guard the float division against landing one cell off
        let mut k = below;
        while k > 0 && self.value(k) > x {
            k -= 1;
        }
        while k + 2 < self.count && self.value(k + 1) <= x {
            k += 1;
        }
        let (a, b) = (self.value(k), self.value(k + 1));
        if x - a <= b - x {
            k
        } else {
            k + 1
        }
    }
}

/// An ordered, duplicate-free list of candidate points.
///
/// One-dimensional grids are strictly increasing. Grids built from axes are
/// tensor products with the first axis varying slowest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    coords: Vec<f64>,
    axes: Option<Vec<Axis>>,
}

impl Grid {
    pub fn from_axes(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::domain("grid needs at least one axis"));
        }
        let dim = axes.len();
        let per_axis: Vec<Vec<f64>> = axes.iter().map(Axis::values).collect();
        let total: usize = axes.iter().map(|a| a.count).product();
        let mut coords = Vec::with_capacity(total * dim);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            for (a, &k) in idx.iter().enumerate() {
                coords.push(per_axis[a][k]);
            }
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < axes[a].count {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(Grid {
            dim,
            coords,
            axes: Some(axes),
        })
    }

    /// An arbitrary point list. One-dimensional lists must be strictly increasing.
    pub fn from_points(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::domain("grid must be a nonempty list of points"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("grid coordinates must be finite"));
        }
        if dim == 1 {
            if coords.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::domain(
                    "one-dimensional grid must be strictly increasing",
                ));
            }
        } else {
            let mut rows: Vec<&[f64]> = coords.chunks_exact(dim).collect();
            rows.sort_by(|a, b| {
                a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            if rows.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::domain("grid contains duplicate points"));
            }
        }
        Ok(Grid {
            dim,
            coords,
            axes: None,
        })
    }

    /// Like [`Grid::from_points`], but recognizes a uniform tensor-product
    /// layout (as written by [`Grid::from_axes`]) and restores its axes.
    pub fn from_rows(dim: usize, coords: Vec<f64>) -> Result<Self> {
        let free = Grid::from_points(dim, coords)?;
        match free.infer_axes() {
            Some(axes) => {
                let tensor = Grid::from_axes(axes)?;
                Ok(if tensor.coords == free.coords {
                    tensor
                } else {
                    free
                })
            }
            None => Ok(free),
        }
    }

    fn infer_axes(&self) -> Option<Vec<Axis>> {
        let mut axes = Vec::with_capacity(self.dim);
        for a in 0..self.dim {
            let mut vals: Vec<f64> = self.points().map(|p| p[a]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let axis = Axis::new(vals[0], *vals.last()?, vals.len()).ok()?;
            if vals.iter().enumerate().any(|(k, &v)| axis.value(k) != v) {
                return None;
            }
            axes.push(axis);
        }
        let total: usize = axes.iter().map(|a| a.count).product();
        (total == self.len()).then_some(axes)
    }

    /// Sorts, deduplicates and wraps a list of scalars.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        Grid::from_points(1, v)
    }

    /// A one-dimensional grid with additional points merged in.
    pub fn with_extra_points(&self, extra: &[f64]) -> Result<Self> {
        check_dim(1, self.dim)?;
        let mut v = self.coords.clone();
        v.extend(extra.iter().copied().filter(|x| x.is_finite()));
        Grid::from_scalars(&v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn axes(&self) -> Option<&[Axis]> {
        self.axes.as_deref()
    }

    /// Area (volume) represented by one point of a uniform tensor grid.
    pub fn cell_volume(&self) -> Option<f64> {
        self.axes
            .as_ref()
            .map(|axes| axes.iter().map(Axis::step).product())
    }

    /// Index of the grid point nearest to `point`; exact ties resolve to the
    /// lower index.
    pub fn nearest_index(&self, point: &[f64]) -> Result<usize> {
        check_dim(self.dim, point.len())?;
        if let Some(axes) = &self.axes {
            let mut index = 0;
            for (axis, &x) in axes.iter().zip(point) {
                index = index * axis.count + axis.nearest(x);
            }
            return Ok(index);
        }
        if self.dim == 1 {
            let x = point[0];
            let v = &self.coords;
            let upper = v.partition_point(|&g| g < x);
            if upper == 0 {
                return Ok(0);
            }
            if upper == v.len() {
                return Ok(v.len() - 1);
            }
            return Ok(if x - v[upper - 1] <= v[upper] - x {
                upper - 1
            } else {
                upper
            });
        }
        let mut best = (0, f64::INFINITY);
        for (i, g) in self.points().enumerate() {
            let d2: f64 = g.iter().zip(point).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        Ok(best.0)
    }

    /// Position of `point` in the grid when it is exactly a grid point.
    pub fn index_of(&self, point: &[f64]) -> Option<usize> {
        let i = self.nearest_index(point).ok()?;
        (self.point(i) == point).then_some(i)
    }
}

/// Grids are equal when they list the same points in the same order.
impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.coords == other.coords
    }
}

/// Uniform tensor grid over the data range, padded by `padding_fraction` of
/// the range on each side.
pub fn build_grid(data: &Sample, padding_fraction: f64, points_per_axis: usize) -> Result<Grid> {
    if !(padding_fraction >= 0.0 && padding_fraction.is_finite()) {
        return Err(Error::domain(
            "padding fraction must be finite and nonnegative",
        ));
    }
    if points_per_axis < 2 {
        return Err(Error::domain("at least two points per axis are required"));
    }
    let axes = data
        .bounds()
        .into_iter()
        .map(|(lo, hi)| {
            let range = hi - lo;
            let (lo, hi) = if range > 0.0 {
                (lo - padding_fraction * range, hi + padding_fraction * range)
            } else {
                (lo - DEGENERATE_AXIS_PAD, hi + DEGENERATE_AXIS_PAD)
            };
            Axis::new(lo, hi, points_per_axis)
        })
        .collect::<Result<Vec<_>>>()?;
    Grid::from_axes(axes)
}

/// How to lay out a grid: `auto[:POINTS[:PADDING]]` spans the data, while
/// `LO:HI:COUNT[,LO:HI:COUNT...]` gives explicit axes.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Auto {
        points_per_axis: usize,
        padding: f64,
    },
    Axes(Vec<Axis>),
}

const DEFAULT_POINTS: usize = 400;
const DEFAULT_PADDING: f64 = 0.25;

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto {
            points_per_axis: DEFAULT_POINTS,
            padding: DEFAULT_PADDING,
        }
    }
}

impl GridSpec {
    pub fn resolve(&self, data: &Sample) -> Result<Grid> {
        match self {
            GridSpec::Auto {
                points_per_axis,
                padding,
            } => build_grid(data, *padding, *points_per_axis),
            GridSpec::Axes(axes) => {
                check_dim(data.dim(), axes.len())?;
                Grid::from_axes(axes.clone())
            }
        }
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridSpec::Auto {
                points_per_axis,
                padding,
            } => write!(f, "auto:{points_per_axis}:{padding}"),
            GridSpec::Axes(axes) => {
                let parts: Vec<String> = axes
                    .iter()
                    .map(|a| format!("{}:{}:{}", a.lo, a.hi, a.count))
                    .collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |what: &str| Error::parse(format!("bad {what} in grid spec {s:?}"));
        if let Some(rest) = s.strip_prefix("auto") {
            let (mut points_per_axis, mut padding) = (DEFAULT_POINTS, DEFAULT_PADDING);
            let opts: Vec<&str> = match rest.strip_prefix(':') {
                Some(o) => o.split(':').collect(),
                None if rest.is_empty() => Vec::new(),
                None => return Err(bad("auto options")),
            };
            if opts.len() > 2 {
                return Err(bad("auto options"));
            }
            if let Some(p) = opts.first() {
                points_per_axis = p.parse().map_err(|_| bad("point count"))?;
            }
            if let Some(p) = opts.get(1) {
                padding = p.parse().map_err(|_| bad("padding"))?;
            }
            return Ok(GridSpec::Auto {
                points_per_axis,
                padding,
            });
        }
        let axes = s
            .split(',')
            .map(|axis| {
                let f: Vec<&str> = axis.split(':').collect();
                if f.len() != 3 {
                    return Err(bad("axis (expected LO:HI:COUNT)"));
                }
                Axis::new(
                    f[0].trim().parse().map_err(|_| bad("lower bound"))?,
                    f[1].trim().parse().map_err(|_| bad("upper bound"))?,
                    f[2].trim().parse().map_err(|_| bad("count"))?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GridSpec::Axes(axes))
    }
}
