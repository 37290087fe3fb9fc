//! Assertions about the next observation: unions of boxes, grid masks and
//! their complements, plus exact interval algebra on the real line.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::grid::Grid;

/// One endpoint of an interval. Infinite endpoints are always open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub closed: bool,
}

impl Bound {
    pub fn closed(value: f64) -> Self {
        Bound {
            value,
            closed: value.is_finite(),
        }
    }

    pub fn open(value: f64) -> Self {
        Bound {
            value,
            closed: false,
        }
    }
}

/// An interval of the extended real line with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Bound,
    pub hi: Bound,
}

impl Interval {
    pub fn new(lo: Bound, hi: Bound) -> Result<Self> {
        if lo.value.is_nan() || hi.value.is_nan() {
            return Err(Error::domain("interval endpoints must not be NaN"));
        }
        if lo.value > hi.value {
            return Err(Error::domain(format!(
                "interval bounds out of order: {} > {}",
                lo.value, hi.value
            )));
        }
        let fix = |b: Bound| Bound {
            value: b.value,
            closed: b.closed && b.value.is_finite(),
        };
        Ok(Interval {
            lo: fix(lo),
            hi: fix(hi),
        })
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Interval::new(Bound::closed(lo), Bound::closed(hi))
    }

    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        Interval::new(Bound::open(lo), Bound::open(hi))
    }

    pub fn real_line() -> Self {
        Interval {
            lo: Bound::open(f64::NEG_INFINITY),
            hi: Bound::open(f64::INFINITY),
        }
    }

    pub fn point(x: f64) -> Result<Self> {
        Interval::closed(x, x)
    }

    pub fn is_empty(&self) -> bool {
        self.lo.value > self.hi.value
            || (self.lo.value == self.hi.value && !(self.lo.closed && self.hi.closed))
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = x > self.lo.value || (self.lo.closed && x == self.lo.value);
        let below = x < self.hi.value || (self.hi.closed && x == self.hi.value);
        above && below
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &Interval) -> bool {
        if self.is_empty() {
            return true;
        }
        let lo_ok = other.lo.value < self.lo.value
            || (other.lo.value == self.lo.value && (other.lo.closed || !self.lo.closed));
        let hi_ok = other.hi.value > self.hi.value
            || (other.hi.value == self.hi.value && (other.hi.closed || !self.hi.closed));
        lo_ok && hi_ok
    }

    pub fn intersection(&self, other: &Interval) -> Interval {
        let lo = match self.lo.value.total_cmp(&other.lo.value) {
            Ordering::Greater => self.lo,
            Ordering::Less => other.lo,
            Ordering::Equal => Bound {
                value: self.lo.value,
                closed: self.lo.closed && other.lo.closed,
            },
        };
        let hi = match self.hi.value.total_cmp(&other.hi.value) {
            Ordering::Less => self.hi,
            Ordering::Greater => other.hi,
            Ordering::Equal => Bound {
                value: self.hi.value,
                closed: self.hi.closed && other.hi.closed,
            },
        };
        Interval { lo, hi }
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        !self.intersection(other).is_empty()
    }

    /// Finite points that lie inside the interval and sit at (or just inside)
    /// its ends. Used to make sure a grid touches every nonempty interval.
    pub fn anchors(&self) -> Vec<f64> {
        if self.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(3);
        if self.lo.value.is_finite() {
            let x = if self.lo.closed {
                self.lo.value
            } else {
                self.lo.value.next_up()
            };
            if self.contains(x) {
                out.push(x);
            }
        }
        if self.hi.value.is_finite() {
            let x = if self.hi.closed {
                self.hi.value
            } else {
                self.hi.value.next_down()
            };
            if self.contains(x) {
                out.push(x);
            }
        }
        if self.lo.value.is_finite() && self.hi.value.is_finite() {
            let mid = 0.5 * (self.lo.value + self.hi.value);
            if self.contains(mid) {
                out.push(mid);
            }
        }
        out
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lo.closed { '[' } else { '(' },
            self.lo.value,
            self.hi.value,
            if self.hi.closed { ']' } else { ')' }
        )
    }
}

/// A finite union of intervals kept as sorted, disjoint, non-touching components.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalSet {
    components: Vec<Interval>,
}

impl IntervalSet {
    pub fn new(intervals: impl IntoIterator<Item = Interval>) -> Self {
        let mut v: Vec<Interval> = intervals.into_iter().filter(|i| !i.is_empty()).collect();
        v.sort_by(|a, b| {
            a.lo.value
                .total_cmp(&b.lo.value)
                .then_with(|| b.lo.closed.cmp(&a.lo.closed))
        });
        let mut out: Vec<Interval> = Vec::with_capacity(v.len());
        for iv in v {
            if let Some(last) = out.last_mut() {
                let joins = last.hi.value > iv.lo.value
                    || (last.hi.value == iv.lo.value && (last.hi.closed || iv.lo.closed));
                if joins {
                    if iv.hi.value > last.hi.value || (iv.hi.value == last.hi.value && iv.hi.closed)
                    {
                        last.hi = iv.hi;
                    }
                    continue;
                }
            }
            out.push(iv);
        }
        IntervalSet { components: out }
    }

    pub fn components(&self) -> &[Interval] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.components.iter().any(|c| c.contains(x))
    }

    pub fn complement(&self) -> IntervalSet {
        let mut out = Vec::with_capacity(self.components.len() + 1);
        let mut lo = Bound::open(f64::NEG_INFINITY);
        for c in &self.components {
            let hi = Bound {
                value: c.lo.value,
                closed: !c.lo.closed && c.lo.value.is_finite(),
            };
            out.push(Interval { lo, hi });
            lo = Bound {
                value: c.hi.value,
                closed: !c.hi.closed && c.hi.value.is_finite(),
            };
        }
        out.push(Interval {
            lo,
            hi: Bound::open(f64::INFINITY),
        });
        IntervalSet::new(out)
    }

    /// Connected `iv` lies inside the union iff it lies inside one component.
    pub fn contains_interval(&self, iv: &Interval) -> bool {
        iv.is_empty() || self.components.iter().any(|c| iv.is_subset_of(c))
    }

    pub fn intersects(&self, iv: &Interval) -> bool {
        self.components.iter().any(|c| c.intersects(iv))
    }
}

/// Axis-aligned box: one interval per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub sides: Vec<Interval>,
}

impl BoxSet {
    pub fn new(sides: Vec<Interval>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::domain("box needs at least one side"));
        }
        Ok(BoxSet { sides })
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        self.sides.iter().zip(point).all(|(s, &x)| s.contains(x))
    }
}

/// A set `A` of possible values of the next observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Assertion {
    /// Finite union of boxes; the empty union is the empty set.
    Boxes {
        dim: usize,
        boxes: Vec<BoxSet>,
    },
    /// Boolean mask over a grid; an arbitrary point belongs to the set when
    /// its nearest grid point does.
    Mask {
        grid: Grid,
        mask: Vec<bool>,
    },
    Complement(Box<Assertion>),
}

impl Assertion {
    pub fn empty(dim: usize) -> Self {
        Assertion::Boxes {
            dim,
            boxes: Vec::new(),
        }
    }

    pub fn everything(dim: usize) -> Self {
        Assertion::Complement(Box::new(Assertion::empty(dim)))
    }

    pub fn boxes(dim: usize, boxes: Vec<BoxSet>) -> Result<Self> {
        for b in &boxes {
            check_dim(dim, b.sides.len())?;
        }
        Ok(Assertion::Boxes { dim, boxes })
    }

    pub fn intervals(intervals: impl IntoIterator<Item = Interval>) -> Self {
        Assertion::Boxes {
            dim: 1,
            boxes: intervals
                .into_iter()
                .map(|iv| BoxSet { sides: vec![iv] })
                .collect(),
        }
    }

    pub fn interval(iv: Interval) -> Self {
        Assertion::intervals([iv])
    }

    pub fn mask(grid: Grid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::domain(format!(
                "mask has {} entries but the grid has {} points",
                mask.len(),
                grid.len()
            )));
        }
        Ok(Assertion::Mask { grid, mask })
    }

    pub fn complement(&self) -> Assertion {
        match self {
            Assertion::Complement(inner) => (**inner).clone(),
            other => Assertion::Complement(Box::new(other.clone())),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Assertion::Boxes { dim, .. } => *dim,
            Assertion::Mask { grid, .. } => grid.dim(),
            Assertion::Complement(inner) => inner.dim(),
        }
    }

    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        check_dim(self.dim(), point.len())?;
        Ok(match self {
            Assertion::Boxes { boxes, .. } => boxes.iter().any(|b| b.contains(point)),
            Assertion::Mask { grid, mask } => mask[grid.nearest_index(point)?],
            Assertion::Complement(inner) => !inner.contains(point)?,
        })
    }

    /// Membership of every point of `grid`.
    pub fn mask_on(&self, grid: &Grid) -> Result<Vec<bool>> {
        check_dim(self.dim(), grid.dim())?;
        if let Assertion::Mask { grid: own, mask } = self {
            if own == grid {
                return Ok(mask.clone());
            }
        }
        grid.points().map(|p| self.contains(p)).collect()
    }

    /// Exact interval-union form of a one-dimensional box assertion.
    pub fn to_interval_set(&self) -> Result<IntervalSet> {
        check_dim(1, self.dim())?;
        match self {
            Assertion::Boxes { boxes, .. } => {
                Ok(IntervalSet::new(boxes.iter().map(|b| b.sides[0])))
            }
            Assertion::Complement(inner) => Ok(inner.to_interval_set()?.complement()),
            Assertion::Mask { .. } => Err(Error::domain(
                "grid-mask assertions have no exact interval form",
            )),
        }
    }

    /// Points just inside every component of a one-dimensional assertion.
    pub fn anchors(&self) -> Vec<f64> {
        match self.to_interval_set() {
            Ok(set) => set
                .components()
                .iter()
                .flat_map(Interval::anchors)
                .collect(),
            Err(_) => Vec::new(),
        }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::Boxes { boxes, .. } if boxes.is_empty() => write!(f, "empty"),
            Assertion::Boxes { boxes, .. } => {
                let parts: Vec<String> = boxes
                    .iter()
                    .map(|b| {
                        b.sides
                            .iter()
                            .map(Interval::to_string)
                            .collect::<Vec<_>>()
                            .join("x")
                    })
                    .collect();
                write!(f, "{}", parts.join("|"))
            }
            Assertion::Mask { mask, .. } => {
                write!(
                    f,
                    "mask({} of {})",
                    mask.iter().filter(|&&m| m).count(),
                    mask.len()
                )
            }
            Assertion::Complement(inner) => match &**inner {
                Assertion::Boxes { boxes, .. } if boxes.is_empty() => write!(f, "all"),
                other => write!(f, "not({other})"),
            },
        }
    }
}

fn parse_number(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" | "Inf" => Ok(f64::INFINITY),
        "-inf" | "-Inf" => Ok(f64::NEG_INFINITY),
        t => t
            .parse::<f64>()
            .map_err(|_| Error::parse(format!("not a number: {t:?}"))),
    }
}

fn parse_interval(s: &str) -> Result<Interval> {
    let s = s.trim();
    let (open_lo, rest) = match s.chars().next() {
        Some('[') => (false, &s[1..]),
        Some('(') => (true, &s[1..]),
        _ => {
            return Err(Error::parse(format!(
                "interval must start with [ or (: {s:?}"
            )))
        }
    };
    let (open_hi, body) = match rest.chars().last() {
        Some(']') => (false, &rest[..rest.len() - 1]),
        Some(')') => (true, &rest[..rest.len() - 1]),
        _ => {
            return Err(Error::parse(format!(
                "interval must end with ] or ): {s:?}"
            )))
        }
    };
    let (a, b) = body
        .split_once(',')
        .ok_or_else(|| Error::parse(format!("interval needs two endpoints: {s:?}")))?;
    let (lo, hi) = (parse_number(a)?, parse_number(b)?);
    let lo = if open_lo {
        Bound::open(lo)
    } else {
        Bound::closed(lo)
    };
    let hi = if open_hi {
        Bound::open(hi)
    } else {
        Bound::closed(hi)
    };
    Interval::new(lo, hi)
}

/// Parses `all`, `empty`, `box:LO,HI[,LO,HI...]` (closed boxes) or interval
/// notation such as `[0,1)|(2,inf)` with `x` joining the axes of a box and
/// `|` joining union members. A leading `not:` complements.
impl FromStr for Assertion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("not:") {
            return Ok(rest.parse::<Assertion>()?.complement());
        }
        match s {
            "all" => return Ok(Assertion::everything(1)),
            "empty" => return Ok(Assertion::empty(1)),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("box:") {
            let nums = rest
                .split(',')
                .map(parse_number)
                .collect::<Result<Vec<_>>>()?;
            if nums.is_empty() || nums.len() % 2 != 0 {
                return Err(Error::parse("box: needs LO,HI pairs"));
            }
            let sides = nums
                .chunks_exact(2)
                .map(|c| Interval::closed(c[0], c[1]))
                .collect::<Result<Vec<_>>>()?;
            let dim = sides.len();
            return Assertion::boxes(dim, vec![BoxSet::new(sides)?]);
        }
        let boxes = s
            .split('|')
            .map(|member| {
                member
                    .split('x')
                    .map(parse_interval)
                    .collect::<Result<Vec<_>>>()
                    .and_then(BoxSet::new)
            })
            .collect::<Result<Vec<_>>>()?;
        let dim = boxes[0].sides.len();
        Assertion::boxes(dim, boxes)
    }
}
