//! Nested random sets on the rank space `{1, ..., n+1}` and the plausibility
//! contours they induce: the lower family `{1..Ṽ}`, its randomized version,
//! the two-sided family, and the singleton family behind the NPI bounds.

use serde::{Deserialize, Serialize};

use crate::assertion::{Assertion, Bound, Interval};
use crate::conformal::{check_weight, transduce_grid, transducer, TransducerResult};
use crate::contour::PlausibilityContour;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::level::corrected_steps;
use crate::nonconformity::{NonconformityMeasure, RegionFamily};
use crate::sample::Sample;

/// Ascending rank of `T_{n+1}` among `T_1, ..., T_{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankAssociation {
    pub n: usize,
    /// `1 + #{i : T_i < T_{n+1}}`, the smallest rank in the tie group.
    pub rank: usize,
    /// Size of the tie group, `T_{n+1}` included.
    pub ties: usize,
}

impl RankAssociation {
    pub fn from_transducer(r: &TransducerResult) -> Self {
        RankAssociation {
            n: r.n,
            rank: r.n + 2 - r.count,
            ties: r.tie_count,
        }
    }

    /// Largest rank in the tie group.
    pub fn max_rank(&self) -> usize {
        self.rank + self.ties - 1
    }
}

/// Which rank of its tie group `T_{n+1}` takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankTies {
    /// Smallest rank: the lower family then reproduces the `≥` count.
    #[default]
    Min,
    /// Largest rank: the lower family then counts `1 + #{T_i > T_{n+1}}`.
    Max,
}

impl std::str::FromStr for RankTies {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(RankTies::Min),
            "max" => Ok(RankTies::Max),
            other => Err(Error::parse(format!(
                "unknown tie rule {other:?}; expected min or max"
            ))),
        }
    }
}

impl RankAssociation {
    pub fn rank_under(&self, ties: RankTies) -> usize {
        match ties {
            RankTies::Min => self.rank,
            RankTies::Max => self.max_rank(),
        }
    }
}

pub fn rank(
    data: &Sample,
    measure: &dyn NonconformityMeasure,
    candidate: &[f64],
) -> Result<RankAssociation> {
    Ok(RankAssociation::from_transducer(&transducer(
        data, measure, candidate,
    )?))
}

/// Contiguous rank set `{lo, ..., hi}`; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankSet {
    pub lo: usize,
    pub hi: usize,
}

impl RankSet {
    pub fn new(lo: usize, hi: usize) -> Self {
        RankSet { lo, hi }
    }

    pub fn empty() -> Self {
        RankSet { lo: 1, hi: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            self.hi - self.lo + 1
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_subset_of(&self, other: &RankSet) -> bool {
        self.is_empty() || (other.lo <= self.lo && self.hi <= other.hi)
    }
}

/// One outcome of a random set together with its probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub probability: f64,
    pub set: RankSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// `{1, ..., Ṽ}`.
    Lower,
    /// `{1, ..., Ṽ}` with probability `w`, else `{1, ..., Ṽ − 1}` (empty when `Ṽ = 1`).
    Randomized { w: f64 },
    /// Ranks within `⌈(Ṽ−1)/2⌉` of the centre `⌈(n+2)/2⌉`.
    TwoSided,
    /// `{Ṽ}`. Not nested.
    Singleton,
}

/// A random subset of `{1, ..., n+1}` driven by `Ṽ ~ Unif{1, ..., n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedRandomSetFamily {
    pub kind: FamilyKind,
    pub n: usize,
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::domain("sample size must be at least 1"))
    } else {
        Ok(())
    }
}

impl NestedRandomSetFamily {
    pub fn lower(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(NestedRandomSetFamily {
            kind: FamilyKind::Lower,
            n,
        })
    }

    /// The randomized family realizes the empty set with probability
    /// `(1 − w)/(n + 1)`; callers must opt in with `allow_empty`.
    pub fn randomized(n: usize, w: f64, allow_empty: bool) -> Result<Self> {
        check_n(n)?;
        check_weight(w)?;
        if !allow_empty {
            return Err(Error::contract(
                "the randomized family can realize the empty set; pass allow_empty to use it",
            ));
        }
        Ok(NestedRandomSetFamily {
            kind: FamilyKind::Randomized { w },
            n,
        })
    }

    pub fn two_sided(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(NestedRandomSetFamily {
            kind: FamilyKind::TwoSided,
            n,
        })
    }

    pub fn singleton(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(NestedRandomSetFamily {
            kind: FamilyKind::Singleton,
            n,
        })
    }

    fn size(&self) -> usize {
        self.n + 1
    }

    fn check_rank(&self, v: usize) -> Result<()> {
        if (1..=self.size()).contains(&v) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "rank {v} is outside 1..={}",
                self.size()
            )))
        }
    }

    /// Realized set for `Ṽ = v`; `larger` picks between the two randomized
    /// outcomes and is ignored by the other kinds.
    pub fn realization(&self, v: usize, larger: bool) -> Result<RankSet> {
        self.check_rank(v)?;
        let m = self.size();
        Ok(match self.kind {
            FamilyKind::Lower => RankSet::new(1, v),
            FamilyKind::Randomized { .. } if larger => RankSet::new(1, v),
            FamilyKind::Randomized { .. } => RankSet::new(1, v - 1),
            FamilyKind::TwoSided => {
                let centre = (self.n + 3) / 2;
                let radius = v / 2;
                RankSet::new(
                    centre.saturating_sub(radius).max(1),
                    (centre + radius).min(m),
                )
            }
            FamilyKind::Singleton => RankSet::new(v, v),
        })
    }

    /// Every outcome with its probability.
    pub fn realizations(&self) -> Vec<Realization> {
        let p = 1.0 / self.size() as f64;
        let mut out = Vec::new();
        for v in 1..=self.size() {
            match self.kind {
                FamilyKind::Randomized { w } => {
                    for (larger, q) in [(true, w), (false, 1.0 - w)] {
                        if q > 0.0 {
                            out.push(Realization {
                                probability: p * q,
                                set: self.realization(v, larger).expect("rank in range"),
                            });
                        }
                    }
                }
                _ => out.push(Realization {
                    probability: p,
                    set: self.realization(v, true).expect("rank in range"),
                }),
            }
        }
        out
    }

    /// Whether every pair of realizations is ordered by inclusion.
    pub fn is_nested(&self) -> bool {
        let sets: Vec<RankSet> = self.realizations().iter().map(|r| r.set).collect();
        sets.iter()
            .all(|a| sets.iter().all(|b| a.is_subset_of(b) || b.is_subset_of(a)))
    }

    /// `(n + 1) γ(v)`: the expected number of `Ṽ` values whose realization contains `v`.
    pub fn hit_weight(&self, v: usize) -> Result<f64> {
        self.check_rank(v)?;
        let m = self.size();
        Ok(match self.kind {
            FamilyKind::Lower => (m + 1 - v) as f64,
            FamilyKind::Randomized { w } => (m - v) as f64 + w,
            FamilyKind::Singleton => 1.0,
            FamilyKind::TwoSided => (1..=m)
                .filter(|&k| {
                    self.realization(k, true)
                        .expect("rank in range")
                        .contains(v)
                })
                .count() as f64,
        })
    }

    /// `γ(v) = P(S ∋ v)`.
    pub fn contour_gamma(&self, v: usize) -> Result<f64> {
        Ok(self.hit_weight(v)? / self.size() as f64)
    }

    /// `P_V{γ(V) ≤ k_n(α)}` for `V` uniform on the ranks.
    pub fn validity_probability(&self, alpha: f64) -> Result<f64> {
        let weights = (1..=self.size())
            .map(|v| self.hit_weight(v))
            .collect::<Result<Vec<_>>>()?;
        validity_probability(self.n, &weights, alpha)
    }
}

/// `P_V{γ(V) ≤ k_n(α)}` for an arbitrary contour given as hit weights
/// `(n + 1) γ(v)`, `v = 1, ..., n+1`.
pub fn validity_probability(n: usize, hit_weights: &[f64], alpha: f64) -> Result<f64> {
    if hit_weights.len() != n + 1 {
        return Err(Error::domain(format!(
            "expected {} hit weights, got {}",
            n + 1,
            hit_weights.len()
        )));
    }
    // weights summed from realization probabilities carry rounding error
    let steps = corrected_steps(n, alpha)? as f64 * (1.0 + 1e-12) + 1e-12;
    let bad = hit_weights.iter().filter(|&&h| h <= steps).count();
    Ok(bad as f64 / (n + 1) as f64)
}

/// Hit weights `(n + 1) γ(v)` of an arbitrary finite random set on `{1, ..., n+1}`.
pub fn hit_weights_of(n: usize, realizations: &[Realization]) -> Vec<f64> {
    (1..=n + 1)
        .map(|v| {
            (n + 1) as f64
                * realizations
                    .iter()
                    .filter(|r| r.set.contains(v))
                    .map(|r| r.probability)
                    .sum::<f64>()
        })
        .collect()
}

/// IM plausibility of `candidate`: the family's contour at the candidate's rank.
/// The lower kind reproduces the conformal transducer and the randomized kind
/// the smoothed transducer, ties included.
pub fn im_contour(
    data: &Sample,
    measure: &dyn NonconformityMeasure,
    candidate: &[f64],
    family: &NestedRandomSetFamily,
) -> Result<f64> {
    if family.n != data.len() {
        return Err(Error::domain(format!(
            "family built for n = {} but the data have n = {}",
            family.n,
            data.len()
        )));
    }
    let r = transducer(data, measure, candidate)?;
    match family.kind {
        FamilyKind::Lower => Ok(r.value()),
        FamilyKind::Randomized { w } => r.smoothed(w),
        _ => family.contour_gamma(RankAssociation::from_transducer(&r).rank),
    }
}

/// `γ(rank)` with the tie group resolved by `ties`.
pub fn im_contour_with_ties(
    data: &Sample,
    measure: &dyn NonconformityMeasure,
    candidate: &[f64],
    family: &NestedRandomSetFamily,
    ties: RankTies,
) -> Result<f64> {
    if ties == RankTies::Min {
        return im_contour(data, measure, candidate, family);
    }
    if family.n != data.len() {
        return Err(Error::domain(format!(
            "family built for n = {} but the data have n = {}",
            family.n,
            data.len()
        )));
    }
    let a = rank(data, measure, candidate)?;
    family.contour_gamma(a.max_rank())
}

/// Lower-family IM contour over a grid. Counts are `(n + 1) γ(rank)`.
pub fn im_contour_on_grid(
    data: &Sample,
    measure: &dyn NonconformityMeasure,
    grid: &Grid,
    ties: RankTies,
) -> Result<PlausibilityContour> {
    let results = transduce_grid(data, measure, grid)?;
    let counts = results
        .iter()
        .map(|r| match ties {
            RankTies::Min => r.count,
            RankTies::Max => r.greater() + 1,
        })
        .collect();
    PlausibilityContour::new(grid.clone(), counts, data.len())
}

/// `1 − (v − w t)/(n + 1)` with `v` the largest rank of the tie group and `t`
/// its size; equal to the smoothed transducer.
pub fn randomized_im_contour(
    data: &Sample,
    measure: &dyn NonconformityMeasure,
    candidate: &[f64],
    w: f64,
) -> Result<f64> {
    check_weight(w)?;
    let a = RankAssociation::from_transducer(&transducer(data, measure, candidate)?);
    let m = a.n + 1;
    Ok(((m - a.max_rank()) as f64 + w * a.ties as f64) / m as f64)
}

/// `y_(k)` with `y_(0) = −∞` and `y_(n+1) = +∞`.
fn order_stat(ys: &[f64], k: usize) -> f64 {
    if k == 0 {
        f64::NEG_INFINITY
    } else if k > ys.len() {
        f64::INFINITY
    } else {
        ys[k - 1]
    }
}

/// Image `[y_(lo−1), y_(hi)]` of a rank set under the order-statistic association.
fn rank_set_image(ys: &[f64], set: RankSet) -> Option<Interval> {
    if set.is_empty() {
        return None;
    }
    Interval::new(
        Bound::closed(order_stat(ys, set.lo - 1)),
        Bound::closed(order_stat(ys, set.hi)),
    )
    .ok()
}

fn one_dim_sorted(data: &Sample) -> Result<Vec<f64>> {
    if data.dim() != 1 {
        return Err(Error::domain(format!(
            "order-statistic constructions need one-dimensional data, got dimension {}",
            data.dim()
        )));
    }
    if data.is_empty() {
        return Err(Error::domain("sample size must be at least 1"));
    }
    data.order_statistics()
}

/// Fraction of two-sided realizations whose interval image contains `candidate`.
pub fn twosided_contour(data: &Sample, candidate: f64) -> Result<f64> {
    let ys = one_dim_sorted(data)?;
    let family = NestedRandomSetFamily::two_sided(ys.len())?;
    let m = ys.len() + 1;
    let hits = (1..=m)
        .filter(|&k| {
            rank_set_image(&ys, family.realization(k, true).expect("rank in range"))
                .is_some_and(|iv| iv.contains(candidate))
        })
        .count();
    Ok(hits as f64 / m as f64)
}

/// `{ỹ : twosided_contour(ỹ) > t}` with `t = k_n(α)`, or `None` when empty.
/// Strict exceedance of `α` and of `k_n(α)` give the same set.
pub fn twosided_region(data: &Sample, alpha: f64) -> Result<Option<Interval>> {
    let ys = one_dim_sorted(data)?;
    let n = ys.len();
    let steps = corrected_steps(n, alpha)?;
    // realizations grow with Ṽ, so the points hit by more than `steps` of
    // them form the realization with index n + 1 − steps
    if steps > n {
        return Ok(None);
    }
    let family = NestedRandomSetFamily::two_sided(n)?;
    Ok(rank_set_image(
        &ys,
        family.realization(n + 1 - steps, true)?,
    ))
}

/// Order-statistic prediction interval and its exact coverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilksInterval {
    pub r: usize,
    pub s: usize,
    pub interval: Interval,
    /// `(s − r)/(n + 1)`.
    pub level: f64,
}

/// `[y_(r), y_(s)]` for `1 ≤ r < s ≤ n`.
pub fn classical_interval(data: &Sample, r: usize, s: usize) -> Result<WilksInterval> {
    let ys = one_dim_sorted(data)?;
    let n = ys.len();
    if !(1 <= r && r < s && s <= n) {
        return Err(Error::domain(format!(
            "order statistic indices need 1 <= r < s <= n = {n}, got r = {r}, s = {s}"
        )));
    }
    Ok(WilksInterval {
        r,
        s,
        interval: Interval::closed(ys[r - 1], ys[s - 1])?,
        level: (s - r) as f64 / (n + 1) as f64,
    })
}

/// Narrowest central Wilks interval with coverage at least `1 − α`; the
/// whole line when no such interval exists.
#[derive(Debug, Clone, Copy, Default)]
pub struct WilksFamily;

impl WilksFamily {
    /// `(r, s)` for level `α`, or `None` for the whole line.
    pub fn indices(n: usize, alpha: f64) -> Result<Option<(usize, usize)>> {
        let width = (n + 1 - corrected_steps(n, alpha)?).max(1);
        if n < 2 || width > n - 1 {
            return Ok(None);
        }
        let r = ((n + 1 - width) / 2).max(1);
        Ok(Some((r, r + width)))
    }
}

impl RegionFamily for WilksFamily {
    fn region_at(&self, data: &Sample, alpha: f64) -> Result<Assertion> {
        Ok(match WilksFamily::indices(data.len(), alpha)? {
            None => Assertion::everything(1),
            Some((r, s)) => Assertion::interval(classical_interval(data, r, s)?.interval),
        })
    }
}

/// Lower and upper probability of an assertion under the singleton family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpiBounds {
    pub n: usize,
    /// `#{v : [y_(v−1), y_(v)] ⊆ B}`.
    pub lower_count: usize,
    /// `#{v : [y_(v−1), y_(v)] ∩ B ≠ ∅}`.
    pub upper_count: usize,
}

impl NpiBounds {
    pub fn lower(&self) -> f64 {
        self.lower_count as f64 / (self.n + 1) as f64
    }

    pub fn upper(&self) -> f64 {
        self.upper_count as f64 / (self.n + 1) as f64
    }
}

pub fn npi_bounds(data: &Sample, assertion: &Assertion) -> Result<NpiBounds> {
    let ys = one_dim_sorted(data)?;
    let b = assertion.to_interval_set()?;
    let n = ys.len();
    let cells: Vec<Interval> = (1..=n + 1)
        .map(|v| {
            Interval::new(
                Bound::closed(order_stat(&ys, v - 1)),
                Bound::closed(order_stat(&ys, v)),
            )
        })
        .collect::<Result<_>>()?;
    Ok(NpiBounds {
        n,
        lower_count: cells.iter().filter(|c| b.contains_interval(c)).count(),
        upper_count: cells.iter().filter(|c| b.intersects(c)).count(),
    })
}
