//! Measures induced by nested families of prediction regions.

use std::fmt;
use std::sync::Arc;

use crate::assertion::Assertion;
use crate::error::{Error, Result};
use crate::sample::Sample;

use super::NonconformityMeasure;

pub const DEFAULT_LADDER_STEPS: usize = 1000;

/// Ladder levels re-checked after the search to catch non-nested families.
const NESTING_PROBES: usize = 8;

/// A family of prediction regions `C_α(data)`, shrinking as `α` grows and
/// depending on the data only as a multiset.
pub trait RegionFamily: Send + Sync {
    fn region_at(&self, data: &Sample, alpha: f64) -> Result<Assertion>;
}

/// `Ψ(bag, ỹ) = 1 − sup{α on the ladder : ỹ ∈ C_α(bag)}`, with the empty
/// supremum taken as 0, so points outside every region score 1.
#[derive(Clone)]
pub struct FamilyMeasure {
    family: Arc<dyn RegionFamily>,
    steps: usize,
}

impl fmt::Debug for FamilyMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamilyMeasure")
            .field("steps", &self.steps)
            .finish()
    }
}

pub fn from_region_family(family: Arc<dyn RegionFamily>) -> FamilyMeasure {
    FamilyMeasure::new(family, DEFAULT_LADDER_STEPS).expect("default ladder is nonempty")
}

impl FamilyMeasure {
    pub fn new(family: Arc<dyn RegionFamily>, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::domain("the alpha ladder needs at least one step"));
        }
        Ok(FamilyMeasure { family, steps })
    }

    fn level(&self, k: usize) -> f64 {
        k as f64 / self.steps as f64
    }

    fn covers(&self, data: &Sample, k: usize, point: &[f64]) -> Result<bool> {
        self.family.region_at(data, self.level(k))?.contains(point)
    }

    /// Largest ladder index whose region contains `point`, if any.
    fn last_covering(&self, data: &Sample, point: &[f64]) -> Result<Option<usize>> {
        if !self.covers(data, 0, point)? {
            return Ok(None);
        }
        // invariant: covers(lo) and, when hi <= steps, !covers(hi)
        let (mut lo, mut hi) = (0usize, self.steps + 1);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.covers(data, mid, point)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(lo))
    }

    fn check_nesting(&self, data: &Sample, point: &[f64], last: Option<usize>) -> Result<()> {
        for j in 0..=NESTING_PROBES {
            let k = j * self.steps / NESTING_PROBES;
            let expected = matches!(last, Some(l) if k <= l);
            if self.covers(data, k, point)? != expected {
                return Err(Error::contract(format!(
                    "region family is not nested: membership at alpha = {} breaks monotonicity",
                    self.level(k)
                )));
            }
        }
        Ok(())
    }
}

impl NonconformityMeasure for FamilyMeasure {
    fn name(&self) -> String {
        format!("family:K={}", self.steps)
    }

    fn score(&self, bag: &[&[f64]], point: &[f64]) -> Result<f64> {
        let data = Sample::from_points(bag)?;
        let last = self.last_covering(&data, point)?;
        self.check_nesting(&data, point, last)?;
        Ok(match last {
            None => 1.0,
            Some(k) => 1.0 - self.level(k),
        })
    }
}
