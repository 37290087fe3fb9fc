use serde::{Deserialize, Serialize};

use crate::contour::PlausibilityContour;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::level::k_n;

/// `{ỹ : π(ỹ) > threshold}` evaluated on a contour's grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRegion {
    pub alpha: f64,
    pub corrected: bool,
    pub threshold: f64,
    pub n: usize,
    grid: Grid,
    mask: Vec<bool>,
    /// Closed intervals spanning runs of retained consecutive grid points (d = 1 only).
    intervals: Option<Vec<(f64, f64)>>,
}

impl PredictionRegion {
    pub fn from_contour(
        contour: &PlausibilityContour,
        alpha: f64,
        corrected: bool,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain(format!("alpha = {alpha} is outside [0, 1]")));
        }
        let threshold = if corrected {
            k_n(contour.n(), alpha)?
        } else {
            alpha
        };
        let mask: Vec<bool> = (0..contour.len())
            .map(|i| contour.value(i) > threshold)
            .collect();
        let grid = contour.grid().clone();
        let intervals = (grid.dim() == 1).then(|| merge_runs(grid.coords(), &mask));
        Ok(PredictionRegion {
            alpha,
            corrected,
            threshold,
            n: contour.n(),
            grid,
            mask,
            intervals,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn intervals(&self) -> Option<&[(f64, f64)]> {
        self.intervals.as_deref()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn retained(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn contains_index(&self, i: usize) -> bool {
        self.mask[i]
    }

    /// In one dimension, membership in the merged closed intervals; otherwise
    /// membership of the nearest grid point.
    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        match &self.intervals {
            Some(ivs) => {
                crate::error::check_dim(1, point.len())?;
                let y = point[0];
                Ok(ivs.iter().any(|&(a, b)| a <= y && y <= b))
            }
            None => Ok(self.mask[self.grid.nearest_index(point)?]),
        }
    }

    /// Smallest and largest retained coordinate in one dimension.
    pub fn hull(&self) -> Option<(f64, f64)> {
        let ivs = self.intervals.as_ref()?;
        Some((ivs.first()?.0, ivs.last()?.1))
    }

    /// Retained cells times the cell volume of a uniform tensor grid.
    pub fn area(&self) -> Option<f64> {
        self.grid.cell_volume().map(|v| v * self.retained() as f64)
    }
}

fn merge_runs(xs: &[f64], mask: &[bool]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=mask.len() {
        let on = i < mask.len() && mask[i];
        match (on, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((xs[s], xs[i - 1]));
                start = None;
            }
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contour(values: &[f64], counts: Vec<usize>, n: usize) -> PlausibilityContour {
        PlausibilityContour::new(Grid::from_scalars(values).unwrap(), counts, n).unwrap()
    }

    #[test]
    fn threshold_is_strict() {
        let c = contour(&[1.0, 10.0], vec![3, 1], 2);
        let r = PredictionRegion::from_contour(&c, 0.5, false).unwrap();
        assert_eq!(r.mask(), &[true, false]);
        assert_eq!(r.intervals().unwrap(), &[(1.0, 1.0)]);
        let all = PredictionRegion::from_contour(&c, 0.0, false).unwrap();
        assert_eq!(all.retained(), 2);
        let none = PredictionRegion::from_contour(&c, 1.0, true).unwrap();
        assert!(none.is_empty());
        assert!(PredictionRegion::from_contour(&c, 1.2, true).is_err());
    }

    #[test]
    fn runs_merge_into_closed_intervals() {
        let c = contour(&[0.0, 1.0, 2.0, 3.0, 4.0], vec![1, 3, 4, 1, 2], 4);
        let r = PredictionRegion::from_contour(&c, 0.2, false).unwrap();
        assert_eq!(r.intervals().unwrap(), &[(1.0, 2.0), (4.0, 4.0)]);
        assert!(r.contains(&[1.5]).unwrap());
        assert!(!r.contains(&[3.0]).unwrap());
        assert_eq!(r.hull(), Some((1.0, 4.0)));
    }

    #[test]
    fn corrected_threshold_uses_lattice() {
        // n = 9: k_n(0.25) = 0.2, so a value of 0.25 is not representable but
        // 3/10 clears the corrected threshold and 2/10 does not.
        let c = contour(&[0.0, 1.0, 2.0], vec![2, 3, 10], 9);
        let r = PredictionRegion::from_contour(&c, 0.25, true).unwrap();
        assert_eq!(r.threshold, 0.2);
        assert_eq!(r.mask(), &[false, true, true]);
    }
}
