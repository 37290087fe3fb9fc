//! The conformal transducer, its smoothed version, prediction regions and
//! full-conformal regression bands.

mod depth_engine;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use depth_engine::DepthEngine;

use crate::contour::PlausibilityContour;
use crate::error::{check_dim, Error, Result};
use crate::grid::Grid;
use crate::nonconformity::{LeaveOneOutFits, NonconformityMeasure, Regressor};
use crate::region::PredictionRegion;
use crate::sample::Sample;

/// Rank summary of `T_{n+1}` among `T_1, ..., T_{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransducerResult {
    /// `#{i : T_i ≥ T_{n+1}}`, including `i = n + 1`.
    pub count: usize,
    pub n: usize,
    /// `#{i : T_i = T_{n+1}}`, including `i = n + 1`.
    pub tie_count: usize,
}

impl TransducerResult {
    pub fn from_scores(scores: &[f64]) -> Result<Self> {
        let (&last, _) = scores
            .split_last()
            .ok_or_else(|| Error::domain("no scores"))?;
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::domain("nonconformity score is NaN"));
        }
        let count = scores.iter().filter(|&&t| t >= last).count();
        let tie_count = scores.iter().filter(|&&t| t == last).count();
        Ok(TransducerResult {
            count,
            n: scores.len() - 1,
            tie_count,
        })
    }

    pub fn value(&self) -> f64 {
        self.count as f64 / (self.n + 1) as f64
    }

    /// `#{T_i > T_{n+1}}`.
    pub fn greater(&self) -> usize {
        self.count - self.tie_count
    }

    /// Smoothed value with tie weight `w`.
    pub fn smoothed(&self, w: f64) -> Result<f64> {
        check_weight(w)?;
        Ok((self.greater() as f64 + w * self.tie_count as f64) / (self.n + 1) as f64)
    }
}

pub(crate) fn check_weight(w: f64) -> Result<()> {
    if (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "tie weight w = {w} is outside [0, 1]"
        )))
    }
}

/// Evaluates many candidates against one fixed data set.
pub trait CandidateEngine: Send + Sync {
    fn transduce(&self, candidate: &[f64]) -> Result<TransducerResult>;
}

fn check_compat(data: &Sample, measure: &dyn NonconformityMeasure, dim: usize) -> Result<()> {
    if let Some(d) = measure.dim() {
        check_dim(d, data.dim())?;
    }
    check_dim(data.dim(), dim)
}

/// The conformal transducer at one candidate.
pub fn transducer(
    data: &Sample,
    measure: &dyn NonconformityMeasure,
    candidate: &[f64],
) -> Result<TransducerResult> {
    check_compat(data, measure, candidate.len())?;
    let mut augmented: Vec<&[f64]> = data.points().collect();
    augmented.push(candidate);
    TransducerResult::from_scores(&measure.scores(&augmented)?)
}

struct Generic<'a> {
    data: &'a Sample,
    measure: &'a dyn NonconformityMeasure,
}

impl CandidateEngine for Generic<'_> {
    fn transduce(&self, candidate: &[f64]) -> Result<TransducerResult> {
        transducer(self.data, self.measure, candidate)
    }
}

/// Transducer results at every grid point, in grid order.
pub fn transduce_grid(
    data: &Sample,
    measure: &dyn NonconformityMeasure,
    grid: &Grid,
) -> Result<Vec<TransducerResult>> {
    check_compat(data, measure, grid.dim())?;
    let special = measure.candidate_engine(data).transpose()?;
    let generic = Generic { data, measure };
    let engine: &dyn CandidateEngine = match &special {
        Some(e) => e.as_ref(),
        None => &generic,
    };
    let points: Vec<&[f64]> = grid.points().collect();
    points.par_iter().map(|p| engine.transduce(p)).collect()
}

/// Transducer counts over every grid point.
pub fn contour_on_grid(
    data: &Sample,
    measure: &dyn NonconformityMeasure,
    grid: &Grid,
) -> Result<PlausibilityContour> {
    let results = transduce_grid(data, measure, grid)?;
    PlausibilityContour::new(
        grid.clone(),
        results.iter().map(|r| r.count).collect(),
        data.len(),
    )
}

/// `(#{T_i > T_{n+1}} + w #{T_i = T_{n+1}}) / (n + 1)`.
pub fn smoothed_transducer(
    data: &Sample,
    measure: &dyn NonconformityMeasure,
    candidate: &[f64],
    w: f64,
) -> Result<f64> {
    check_weight(w)?;
    transducer(data, measure, candidate)?.smoothed(w)
}

/// `{ỹ : π(ỹ) > t}` with `t = k_n(α)` when `corrected`, else `t = α`.
pub fn prediction_region(
    contour: &PlausibilityContour,
    alpha: f64,
    corrected: bool,
) -> Result<PredictionRegion> {
    PredictionRegion::from_contour(contour, alpha, corrected)
}

/// Pairs reordered canonically, so leave-one-out fits depend on the multiset only.
fn canonical_pairs(pairs: &Sample) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dim(2, pairs.dim())?;
    let mut rows: Vec<&[f64]> = pairs.points().collect();
    rows.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    Ok((
        rows.iter().map(|r| r[0]).collect(),
        rows.iter().map(|r| r[1]).collect(),
    ))
}

/// Full-conformal plausibility of every `ỹ` in `y_grid` as the response at `x_new`.
pub fn regression_contour(
    pairs: &Sample,
    x_new: f64,
    regressor: &Regressor,
    y_grid: &Grid,
) -> Result<PlausibilityContour> {
    check_dim(1, y_grid.dim())?;
    if !x_new.is_finite() {
        return Err(Error::domain("x_new must be finite"));
    }
    let (mut xs, ys) = canonical_pairs(pairs)?;
    xs.push(x_new);
    let fits = LeaveOneOutFits::new(&xs, regressor)?;
    let counts = y_grid
        .coords()
        .par_iter()
        .map(|&y| {
            let mut aug = ys.clone();
            aug.push(y);
            let scores: Vec<f64> = fits.residuals(&aug)?.iter().map(|f| f.residual).collect();
            Ok(TransducerResult::from_scores(&scores)?.count)
        })
        .collect::<Result<Vec<_>>>()?;
    PlausibilityContour::new(y_grid.clone(), counts, pairs.len())
}

/// The prediction region for the response at one covariate value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSlice {
    pub x: f64,
    pub region: PredictionRegion,
    /// Smallest and largest retained `y`, if any.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Corrected-level regions `π(ỹ; x, data) > k_n(α)` along `x_grid`.
pub fn regression_band(
    pairs: &Sample,
    x_grid: &[f64],
    y_grid: &Grid,
    alpha: f64,
    regressor: &Regressor,
) -> Result<Vec<BandSlice>> {
    x_grid
        .iter()
        .map(|&x| {
            let contour = regression_contour(pairs, x, regressor, y_grid)?;
            let region = prediction_region(&contour, alpha, true)?;
            let hull = region.hull();
            Ok(BandSlice {
                x,
                lower: hull.map(|h| h.0),
                upper: hull.map(|h| h.1),
                region,
            })
        })
        .collect()
}
