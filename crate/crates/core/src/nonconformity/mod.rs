//! Nonconformity measures: permutation-invariant scores `Ψ(bag, point)`.

pub(crate) mod depth;
mod family;
mod regression;
mod sum;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use depth::{depth_measure, halfspace_depth_count, tukey_depth_2d, DepthMeasure};
pub use family::{from_region_family, FamilyMeasure, RegionFamily, DEFAULT_LADDER_STEPS};
pub use regression::{
    fitted_mean, regression_residual, LeaveOneOutFits, RegressionMeasure, Regressor, ResidualFit,
};
pub(crate) use sum::ExactSum;

use crate::conformal::CandidateEngine;
use crate::error::{check_dim, Error, Result};
use crate::sample::Sample;

/// A score of how poorly `point` agrees with `bag`; larger is less conforming.
///
/// Implementations must depend on `bag` only as a multiset.
pub trait NonconformityMeasure: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// Required point dimension, if any.
    fn dim(&self) -> Option<usize> {
        None
    }

    fn score(&self, bag: &[&[f64]], point: &[f64]) -> Result<f64>;

    /// `T_i = Ψ(augmented without i, augmented[i])` for every `i`.
    fn scores(&self, augmented: &[&[f64]]) -> Result<Vec<f64>> {
        loo_scores(self, augmented)
    }

    /// An optional specialised evaluator for many candidates against fixed data.
    fn candidate_engine(&self, _data: &Sample) -> Option<Result<Box<dyn CandidateEngine>>> {
        None
    }
}

/// Reference leave-one-out evaluation through [`NonconformityMeasure::score`].
pub fn loo_scores<M: NonconformityMeasure + ?Sized>(
    measure: &M,
    augmented: &[&[f64]],
) -> Result<Vec<f64>> {
    let mut bag: Vec<&[f64]> = Vec::with_capacity(augmented.len().saturating_sub(1));
    (0..augmented.len())
        .map(|i| {
            bag.clear();
            bag.extend(augmented[..i].iter().chain(&augmented[i + 1..]).copied());
            measure.score(&bag, augmented[i])
        })
        .collect()
}

fn scalar_bag(bag: &[&[f64]]) -> Result<Vec<f64>> {
    bag.iter()
        .map(|p| {
            check_dim(1, p.len())?;
            Ok(p[0])
        })
        .collect()
}

fn scalar_point(point: &[f64]) -> Result<f64> {
    check_dim(1, point.len())?;
    Ok(point[0])
}

fn nonempty(bag: &[f64]) -> Result<()> {
    if bag.is_empty() {
        Err(Error::domain("bag must not be empty"))
    } else {
        Ok(())
    }
}

/// `|mean(bag) − point|` with the bag summed exactly, so the value does not
/// depend on the order of the bag.
pub fn mean_distance(bag: &[f64], point: f64) -> Result<f64> {
    nonempty(bag)?;
    let mut s = ExactSum::new();
    bag.iter().for_each(|&x| s.add(x));
    Ok((s.value() / bag.len() as f64 - point).abs())
}

fn median_of_sorted_len(m: usize, kth: impl Fn(usize) -> f64) -> f64 {
    if m % 2 == 1 {
        kth(m / 2)
    } else {
        let (a, b) = (kth(m / 2 - 1), kth(m / 2));
        (a + b) / 2.0
    }
}

/// Median; for an even count, the midpoint of the two central order statistics.
pub fn median(values: &[f64]) -> Result<f64> {
    nonempty(values)?;
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(median_of_sorted_len(v.len(), |k| v[k]))
}

/// `|median(bag) − point|`.
pub fn median_distance(bag: &[f64], point: f64) -> Result<f64> {
    Ok((median(bag)? - point).abs())
}

/// The point itself, ignoring the bag.
pub fn raw_value(_bag: &[f64], point: f64) -> f64 {
    point
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MeanDistance;

impl NonconformityMeasure for MeanDistance {
    fn name(&self) -> String {
        "mean".into()
    }

    fn dim(&self) -> Option<usize> {
        Some(1)
    }

    fn score(&self, bag: &[&[f64]], point: &[f64]) -> Result<f64> {
        mean_distance(&scalar_bag(bag)?, scalar_point(point)?)
    }

    fn scores(&self, augmented: &[&[f64]]) -> Result<Vec<f64>> {
        let ys = scalar_bag(augmented)?;
        if ys.len() < 2 {
            return Err(Error::domain("bag must not be empty"));
        }
        let mut total = ExactSum::new();
        ys.iter().for_each(|&y| total.add(y));
        let m = (ys.len() - 1) as f64;
        Ok(ys
            .iter()
            .map(|&y| {
                let mut s = total.clone();
                s.add(-y);
                (s.value() / m - y).abs()
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MedianDistance;

impl NonconformityMeasure for MedianDistance {
    fn name(&self) -> String {
        "median".into()
    }

    fn dim(&self) -> Option<usize> {
        Some(1)
    }

    fn score(&self, bag: &[&[f64]], point: &[f64]) -> Result<f64> {
        median_distance(&scalar_bag(bag)?, scalar_point(point)?)
    }

    fn scores(&self, augmented: &[&[f64]]) -> Result<Vec<f64>> {
        let ys = scalar_bag(augmented)?;
        if ys.len() < 2 {
            return Err(Error::domain("bag must not be empty"));
        }
        let mut order: Vec<usize> = (0..ys.len()).collect();
        order.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]));
        let sorted: Vec<f64> = order.iter().map(|&i| ys[i]).collect();
        let mut pos = vec![0; ys.len()];
        for (p, &i) in order.iter().enumerate() {
            pos[i] = p;
        }
        let m = ys.len() - 1;
        Ok((0..ys.len())
            .map(|i| {
                let p = pos[i];
                let med =
                    median_of_sorted_len(m, |k| if k < p { sorted[k] } else { sorted[k + 1] });
                (med - ys[i]).abs()
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RawValue;

impl NonconformityMeasure for RawValue {
    fn name(&self) -> String {
        "raw".into()
    }

    fn dim(&self) -> Option<usize> {
        Some(1)
    }

    fn score(&self, _bag: &[&[f64]], point: &[f64]) -> Result<f64> {
        scalar_point(point)
    }
}

/// `Ψ ≡ c`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantMeasure(pub f64);

impl NonconformityMeasure for ConstantMeasure {
    fn name(&self) -> String {
        format!("constant:{}", self.0)
    }

    fn score(&self, _bag: &[&[f64]], _point: &[f64]) -> Result<f64> {
        Ok(self.0)
    }
}

/// Fraction of the bag that differs from the point; meant for finite label spaces.
#[derive(Debug, Clone, Copy, Default)]
pub struct CountingMeasure;

impl NonconformityMeasure for CountingMeasure {
    fn name(&self) -> String {
        "counting".into()
    }

    fn score(&self, bag: &[&[f64]], point: &[f64]) -> Result<f64> {
        if bag.is_empty() {
            return Err(Error::domain("bag must not be empty"));
        }
        let differ = bag.iter().filter(|b| **b != point).count();
        Ok(differ as f64 / bag.len() as f64)
    }
}

/// A measure chosen by name, e.g. `median`, `depth2d` or `regress:bspline:df=12`.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Mean,
    Median,
    Raw,
    Counting,
    Constant(f64),
    Depth2d,
    Regression(Regressor),
}

impl MeasureSpec {
    pub fn build(&self) -> Arc<dyn NonconformityMeasure> {
        match self {
            MeasureSpec::Mean => Arc::new(MeanDistance),
            MeasureSpec::Median => Arc::new(MedianDistance),
            MeasureSpec::Raw => Arc::new(RawValue),
            MeasureSpec::Counting => Arc::new(CountingMeasure),
            MeasureSpec::Constant(c) => Arc::new(ConstantMeasure(*c)),
            MeasureSpec::Depth2d => Arc::new(DepthMeasure),
            MeasureSpec::Regression(r) => Arc::new(RegressionMeasure::new(r.clone())),
        }
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureSpec::Mean => write!(f, "mean"),
            MeasureSpec::Median => write!(f, "median"),
            MeasureSpec::Raw => write!(f, "raw"),
            MeasureSpec::Counting => write!(f, "counting"),
            MeasureSpec::Constant(c) => write!(f, "constant:{c}"),
            MeasureSpec::Depth2d => write!(f, "depth2d"),
            MeasureSpec::Regression(r) => write!(f, "regress:{}", r.name()),
        }
    }
}

impl FromStr for MeasureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "mean" => MeasureSpec::Mean,
            "median" => MeasureSpec::Median,
            "raw" => MeasureSpec::Raw,
            "counting" => MeasureSpec::Counting,
            "depth2d" | "depth" => MeasureSpec::Depth2d,
            _ => {
                if let Some(c) = s.strip_prefix("constant:") {
                    MeasureSpec::Constant(
                        c.parse()
                            .map_err(|_| Error::parse(format!("bad constant {c:?}")))?,
                    )
                } else if let Some(r) = s.strip_prefix("regress:") {
                    MeasureSpec::Regression(r.parse()?)
                } else if s == "regress" {
                    MeasureSpec::Regression(Regressor::default())
                } else {
                    return Err(Error::parse(format!("unknown measure {s:?}")));
                }
            }
        })
    }
}
