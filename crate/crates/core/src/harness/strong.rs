use std::sync::Arc;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::assertion::{Assertion, BoxSet, Interval};
use crate::conformal::contour_on_grid;
use crate::consonant::ConsonantPredictor;
use crate::error::{Error, Result};
use crate::grid::build_grid;
use crate::level::k_n;
use crate::nonconformity::NonconformityMeasure;
use crate::sample::Sample;

use super::report::{Direction, ExperimentConfig, ValidityReport, ValidityRow};
use super::rng::run_replications;

/// A data-dependent upper probability `A ↦ Π̄_{y^n}(A)`.
pub trait UpperPredictor: Sync {
    fn name(&self) -> String;

    /// `Π̄_{data}(A)` for each assertion, in order.
    fn uppers(&self, data: &Sample, assertions: &[Assertion]) -> Result<Vec<f64>>;
}

/// The consonant conformal predictor, `Π̄(A) = max π` over candidate points in `A`.
///
/// In one dimension the candidates are a padded uniform grid plus the data
/// and points just inside every component of every assertion. In higher
/// dimensions only the tensor grid is used.
#[derive(Debug, Clone)]
pub struct ConsonantUpper {
    pub measure: Arc<dyn NonconformityMeasure>,
    pub points_per_axis: usize,
    pub padding: f64,
}

impl ConsonantUpper {
    pub fn new(measure: Arc<dyn NonconformityMeasure>) -> Self {
        ConsonantUpper {
            measure,
            points_per_axis: 400,
            padding: 0.5,
        }
    }
}

impl UpperPredictor for ConsonantUpper {
    fn name(&self) -> String {
        format!("consonant:{}", self.measure.name())
    }

    fn uppers(&self, data: &Sample, assertions: &[Assertion]) -> Result<Vec<f64>> {
        let mut grid = build_grid(data, self.padding, self.points_per_axis)?;
        if data.dim() == 1 {
            let mut extra = data.coords().to_vec();
            assertions.iter().for_each(|a| extra.extend(a.anchors()));
            grid = grid.with_extra_points(&extra)?;
        }
        let pred = ConsonantPredictor::new(contour_on_grid(data, self.measure.as_ref(), &grid)?);
        assertions
            .iter()
            .map(|a| pred.upper_probability(a))
            .collect()
    }
}

/// A precise normal predictive: either fixed, or fitted as `N(ȳ, s²(1 + 1/n))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalUpper {
    Fixed { mean: f64, sd: f64 },
    Fitted,
}

impl NormalUpper {
    fn distribution(&self, data: &Sample) -> Result<Normal> {
        let (mean, sd) = match *self {
            NormalUpper::Fixed { mean, sd } => (mean, sd),
            NormalUpper::Fitted => {
                let ys = data.scalars()?;
                let n = ys.len();
                if n < 2 {
                    return Err(Error::domain("a fitted normal needs at least two points"));
                }
                let m = ys.iter().sum::<f64>() / n as f64;
                let s2 = ys.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / (n - 1) as f64;
                (m, (s2 * (1.0 + 1.0 / n as f64)).sqrt())
            }
        };
        Normal::new(mean, sd).map_err(|e| Error::domain(format!("normal predictive: {e}")))
    }
}

impl UpperPredictor for NormalUpper {
    fn name(&self) -> String {
        match self {
            NormalUpper::Fixed { mean, sd } => format!("normal:mean={mean}:sd={sd}"),
            NormalUpper::Fitted => "normal:fitted".into(),
        }
    }

    fn uppers(&self, data: &Sample, assertions: &[Assertion]) -> Result<Vec<f64>> {
        let dist = self.distribution(data)?;
        assertions
            .iter()
            .map(|a| {
                let set = a.to_interval_set()?;
                let p: f64 = set
                    .components()
                    .iter()
                    .map(|iv| dist.cdf(iv.hi.value) - dist.cdf(iv.lo.value))
                    .sum();
                Ok(p.clamp(0.0, 1.0))
            })
            .collect()
    }
}

/// Tails, intervals and unions on the real line, including `{|y| > 1}`.
pub fn default_assertions() -> Vec<Assertion> {
    [
        "(-inf,-1]",
        "[1,inf)",
        "(-inf,0]",
        "[0,inf)",
        "[-0.5,0.5]",
        "[-1,1]",
        "[0.5,2]",
        "[-3,-1.5]",
        "[2,4]",
        "(-inf,-2]|[2,inf)",
        "(-inf,-1)|(1,inf)",
        "[-0.2,0.2]|[1,1.5]",
        "all",
    ]
    .iter()
    .map(|s| s.parse().expect("built-in assertion parses"))
    .collect()
}

/// Empirical `P{Π̄_{Y^n}(A) ≤ k_n(α), Y_{n+1} ∈ A}` for every `(α, A)`, compared with `α`.
pub fn estimate_strong_validity(
    config: &ExperimentConfig,
    predictor: &dyn UpperPredictor,
    assertions: &[Assertion],
) -> Result<ValidityReport> {
    config.validate()?;
    if assertions.is_empty() {
        return Err(Error::domain("the assertion list is empty"));
    }
    let thresholds = config
        .alphas
        .iter()
        .map(|&a| k_n(config.n, a))
        .collect::<Result<Vec<_>>>()?;
    let gen = &config.generator;
    let hits = run_replications(config.seed, config.reps, |rng| {
        let data = gen.sample(rng, config.n)?;
        let y = gen.draw(rng);
        let uppers = predictor.uppers(&data, assertions)?;
        let mut out = Vec::with_capacity(thresholds.len() * assertions.len());
        for &t in &thresholds {
            for (a, &u) in assertions.iter().zip(&uppers) {
                out.push(u <= t && a.contains(&y)?);
            }
        }
        Ok(out)
    })?;
    let name = predictor.name();
    let mut rows = Vec::new();
    for (i, (&alpha, &t)) in config.alphas.iter().zip(&thresholds).enumerate() {
        for (j, a) in assertions.iter().enumerate() {
            let k = i * assertions.len() + j;
            let events = hits.iter().filter(|h| h[k]).count();
            rows.push(ValidityRow::new(
                "strong",
                &name,
                &gen.to_string(),
                config.n,
                alpha,
                t,
                a.to_string(),
                events,
                config.reps,
                alpha,
                Direction::AtMost,
            ));
        }
    }
    Ok(ValidityReport::new(config, rows))
}

/// A data-independent map `y ↦ A[y]` with `y ∈ A[y]`.
pub trait AssertionMap: Sync {
    fn name(&self) -> String;
    fn apply(&self, y: &[f64]) -> Result<Assertion>;
}

/// `A[y]` = the closed box of half-width `eps` around `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallMap {
    pub eps: f64,
}

impl AssertionMap for BallMap {
    fn name(&self) -> String {
        format!("ball:{}", self.eps)
    }

    fn apply(&self, y: &[f64]) -> Result<Assertion> {
        if !(self.eps >= 0.0) {
            return Err(Error::domain("ball radius must be nonnegative"));
        }
        let sides = y
            .iter()
            .map(|&v| Interval::closed(v - self.eps, v + self.eps))
            .collect::<Result<Vec<_>>>()?;
        Assertion::boxes(y.len(), vec![BoxSet::new(sides)?])
    }
}

/// `A[y] = [y, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RayMap;

impl AssertionMap for RayMap {
    fn name(&self) -> String {
        "ray".into()
    }

    fn apply(&self, y: &[f64]) -> Result<Assertion> {
        if y.len() != 1 {
            return Err(Error::domain("the ray map is one-dimensional"));
        }
        Ok(Assertion::interval(Interval::closed(y[0], f64::INFINITY)?))
    }
}

/// Empirical `P{Π̄_{Y^n}(A[Y_{n+1}]) ≤ k_n(α)}` for each `α`, compared with `α`.
pub fn estimate_alt_strong_validity(
    config: &ExperimentConfig,
    predictor: &dyn UpperPredictor,
    map: &dyn AssertionMap,
) -> Result<ValidityReport> {
    config.validate()?;
    let thresholds = config
        .alphas
        .iter()
        .map(|&a| k_n(config.n, a))
        .collect::<Result<Vec<_>>>()?;
    let gen = &config.generator;
    let hits = run_replications(config.seed, config.reps, |rng| {
        let data = gen.sample(rng, config.n)?;
        let y = gen.draw(rng);
        let a = map.apply(&y)?;
        if !a.contains(&y)? {
            return Err(Error::contract(format!(
                "assertion map {} sends {y:?} to {a}, which does not contain it",
                map.name()
            )));
        }
        let u = predictor.uppers(&data, std::slice::from_ref(&a))?[0];
        Ok(thresholds.iter().map(|&t| u <= t).collect::<Vec<_>>())
    })?;
    let name = predictor.name();
    let rows = config
        .alphas
        .iter()
        .zip(&thresholds)
        .enumerate()
        .map(|(i, (&alpha, &t))| {
            let events = hits.iter().filter(|h| h[i]).count();
            ValidityRow::new(
                "alt-strong",
                &name,
                &gen.to_string(),
                config.n,
                alpha,
                t,
                map.name(),
                events,
                config.reps,
                alpha,
                Direction::AtMost,
            )
        })
        .collect();
    Ok(ValidityReport::new(config, rows))
}
