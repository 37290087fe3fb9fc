use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, StudentT};
use serde::{Deserialize, Serialize};

use crate::baselines::{Generator, JeffreysPredictive};
use crate::conformal::{regression_band, transduce_grid, transducer};
use crate::error::{Error, Result};
use crate::grid::{build_grid, Grid};
use crate::level::corrected_steps;
use crate::nonconformity::{fitted_mean, DepthMeasure, RegressionMeasure, Regressor};
use crate::sample::Sample;

use super::report::SLACK_SE;
use super::rng::{derive_seed, replication_rng, run_replications};
use super::weak::{estimate_weak_validity, DpRegions};
use super::ExperimentConfig;

const TABLE1_SIZES: [usize; 3] = [20, 30, 40];
const TABLE1_ALPHA: f64 = 0.1;
const TABLE2_N: usize = 100;
const TABLE2_ALPHA: f64 = 0.05;
const TABLE2_GRID: usize = 200;
const TABLE2_PADDING: f64 = 0.25;

fn table1_generators() -> [(&'static str, Generator); 3] {
    [
        ("normal", Generator::Normal { variance: 0.5 }),
        ("cauchy", Generator::Cauchy),
        ("skew", Generator::SkewNormal { shape: 1.0 }),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub n: usize,
    pub distribution: String,
    pub generator: String,
    pub coverage: f64,
    pub se: f64,
}

/// Coverage of equal-tailed 90% Dirichlet-process predictive intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub reps: usize,
    pub seed: u64,
    pub alpha: f64,
    pub rows: Vec<Table1Row>,
}

impl Table1 {
    pub fn get(&self, n: usize, distribution: &str) -> Option<&Table1Row> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.distribution == distribution)
    }

    /// One line per `n` with a coverage column per distribution.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "normal", "cauchy", "skew"])?;
        for n in TABLE1_SIZES {
            let mut rec = vec![n.to_string()];
            for (name, _) in table1_generators() {
                rec.push(
                    self.get(n, name)
                        .map_or(String::new(), |r| format!("{:.4}", r.coverage)),
                );
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The Dirichlet-process coverage table for `n ∈ {20, 30, 40}` and
/// Normal(0, 0.5), Cauchy and skew-normal data.
pub fn reproduce_table1(reps: usize, seed: u64) -> Result<Table1> {
    let mut rows = Vec::new();
    for n in TABLE1_SIZES {
        for (name, gen) in table1_generators() {
            let cell_seed = derive_seed(seed, &format!("table1/{gen}/{n}"));
            let config = ExperimentConfig::new(gen, n, reps, vec![TABLE1_ALPHA], cell_seed);
            let row = &estimate_weak_validity(&config, &DpRegions)?.rows[0];
            rows.push(Table1Row {
                n,
                distribution: name.into(),
                generator: gen.to_string(),
                coverage: row.estimate,
                se: row.se,
            });
        }
    }
    Ok(Table1 {
        reps,
        seed,
        alpha: TABLE1_ALPHA,
        rows,
    })
}

pub const TABLE2_IM: &str = "Nonparametric IM";
pub const TABLE2_IM_MIN: &str = "Nonparametric IM (ties=min)";
pub const TABLE2_BAYES: &str = "Bayes";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub method: String,
    pub distribution: String,
    pub coverage: f64,
    pub coverage_se: f64,
    pub area: f64,
    pub area_se: f64,
}

/// Coverage and expected area of 95% regions for bivariate data, `n = 100`.
///
/// The IM region is `{ỹ : π(ỹ) > k_n(α)}` under the depth measure, its area
/// counted on a 200 × 200 grid over the data range padded by 25% per side.
/// The main IM row ranks the new point last within its tie group; the
/// `ties=min` row uses the `≥` count, which keeps every grid cell whenever
/// no data point has depth above `k_n(α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2 {
    pub reps: usize,
    pub seed: u64,
    pub n: usize,
    pub alpha: f64,
    pub grid_points: usize,
    pub padding: f64,
    pub rows: Vec<Table2Row>,
}

impl Table2 {
    pub fn get(&self, method: &str, distribution: &str) -> Option<&Table2Row> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.distribution == distribution)
    }

    /// One line per method with coverage and area for each distribution.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "method",
            "normal_coverage",
            "normal_area",
            "t3_coverage",
            "t3_area",
        ])?;
        for method in [TABLE2_IM, TABLE2_BAYES, TABLE2_IM_MIN] {
            let mut rec = vec![method.to_string()];
            for dist in ["normal", "t3"] {
                match self.get(method, dist) {
                    Some(r) => {
                        rec.push(format!("{:.4}", r.coverage));
                        rec.push(format!("{:.3}", r.area));
                    }
                    None => rec.extend([String::new(), String::new()]),
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Table2Rep {
    covered: [bool; 3],
    area: [f64; 3],
}

fn table2_rep(gen: &Generator, rng: &mut impl Rng) -> Result<Table2Rep> {
    let data = gen.sample(rng, TABLE2_N)?;
    let y = gen.draw(rng);
    let steps = corrected_steps(TABLE2_N, TABLE2_ALPHA)?;

    let grid = build_grid(&data, TABLE2_PADDING, TABLE2_GRID)?;
    let cell = grid.cell_volume().expect("tensor grid");
    let results = transduce_grid(&data, &DepthMeasure, &grid)?;
    let kept_max = results.iter().filter(|r| r.greater() + 1 > steps).count();
    let kept_min = results.iter().filter(|r| r.count > steps).count();
    let at_y = transducer(&data, &DepthMeasure, &y)?;

    let bayes = JeffreysPredictive::fit(&data)?;
    Ok(Table2Rep {
        covered: [
            at_y.greater() + 1 > steps,
            bayes.mahalanobis_sq(&y)? <= bayes.radius_sq(TABLE2_ALPHA)?,
            at_y.count > steps,
        ],
        area: [
            cell * kept_max as f64,
            bayes.area(TABLE2_ALPHA)?,
            cell * kept_min as f64,
        ],
    })
}

fn mean_and_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let r = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / r;
    if r < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// The bivariate normal and Student-t(3) comparison, both with unit
/// variances and correlation 0.5.
pub fn reproduce_table2(reps: usize, seed: u64) -> Result<Table2> {
    if reps < 1 {
        return Err(Error::domain("at least one replication is required"));
    }
    let mut rows = Vec::new();
    for (dist, gen) in [
        ("normal", Generator::Binormal { rho: 0.5 }),
        ("t3", Generator::BivariateT { df: 3.0, rho: 0.5 }),
    ] {
        let reps_out =
            run_replications(derive_seed(seed, &format!("table2/{gen}")), reps, |rng| {
                table2_rep(&gen, rng)
            })?;
        for (k, method) in [TABLE2_IM, TABLE2_BAYES, TABLE2_IM_MIN]
            .into_iter()
            .enumerate()
        {
            let hits = reps_out.iter().filter(|r| r.covered[k]).count() as f64 / reps as f64;
            let (area, area_se) = mean_and_se(reps_out.iter().map(|r| r.area[k]));
            rows.push(Table2Row {
                method: method.into(),
                distribution: dist.into(),
                coverage: hits,
                coverage_se: (hits * (1.0 - hits) / reps as f64).sqrt(),
                area,
                area_se,
            });
        }
    }
    Ok(Table2 {
        reps,
        seed,
        n: TABLE2_N,
        alpha: TABLE2_ALPHA,
        grid_points: TABLE2_GRID,
        padding: TABLE2_PADDING,
        rows,
    })
}

/// `μ(x) = sin³(2πx³)`.
pub(crate) fn band_truth(x: f64) -> f64 {
    (2.0 * std::f64::consts::PI * x.powi(3)).sin().powi(3)
}

/// `X ~ Unif(0, 1)`, `Y = μ(X) + 0.1 ε` with `ε ~ t₅`.
pub(crate) fn band_pair(rng: &mut impl Rng) -> [f64; 2] {
    let x: f64 = rng.random();
    let e: f64 = StudentT::new(5.0).expect("valid df").sample(rng);
    [x, band_truth(x) + 0.1 * e]
}

pub(crate) fn band_sample(rng: &mut impl Rng, n: usize) -> Result<Sample> {
    let pts: Vec<[f64; 2]> = (0..n).map(|_| band_pair(rng)).collect();
    Sample::from_points(&pts)
}

/// One slice of the band used for the shape check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub x: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub fitted: f64,
    pub truth: f64,
}

/// Coverage of the full-conformal regression band plus a shape check on one
/// data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandExperiment {
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub regressor: String,
    pub coverage: f64,
    pub se: f64,
    /// `coverage ≥ 1 − α − 3·SE`.
    pub coverage_pass: bool,
    /// Every slice is nonempty and strictly inside the response grid.
    pub finite_everywhere: bool,
    /// Fraction of x-grid points where the fitted curve lies inside the band.
    pub fitted_inside: f64,
    pub band: Vec<BandPoint>,
}

const BAND_X_POINTS: usize = 50;
const BAND_Y_POINTS: usize = 400;
const BAND_Y_PADDING: f64 = 0.5;

/// The band for `data` at evenly spaced x over the data's x-range.
pub(crate) fn band_on(
    data: &Sample,
    alpha: f64,
    regressor: &Regressor,
) -> Result<(Vec<BandPoint>, Grid)> {
    let (xlo, xhi) = data.bounds()[0];
    let x_grid: Vec<f64> = (0..BAND_X_POINTS)
        .map(|i| xlo + (xhi - xlo) * i as f64 / (BAND_X_POINTS - 1) as f64)
        .collect();
    let ys: Vec<f64> = data.points().map(|p| p[1]).collect();
    let y_grid = build_grid(&Sample::from_scalars(&ys)?, BAND_Y_PADDING, BAND_Y_POINTS)?;
    let slices = regression_band(data, &x_grid, &y_grid, alpha, regressor)?;
    let bag: Vec<&[f64]> = data.points().collect();
    let fitted = fitted_mean(&bag, &x_grid, regressor)?;
    let band = slices
        .iter()
        .zip(fitted)
        .map(|(s, f)| BandPoint {
            x: s.x,
            lower: s.lower,
            upper: s.upper,
            fitted: f,
            truth: band_truth(s.x),
        })
        .collect();
    Ok((band, y_grid))
}

/// Coverage of the `1 − α` band at a fresh `(X, Y)` over `reps` data sets of
/// size `n`, decided exactly by the transducer, plus the shape check.
pub fn regression_band_experiment(
    n: usize,
    reps: usize,
    alpha: f64,
    seed: u64,
    regressor: &Regressor,
) -> Result<BandExperiment> {
    if reps < 1 {
        return Err(Error::domain("at least one replication is required"));
    }
    let steps = corrected_steps(n, alpha)?;
    let measure = RegressionMeasure::new(regressor.clone());
    let hits = run_replications(derive_seed(seed, "band/coverage"), reps, |rng| {
        let data = band_sample(rng, n)?;
        let new = band_pair(rng);
        Ok(transducer(&data, &measure, &new)?.count > steps)
    })?;
    let coverage = hits.iter().filter(|&&h| h).count() as f64 / reps as f64;
    let se = (coverage * (1.0 - coverage) / reps as f64).sqrt();

    let data = band_sample(&mut replication_rng(derive_seed(seed, "band/shape"), 0), n)?;
    let (band, y_grid) = band_on(&data, alpha, regressor)?;
    let (ylo, yhi) = (y_grid.coords()[0], y_grid.coords()[y_grid.len() - 1]);
    let finite_everywhere = band.iter().all(|b| match (b.lower, b.upper) {
        (Some(l), Some(u)) => l > ylo && u < yhi,
        _ => false,
    });
    let inside = band
        .iter()
        .filter(
            |b| matches!((b.lower, b.upper), (Some(l), Some(u)) if l <= b.fitted && b.fitted <= u),
        )
        .count();
    Ok(BandExperiment {
        n,
        reps,
        alpha,
        seed,
        regressor: regressor.name(),
        coverage,
        se,
        coverage_pass: coverage >= 1.0 - alpha - SLACK_SE * se,
        finite_everywhere,
        fitted_inside: inside as f64 / band.len() as f64,
        band,
    })
}
