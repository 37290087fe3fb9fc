use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::baselines::Generator;
use crate::conformal::{contour_on_grid, regression_contour};
use crate::error::Result;
use crate::grid::build_grid;
use crate::imrandomset::twosided_contour;
use crate::level::k_n;
use crate::nonconformity::{DepthMeasure, MedianDistance, Regressor};

use super::rng::{derive_seed, replication_rng};
use super::tables::{band_on, band_sample};

/// A named numeric table, ready for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

impl DataTable {
    fn new(name: &str, columns: &[&str], metadata: &BTreeMap<String, String>) -> Self {
        DataTable {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: metadata.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(f64::to_string))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

fn metadata(seed: u64, generator: &Generator, n: usize) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("seed".to_string(), seed.to_string()),
        ("generator".to_string(), generator.to_string()),
        ("n".to_string(), n.to_string()),
    ])
}

/// Univariate data with the median-measure contour and the two-sided contour.
pub fn hist_figure(generator: &Generator, n: usize, seed: u64) -> Result<Vec<DataTable>> {
    let data = generator.sample(&mut replication_rng(derive_seed(seed, "figure/hist"), 0), n)?;
    let meta = metadata(seed, generator, n);
    let mut points = DataTable::new("data", &["y"], &meta);
    points.rows = data.coords().iter().map(|&y| vec![y]).collect();

    let grid = build_grid(&data, 0.25, 400)?.with_extra_points(data.coords())?;
    let median = contour_on_grid(&data, &MedianDistance, &grid)?;
    let mut contour = DataTable::new("contour", &["y", "median", "twosided"], &meta);
    for (i, &y) in grid.coords().iter().enumerate() {
        contour
            .rows
            .push(vec![y, median.value(i), twosided_contour(&data, y)?]);
    }
    Ok(vec![contour, points])
}

/// Bivariate data with its depth contour and level-`α` region membership.
pub fn contour_figure(
    generator: &Generator,
    n: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<DataTable>> {
    let data = generator.sample(
        &mut replication_rng(derive_seed(seed, "figure/contour"), 0),
        n,
    )?;
    let mut meta = metadata(seed, generator, n);
    meta.insert("alpha".into(), alpha.to_string());
    let threshold = k_n(n, alpha)?;
    let grid = build_grid(&data, 0.25, 80)?;
    let contour = contour_on_grid(&data, &DepthMeasure, &grid)?;
    let mut table = DataTable::new("contour", &["x", "y", "pi", "in_region"], &meta);
    for (i, p) in grid.points().enumerate() {
        let v = contour.value(i);
        table
            .rows
            .push(vec![p[0], p[1], v, f64::from(u8::from(v > threshold))]);
    }
    let mut points = DataTable::new("data", &["x", "y"], &meta);
    points.rows = data.points().map(|p| p.to_vec()).collect();
    Ok(vec![table, points])
}

/// Regression data, the `1 − α` band with fitted and true curves, and
/// response contours at a few covariate values.
pub fn band_figure(
    n: usize,
    alpha: f64,
    seed: u64,
    regressor: &Regressor,
) -> Result<Vec<DataTable>> {
    let data = band_sample(&mut replication_rng(derive_seed(seed, "figure/band"), 0), n)?;
    let meta = BTreeMap::from([
        ("seed".to_string(), seed.to_string()),
        ("n".to_string(), n.to_string()),
        ("alpha".to_string(), alpha.to_string()),
        ("regressor".to_string(), regressor.name()),
    ]);
    let (band, y_grid) = band_on(&data, alpha, regressor)?;
    let mut table = DataTable::new("band", &["x", "lower", "upper", "fitted", "truth"], &meta);
    for b in &band {
        table.rows.push(vec![
            b.x,
            b.lower.unwrap_or(f64::NAN),
            b.upper.unwrap_or(f64::NAN),
            b.fitted,
            b.truth,
        ]);
    }
    let mut slices = DataTable::new("slices", &["x", "y", "pi"], &meta);
    for x in [0.2, 0.5, 0.8] {
        let c = regression_contour(&data, x, regressor, &y_grid)?;
        for (i, &y) in y_grid.coords().iter().enumerate() {
            slices.rows.push(vec![x, y, c.value(i)]);
        }
    }
    let mut points = DataTable::new("data", &["x", "y"], &meta);
    points.rows = data.points().map(|p| p.to_vec()).collect();
    Ok(vec![table, slices, points])
}
