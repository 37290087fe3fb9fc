use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::grid::Grid;

/// Conformal plausibility values on a grid, stored as exact counts.
///
/// The value at grid point `i` is `counts[i] / (n + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlausibilityContour {
    grid: Grid,
    counts: Vec<usize>,
    n: usize,
}

impl PlausibilityContour {
    pub fn new(grid: Grid, counts: Vec<usize>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("contour needs n >= 1"));
        }
        if counts.len() != grid.len() {
            return Err(Error::domain(format!(
                "{} counts for a grid of {} points",
                counts.len(),
                grid.len()
            )));
        }
        if let Some(&c) = counts.iter().find(|&&c| c > n + 1) {
            return Err(Error::domain(format!(
                "count {c} exceeds n + 1 = {}",
                n + 1
            )));
        }
        Ok(PlausibilityContour { grid, counts, n })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.counts[i] as f64 / (self.n + 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    /// Value at the grid point nearest to `point`.
    pub fn value_at(&self, point: &[f64]) -> Result<f64> {
        Ok(self.value(self.grid.nearest_index(point)?))
    }

    pub fn max_count(&self) -> usize {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Index of the first grid point attaining the maximum.
    pub fn argmax(&self) -> usize {
        let m = self.max_count();
        self.counts.iter().position(|&c| c == m).unwrap_or(0)
    }

    /// A message when no grid point reaches plausibility one, which usually
    /// means the grid misses the most conforming candidate.
    pub fn normalization_warning(&self) -> Option<String> {
        let m = self.max_count();
        (m != self.n + 1).then(|| {
            format!(
                "contour maximum is {m}/{} < 1; the grid may miss the most conforming point",
                self.n + 1
            )
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.grid.dim();
        let mut header: Vec<String> = (0..dim).map(|a| format!("x{a}")).collect();
        header.extend(["count", "n", "value"].map(String::from));
        w.write_record(&header)?;
        for (i, p) in self.grid.points().enumerate() {
            let mut rec: Vec<String> = p.iter().map(f64::to_string).collect();
            rec.push(self.counts[i].to_string());
            rec.push(self.n.to_string());
            rec.push(self.value(i).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let dim = header.iter().filter(|h| h.starts_with('x')).count();
        if dim == 0 || header.len() != dim + 3 {
            return Err(Error::parse(
                "contour CSV needs columns x0..x{d-1}, count, n, value",
            ));
        }
        let mut coords = Vec::new();
        let mut counts = Vec::new();
        let mut n = None;
        for rec in r.records() {
            let rec = rec?;
            for a in 0..dim {
                coords.push(parse_field::<f64>(&rec[a])?);
            }
            counts.push(parse_field::<usize>(&rec[dim])?);
            let row_n = parse_field::<usize>(&rec[dim + 1])?;
            match n {
                None => n = Some(row_n),
                Some(m) if m != row_n => {
                    return Err(Error::parse("rows disagree on n"));
                }
                _ => {}
            }
        }
        let n = n.ok_or_else(|| Error::parse("contour CSV has no rows"))?;
        PlausibilityContour::new(Grid::from_rows(dim, coords)?, counts, n)
    }

    pub fn to_document(&self, metadata: BTreeMap<String, String>) -> ContourDocument {
        ContourDocument {
            dim: self.grid.dim(),
            n: self.n,
            rows: self
                .grid
                .points()
                .enumerate()
                .map(|(i, p)| ContourRow {
                    point: p.to_vec(),
                    count: self.counts[i],
                    n: self.n,
                    value: self.value(i),
                })
                .collect(),
            metadata,
        }
    }

    pub fn write_json<W: Write>(&self, out: W, metadata: BTreeMap<String, String>) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.to_document(metadata))?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        let doc: ContourDocument = serde_json::from_reader(input)?;
        doc.into_contour()
    }

    /// Reads either format, choosing JSON when the first non-blank byte is `{`.
    pub fn read_any(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            PlausibilityContour::read_json(text.as_bytes())
        } else {
            PlausibilityContour::read_csv(text.as_bytes())
        }
    }
}

fn parse_field<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse::<T>()
        .map_err(|_| Error::parse(format!("bad field {s:?}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRow {
    pub point: Vec<f64>,
    pub count: usize,
    pub n: usize,
    pub value: f64,
}

/// JSON form of a contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourDocument {
    pub dim: usize,
    pub n: usize,
    pub rows: Vec<ContourRow>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl ContourDocument {
    pub fn into_contour(self) -> Result<PlausibilityContour> {
        let mut coords = Vec::with_capacity(self.rows.len() * self.dim);
        let mut counts = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            check_dim(self.dim, row.point.len())?;
            if row.n != self.n {
                return Err(Error::parse("rows disagree on n"));
            }
            coords.extend_from_slice(&row.point);
            counts.push(row.count);
        }
        PlausibilityContour::new(Grid::from_rows(self.dim, coords)?, counts, self.n)
    }
}
