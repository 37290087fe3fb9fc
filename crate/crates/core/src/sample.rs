use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered collection of `d`-dimensional points stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    dim: usize,
    coords: Vec<f64>,
}

impl Sample {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("points must have dimension at least 1"));
        }
        if coords.is_empty() {
            return Err(Error::domain("sample must contain at least one point"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::domain(format!(
                "{} coordinates cannot be split into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::domain(format!("non-finite coordinate {bad}")));
        }
        Ok(Sample { dim, coords })
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Sample::new(1, values.to_vec())
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::domain("sample must contain at least one point"))?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Sample::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The single coordinate of every point; only meaningful for `d = 1`.
    pub fn scalars(&self) -> Result<&[f64]> {
        if self.dim != 1 {
            return Err(Error::Dimension {
                expected: 1,
                got: self.dim,
            });
        }
        Ok(&self.coords)
    }

    /// Sorted copy of a one-dimensional sample.
    pub fn order_statistics(&self) -> Result<Vec<f64>> {
        let mut v = self.scalars()?.to_vec();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    /// Per-axis `(min, max)`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|a| {
                self.points()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                        (lo.min(p[a]), hi.max(p[a]))
                    })
            })
            .collect()
    }

    /// A new sample with `point` appended.
    pub fn with_point(&self, point: &[f64]) -> Result<Sample> {
        crate::error::check_dim(self.dim, point.len())?;
        let mut coords = self.coords.clone();
        coords.extend_from_slice(point);
        Sample::new(self.dim, coords)
    }

    /// Reads one point per CSV row. A first row that does not parse as
    /// numbers is taken as a header.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(input);
        let mut dim = None;
        let mut coords = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let row: std::result::Result<Vec<f64>, _> =
                record.iter().map(str::parse::<f64>).collect();
            let row = match row {
                Ok(row) => row,
                Err(_) if i == 0 => continue,
                Err(e) => return Err(Error::parse(format!("row {}: {e}", i + 1))),
            };
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::parse(format!(
                        "row {} has {} columns, expected {d}",
                        i + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            coords.extend(row);
        }
        Sample::new(dim.unwrap_or(0), coords)
    }

    /// Writes one point per row under the header `x0, x1, ...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record((0..self.dim).map(|a| format!("x{a}")))?;
        for p in self.points() {
            w.write_record(p.iter().map(f64::to_string))?;
        }
        w.flush()?;
        Ok(())
    }
}
