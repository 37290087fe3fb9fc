//! Upper and lower prediction probabilities from a plausibility contour.
//!
//! Assertions are evaluated on the contour's grid: `upper(A)` is the largest
//! contour value at a grid point in `A` (0 when there is none) and
//! `lower(A) = 1 − upper(Aᶜ)`.

use serde::{Deserialize, Serialize};

use crate::assertion::Assertion;
use crate::contour::PlausibilityContour;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ConsonantPredictor {
    contour: PlausibilityContour,
}

/// One row of a credal table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredalRow {
    pub assertion: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ConsonantPredictor {
    pub fn new(contour: PlausibilityContour) -> Self {
        ConsonantPredictor { contour }
    }

    pub fn contour(&self) -> &PlausibilityContour {
        &self.contour
    }

    /// Largest count over the masked grid points, `None` when the mask is all false.
    fn max_count(&self, mask: &[bool]) -> Option<usize> {
        self.contour
            .counts()
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&c, _)| c)
            .max()
    }

    fn to_value(&self, count: Option<usize>) -> f64 {
        count.map_or(0.0, |c| c as f64 / (self.contour.n() + 1) as f64)
    }

    pub fn upper_probability(&self, a: &Assertion) -> Result<f64> {
        let mask = a.mask_on(self.contour.grid())?;
        Ok(self.to_value(self.max_count(&mask)))
    }

    pub fn lower_probability(&self, a: &Assertion) -> Result<f64> {
        let mask = a.mask_on(self.contour.grid())?;
        let outside: Vec<bool> = mask.iter().map(|m| !m).collect();
        Ok(1.0 - self.to_value(self.max_count(&outside)))
    }

    /// `(lower, upper)` plus a warning when `A` misses every grid point.
    pub fn evaluate(&self, a: &Assertion) -> Result<(f64, f64, Option<String>)> {
        let mask = a.mask_on(self.contour.grid())?;
        let outside: Vec<bool> = mask.iter().map(|m| !m).collect();
        let inside = self.max_count(&mask);
        let warning = inside
            .is_none()
            .then(|| format!("assertion {a} contains no grid point; upper probability set to 0"));
        Ok((
            1.0 - self.to_value(self.max_count(&outside)),
            self.to_value(inside),
            warning,
        ))
    }

    /// Both bounds for each assertion, in input order; failures become error rows.
    pub fn credal_pair(&self, assertions: &[Assertion]) -> Vec<CredalRow> {
        assertions
            .iter()
            .map(|a| match self.evaluate(a) {
                Ok((lower, upper, warning)) => CredalRow {
                    assertion: a.to_string(),
                    lower: Some(lower),
                    upper: Some(upper),
                    warning,
                    error: None,
                },
                Err(e) => CredalRow {
                    assertion: a.to_string(),
                    lower: None,
                    upper: None,
                    warning: None,
                    error: Some(e.to_string()),
                },
            })
            .collect()
    }
}
