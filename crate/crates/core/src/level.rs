//! Finite-sample level correction.
//!
//! Contour values live on the lattice `{1/(n+1), ..., 1}`, so a nominal level
//! `alpha` is rounded down onto that lattice before thresholding.

use crate::error::{Error, Result};

/// Number of lattice steps `floor((n+1) * alpha)` below `alpha`.
pub fn corrected_steps(n: usize, alpha: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha = {alpha} is outside [0, 1]")));
    }
    let m = (n + 1) as f64;
    let mut steps = (m * alpha).floor() as usize;
    // (n+1)*alpha can land a hair above an integer it should equal; the
    // product of two floats is checked back against the exact quotient.
    if steps > 0 && (steps as f64) / m > alpha {
        steps -= 1;
    }
    Ok(steps.min(n + 1))
}

/// `k_n(alpha) = floor((n+1) alpha) / (n+1)`.
pub fn k_n(n: usize, alpha: f64) -> Result<f64> {
    let steps = corrected_steps(n, alpha)?;
    Ok(steps as f64 / (n + 1) as f64)
}
