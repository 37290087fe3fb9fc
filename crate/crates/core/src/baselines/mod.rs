//! Precise-probability baselines: the Dirichlet-process posterior predictive
//! and the normal-model predictive under the Jeffreys prior.

mod generators;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};

pub use generators::Generator;

use crate::assertion::Interval;
use crate::error::{Error, Result};
use crate::sample::Sample;

/// Probability tolerance of the quantile search.
pub const QUANTILE_TOL: f64 = 1e-10;

/// `(1/(δ+n)) G + (1 − 1/(δ+n)) ℙ_n` with `G` a normal base measure.
#[derive(Debug, Clone)]
pub struct DpPredictive {
    base: Normal,
    delta: f64,
    sorted: Vec<f64>,
}

impl DpPredictive {
    /// Base measure N(0, 1) and precision 1.
    pub fn new(data: &Sample) -> Result<Self> {
        Self::with_base(data, 0.0, 1.0, 1.0)
    }

    pub fn with_base(data: &Sample, mean: f64, sd: f64, delta: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::domain(
                "the predictive needs at least one observation",
            ));
        }
        if !(delta > 0.0) {
            return Err(Error::domain("precision must be positive"));
        }
        let base =
            Normal::new(mean, sd).map_err(|e| Error::domain(format!("base measure: {e}")))?;
        Ok(DpPredictive {
            base,
            delta,
            sorted: data.order_statistics()?,
        })
    }

    fn base_weight(&self) -> f64 {
        1.0 / (self.delta + self.sorted.len() as f64)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let a = self.base_weight();
        let below = self.sorted.partition_point(|&y| y <= t);
        a * self.base.cdf(t) + (1.0 - a) * below as f64 / self.sorted.len() as f64
    }

    /// Leftmost `t` with `cdf(t) ≥ p`; atoms are returned exactly.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!(
                "quantile level {p} is outside (0, 1)"
            )));
        }
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        while self.cdf(lo) >= p {
            lo *= 2.0;
        }
        while self.cdf(hi) < p {
            hi *= 2.0;
        }
        // invariant: cdf(lo) < p ≤ cdf(hi)
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
            if self.cdf(hi) - p <= QUANTILE_TOL && hi - lo <= 1e-12 * (1.0 + hi.abs()) {
                break;
            }
        }
        // a jump inside the final bracket is the leftmost achieving point
        let k = self.sorted.partition_point(|&y| y <= lo);
        match self.sorted.get(k) {
            Some(&atom) if atom <= hi && self.cdf(atom) >= p => Ok(atom),
            _ => Ok(hi),
        }
    }

    /// `[Q(α/2), Q(1 − α/2)]`.
    pub fn interval(&self, alpha: f64) -> Result<Interval> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha = {alpha} is outside (0, 1)")));
        }
        Interval::closed(
            self.quantile(alpha / 2.0)?,
            self.quantile(1.0 - alpha / 2.0)?,
        )
    }

    /// Draw from the predictive.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.base_weight() {
            self.base.inverse_cdf(rng.random::<f64>())
        } else {
            self.sorted[rng.random_range(0..self.sorted.len())]
        }
    }
}

pub fn dp_predictive_cdf(pred: &DpPredictive, t: f64) -> f64 {
    pred.cdf(t)
}

pub fn dp_interval(pred: &DpPredictive, alpha: f64) -> Result<Interval> {
    pred.interval(alpha)
}

/// Multivariate Student t predictive with `n − d` degrees of freedom,
/// location `ȳ` and scale `(n+1)/(n(n−d)) · S`, `S` the centred
/// sum-of-squares matrix.
#[derive(Debug, Clone)]
pub struct JeffreysPredictive {
    n: usize,
    center: DVector<f64>,
    scale: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

/// Ellipsoid `{y : (y − c)ᵀ M⁻¹ (y − c) ≤ r²}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    /// Row-major `M`.
    pub shape: Vec<f64>,
    pub radius_sq: f64,
}

impl JeffreysPredictive {
    pub fn fit(data: &Sample) -> Result<Self> {
        let (n, d) = (data.len(), data.dim());
        if n <= d {
            return Err(Error::domain(format!(
                "the Jeffreys predictive needs n > d, got n = {n}, d = {d}"
            )));
        }
        let mut center = DVector::zeros(d);
        for p in data.points() {
            center += DVector::from_column_slice(p);
        }
        center /= n as f64;
        let mut s = DMatrix::zeros(d, d);
        for p in data.points() {
            let r = DVector::from_column_slice(p) - &center;
            s += &r * r.transpose();
        }
        let diag: f64 = s.diagonal().iter().product();
        if !(s.determinant() > 1e-12 * diag) {
            return Err(Error::domain("scatter matrix is singular"));
        }
        let c = (n + 1) as f64 / (n as f64 * (n - d) as f64);
        let scale = s * c;
        let chol = scale
            .clone()
            .cholesky()
            .ok_or_else(|| Error::domain("scatter matrix is singular"))?;
        Ok(JeffreysPredictive {
            n,
            center,
            scale,
            chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn df(&self) -> usize {
        self.n - self.dim()
    }

    /// `(y − ȳ)ᵀ (cS)⁻¹ (y − ȳ)`.
    pub fn mahalanobis_sq(&self, y: &[f64]) -> Result<f64> {
        crate::error::check_dim(self.dim(), y.len())?;
        let r = DVector::from_column_slice(y) - &self.center;
        let z = self.chol.solve(&r);
        Ok(r.dot(&z))
    }

    /// `d · F_{d, n−d}(1 − α)`.
    pub fn radius_sq(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha = {alpha} is outside (0, 1)")));
        }
        let f = FisherSnedecor::new(self.dim() as f64, self.df() as f64)
            .map_err(|e| Error::domain(format!("F distribution: {e}")))?;
        Ok(self.dim() as f64 * f.inverse_cdf(1.0 - alpha))
    }

    /// Highest-density `1 − α` predictive region.
    pub fn region(&self, alpha: f64) -> Result<Ellipsoid> {
        let d = self.dim();
        Ok(Ellipsoid {
            center: self.center.iter().copied().collect(),
            shape: (0..d * d).map(|k| self.scale[(k / d, k % d)]).collect(),
            radius_sq: self.radius_sq(alpha)?,
        })
    }

    pub fn contains(&self, region: &Ellipsoid, y: &[f64]) -> Result<bool> {
        Ok(self.mahalanobis_sq(y)? <= region.radius_sq)
    }

    /// `π r² √det(cS)` in the plane.
    pub fn area(&self, alpha: f64) -> Result<f64> {
        crate::error::check_dim(2, self.dim())?;
        Ok(std::f64::consts::PI * self.radius_sq(alpha)? * self.scale.determinant().sqrt())
    }

    /// Draw from the predictive.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
        let chi: f64 = ChiSquared::new(self.df() as f64)
            .expect("positive df")
            .sample(rng);
        let y = &self.center + self.chol.l() * z * (self.df() as f64 / chi).sqrt();
        y.iter().copied().collect()
    }
}

pub fn jeffreys_region(pred: &JeffreysPredictive, alpha: f64) -> Result<Ellipsoid> {
    pred.region(alpha)
}
