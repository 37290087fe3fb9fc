//! Residual-based measure for `(x, y)` pairs with a least-squares regressor.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

use super::NonconformityMeasure;

/// Relative size below which a residual is treated as an exact zero, so that
/// data lying exactly on the model produce exact ties.
pub const RESIDUAL_ZERO_TOL: f64 = 1e-12;

/// Pivot size, relative to the largest, below which a design is rank deficient.
const RANK_TOL: f64 = 1e-10;

const SPLINE_DEGREE: usize = 3;

/// Least-squares mean function estimators.
#[derive(Debug, Clone, PartialEq)]
pub enum Regressor {
    /// Intercept and slope.
    Linear,
    /// Cubic B-spline with `df` basis functions and equally spaced interior knots.
    BSpline { df: usize },
}

impl Default for Regressor {
    fn default() -> Self {
        Regressor::BSpline { df: 12 }
    }
}

impl FromStr for Regressor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        match parts.next() {
            Some("linear") => Ok(Regressor::Linear),
            Some("bspline") => {
                let mut df = 12;
                for p in parts {
                    match p.split_once('=') {
                        Some(("df", v)) => {
                            df = v
                                .parse()
                                .map_err(|_| Error::parse(format!("bad df {v:?}")))?;
                        }
                        _ => return Err(Error::parse(format!("unknown option {p:?}"))),
                    }
                }
                Regressor::bspline(df)
            }
            _ => Err(Error::parse(format!("unknown regressor {s:?}"))),
        }
    }
}

impl Regressor {
    pub fn bspline(df: usize) -> Result<Self> {
        if df < SPLINE_DEGREE + 1 {
            return Err(Error::domain(format!(
                "a cubic B-spline needs at least {} basis functions",
                SPLINE_DEGREE + 1
            )));
        }
        Ok(Regressor::BSpline { df })
    }

    pub fn name(&self) -> String {
        match self {
            Regressor::Linear => "linear".into(),
            Regressor::BSpline { df } => format!("bspline:df={df}"),
        }
    }

    pub fn num_basis(&self) -> usize {
        match self {
            Regressor::Linear => 2,
            Regressor::BSpline { df } => *df,
        }
    }

    /// Design row at `x` for a basis laid out over `[lo, hi]`.
    pub fn basis_row(&self, lo: f64, hi: f64, x: f64) -> Vec<f64> {
        match self {
            Regressor::Linear => vec![1.0, x],
            Regressor::BSpline { df } => bspline_row(*df, lo, hi, x),
        }
    }
}

/// Clamped knot vector with `df - 4` equally spaced interior knots.
fn knots(df: usize, lo: f64, hi: f64) -> Vec<f64> {
    let interior = df - SPLINE_DEGREE - 1;
    let mut t = vec![lo; SPLINE_DEGREE + 1];
    for j in 1..=interior {
        t.push(lo + (hi - lo) * j as f64 / (interior + 1) as f64);
    }
    t.extend(std::iter::repeat_n(hi, SPLINE_DEGREE + 1));
    t
}

fn bspline_row(df: usize, lo: f64, hi: f64, x: f64) -> Vec<f64> {
    let p = SPLINE_DEGREE;
    let t = knots(df, lo, hi);
    let x = x.clamp(lo, hi);
    // knot span with t[span] <= x < t[span + 1]; the right end uses the last span
    let span = if x >= hi {
        df - 1
    } else {
        (p..df).rfind(|&s| t[s] <= x).unwrap_or(p)
    };
    let mut n = vec![0.0; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    n[0] = 1.0;
    for j in 1..=p {
        left[j] = x - t[span + 1 - j];
        right[j] = t[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    let mut row = vec![0.0; df];
    for (j, v) in n.into_iter().enumerate() {
        row[span - p + j] = v;
    }
    row
}

/// Residual of a fit plus whether the mean-only fallback was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualFit {
    pub residual: f64,
    pub fallback: bool,
}

fn x_range(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    })
}

fn snap(residual: f64, scale: f64) -> f64 {
    if residual <= RESIDUAL_ZERO_TOL * scale {
        0.0
    } else {
        residual
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1]))
}

fn as_pairs(bag: &[&[f64]]) -> Result<()> {
    bag.iter().try_for_each(|p| check_dim(2, p.len()))
}

/// `|μ̂(x*) − y*|` where `μ̂` is fit to `bag` alone by least squares.
///
/// The basis spans the x-range of `bag` and `point` together. A rank
/// deficient design falls back to the bag mean and sets `fallback`.
pub fn regression_residual(
    bag: &[&[f64]],
    point: &[f64],
    regressor: &Regressor,
) -> Result<ResidualFit> {
    check_dim(2, point.len())?;
    let (mu, fallback) = fit_at(bag, point[0], regressor)?;
    let scale = 1.0
        + bag
            .iter()
            .map(|p| p[1].abs())
            .fold(point[1].abs(), f64::max);
    Ok(ResidualFit {
        residual: snap((mu - point[1]).abs(), scale),
        fallback,
    })
}

/// The fitted mean `μ̂_bag(x)` at each `x`, with the same basis layout as
/// [`regression_residual`].
pub fn fitted_mean(bag: &[&[f64]], xs: &[f64], regressor: &Regressor) -> Result<Vec<f64>> {
    xs.iter()
        .map(|&x| fit_at(bag, x, regressor).map(|(mu, _)| mu))
        .collect()
}

fn fit_at(bag: &[&[f64]], x: f64, regressor: &Regressor) -> Result<(f64, bool)> {
    if bag.is_empty() {
        return Err(Error::domain("regression needs a nonempty bag"));
    }
    as_pairs(bag)?;
    // canonical row order makes the floating-point fit a function of the multiset
    let mut sorted = bag.to_vec();
    sorted.sort_by(|a, b| lex_cmp(a, b));
    let bag = &sorted[..];
    let (lo, hi) = x_range(bag.iter().map(|p| p[0]).chain([x]));
    let mean = || {
        let mut s = super::ExactSum::new();
        bag.iter().for_each(|p| s.add(p[1]));
        (s.value() / bag.len() as f64, true)
    };
    let p = regressor.num_basis();
    if bag.len() < p || hi <= lo {
        return Ok(mean());
    }
    let mut design = DMatrix::zeros(bag.len(), p);
    for (r, b) in bag.iter().enumerate() {
        for (c, v) in regressor.basis_row(lo, hi, b[0]).into_iter().enumerate() {
            design[(r, c)] = v;
        }
    }
    let y = DVector::from_iterator(bag.len(), bag.iter().map(|b| b[1]));
    let qr = design.qr();
    let r = qr.r();
    let max_pivot = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if max_pivot == 0.0 || (0..p).any(|j| r[(j, j)].abs() <= RANK_TOL * max_pivot) {
        return Ok(mean());
    }
    let qty = qr.q().transpose() * y;
    let Some(beta) = r.solve_upper_triangular(&qty) else {
        return Ok(mean());
    };
    let row = DVector::from_vec(regressor.basis_row(lo, hi, x));
    Ok((row.dot(&beta), false))
}

/// Leave-one-out fits for a fixed set of covariates.
///
/// With `G = ΦᵀΦ` over all points, the fit without point `i` solves
/// `(G − φᵢφᵢᵀ) β = Φᵀy − φᵢ yᵢ`, so its prediction at `xᵢ` is linear in the
/// responses. The per-point solves are done once; residuals for any response
/// vector then cost `O(n p)`.
#[derive(Debug, Clone)]
pub struct LeaveOneOutFits {
    rows: Vec<Vec<f64>>,
    /// `(G − φᵢφᵢᵀ)⁻¹ φᵢ`, or `None` when point `i`'s leave-one-out design is rank deficient.
    leverage_dirs: Vec<Option<Vec<f64>>>,
}

impl LeaveOneOutFits {
    pub fn new(xs: &[f64], regressor: &Regressor) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::domain("leave-one-out fits need at least two points"));
        }
        let (lo, hi) = x_range(xs.iter().copied());
        let p = regressor.num_basis();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| regressor.basis_row(lo, hi, x)).collect();
        if hi <= lo || xs.len() - 1 < p {
            return Ok(LeaveOneOutFits {
                leverage_dirs: vec![None; rows.len()],
                rows,
            });
        }
        let mut gram = DMatrix::<f64>::zeros(p, p);
        for r in &rows {
            for a in 0..p {
                if r[a] == 0.0 {
                    continue;
                }
                for b in 0..p {
                    gram[(a, b)] += r[a] * r[b];
                }
            }
        }
        let leverage_dirs = rows
            .iter()
            .map(|r| {
                let phi = DVector::from_column_slice(r);
                let g = &gram - &phi * phi.transpose();
                let chol = g.cholesky()?;
                let l = chol.l_dirty();
                let diag: Vec<f64> = (0..p).map(|j| l[(j, j)].abs()).collect();
                let max = diag.iter().copied().fold(0.0, f64::max);
                // Cholesky pivots of a singular Gram matrix only fall to about √ε
                if diag.iter().any(|&d| d <= RANK_TOL.sqrt() * max) {
                    return None;
                }
                Some(chol.solve(&phi).as_slice().to_vec())
            })
            .collect();
        Ok(LeaveOneOutFits {
            rows,
            leverage_dirs,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Leave-one-out absolute residuals for responses `ys`, plus the
    /// per-point fallback flags.
    pub fn residuals(&self, ys: &[f64]) -> Result<Vec<ResidualFit>> {
        check_dim(self.rows.len(), ys.len())?;
        let p = self.rows[0].len();
        let mut b = vec![0.0; p];
        for (r, &y) in self.rows.iter().zip(ys) {
            for (bj, rj) in b.iter_mut().zip(r) {
                *bj += rj * y;
            }
        }
        let mut total = super::ExactSum::new();
        ys.iter().for_each(|&y| total.add(y));
        let scale = 1.0 + ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        let m = (ys.len() - 1) as f64;
        Ok(self
            .rows
            .iter()
            .zip(&self.leverage_dirs)
            .zip(ys)
            .map(|((row, dir), &y)| match dir {
                Some(a) => {
                    let ab: f64 = a.iter().zip(&b).map(|(u, v)| u * v).sum();
                    let aphi: f64 = a.iter().zip(row).map(|(u, v)| u * v).sum();
                    ResidualFit {
                        residual: snap((ab - aphi * y - y).abs(), scale),
                        fallback: false,
                    }
                }
                None => {
                    let mut s = total.clone();
                    s.add(-y);
                    ResidualFit {
                        residual: snap((s.value() / m - y).abs(), scale),
                        fallback: true,
                    }
                }
            })
            .collect())
    }
}

/// `Ψ(bag, (x*, y*)) = |μ̂_bag(x*) − y*|`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionMeasure {
    pub regressor: Regressor,
}

impl RegressionMeasure {
    pub fn new(regressor: Regressor) -> Self {
        RegressionMeasure { regressor }
    }
}

impl NonconformityMeasure for RegressionMeasure {
    fn name(&self) -> String {
        format!("regress:{}", self.regressor.name())
    }

    fn dim(&self) -> Option<usize> {
        Some(2)
    }

    fn score(&self, bag: &[&[f64]], point: &[f64]) -> Result<f64> {
        Ok(regression_residual(bag, point, &self.regressor)?.residual)
    }

    // `scores` stays on the per-point refits: the shortcut through
    // `LeaveOneOutFits` rounds differently and can split exact residual ties.
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonconformity::loo_scores;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn refs(v: &[[f64; 2]]) -> Vec<&[f64]> {
        v.iter().map(|p| &p[..]).collect()
    }

    #[test]
    fn line_examples() {
        let bag: Vec<[f64; 2]> = (0..5).map(|i| [i as f64, 2.0 * i as f64]).collect();
        let exact = regression_residual(&refs(&bag), &[3.0, 6.0], &Regressor::Linear).unwrap();
        assert_eq!(
            exact,
            ResidualFit {
                residual: 0.0,
                fallback: false
            }
        );
        let off = regression_residual(&refs(&bag), &[3.0, 7.0], &Regressor::Linear).unwrap();
        assert!((off.residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_design_falls_back_to_mean() {
        let bag = [[1.0, 0.0], [1.0, 4.0]];
        let fit = regression_residual(&refs(&bag), &[1.0, 1.0], &Regressor::Linear).unwrap();
        assert!(fit.fallback);
        assert_eq!(fit.residual, 1.0);
        let few = [[0.0, 1.0], [1.0, 2.0], [2.0, 3.0]];
        let fit = regression_residual(&refs(&few), &[0.5, 0.0], &Regressor::default()).unwrap();
        assert!(fit.fallback);
        assert_eq!(fit.residual, 2.0);
    }

    #[test]
    fn parses_names() {
        assert_eq!(
            "bspline:df=8".parse::<Regressor>().unwrap(),
            Regressor::BSpline { df: 8 }
        );
        assert_eq!(
            "bspline".parse::<Regressor>().unwrap(),
            Regressor::BSpline { df: 12 }
        );
        assert!("bspline:df=3".parse::<Regressor>().is_err());
        assert!("poly".parse::<Regressor>().is_err());
    }

    /// Cox–de Boor recursion straight from the definition.
    fn naive_basis(t: &[f64], i: usize, k: usize, x: f64, last: bool) -> f64 {
        if k == 0 {
            let inside = t[i] <= x && x < t[i + 1];
            let right_end = last
                && x == t[i + 1]
                && t[i] < t[i + 1]
                && t[i + 1] == *t.last().unwrap()
                && t[i + 2..].iter().all(|&v| v == t[i + 1]);
            return if inside || right_end { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        if t[i + k] > t[i] {
            v += (x - t[i]) / (t[i + k] - t[i]) * naive_basis(t, i, k - 1, x, last);
        }
        if t[i + k + 1] > t[i + 1] {
            v += (t[i + k + 1] - x) / (t[i + k + 1] - t[i + 1])
                * naive_basis(t, i + 1, k - 1, x, last);
        }
        v
    }

    #[test]
    fn spline_basis_matches_recursion() {
        let (lo, hi, df) = (-0.3, 2.1, 12);
        let t = knots(df, lo, hi);
        assert_eq!(t.len(), df + 4);
        for k in 0..=200 {
            let x = lo + (hi - lo) * k as f64 / 200.0;
            let row = bspline_row(df, lo, hi, x);
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            for (i, &v) in row.iter().enumerate() {
                let expect = naive_basis(&t, i, 3, x, x == hi);
                assert!((v - expect).abs() < 1e-12, "x={x} i={i} {v} vs {expect}");
            }
        }
    }

    /// Independent least-squares solve through the normal equations with
    /// Gaussian elimination.
    fn normal_equations_residual(bag: &[[f64; 2]], point: [f64; 2], df: usize) -> f64 {
        let reg = Regressor::BSpline { df };
        let lo = bag.iter().map(|p| p[0]).fold(point[0], f64::min);
        let hi = bag.iter().map(|p| p[0]).fold(point[0], f64::max);
        let mut a = vec![vec![0.0; df + 1]; df];
        for p in bag {
            let r = reg.basis_row(lo, hi, p[0]);
            for i in 0..df {
                for j in 0..df {
                    a[i][j] += r[i] * r[j];
                }
                a[i][df] += r[i] * p[1];
            }
        }
        for c in 0..df {
            let piv = (c..df)
                .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
                .unwrap();
            a.swap(c, piv);
            for r in 0..df {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for k in c..=df {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        let beta: Vec<f64> = (0..df).map(|i| a[i][df] / a[i][i]).collect();
        let row = reg.basis_row(lo, hi, point[0]);
        (row.iter().zip(&beta).map(|(u, v)| u * v).sum::<f64>() - point[1]).abs()
    }

    fn spline_data(n: usize, seed: u64) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: f64 = rng.random();
                let mu = (std::f64::consts::TAU * x.powi(3)).sin().powi(3);
                [x, mu + 0.1 * rng.random_range(-1.0..1.0)]
            })
            .collect()
    }

    #[test]
    fn spline_residuals_match_normal_equations() {
        for seed in 0..5 {
            let data = spline_data(200, seed);
            let (bag, point) = data.split_at(199);
            let fit = regression_residual(&refs(bag), &point[0], &Regressor::default()).unwrap();
            assert!(!fit.fallback);
            let oracle = normal_equations_residual(bag, point[0], 12);
            assert!(
                (fit.residual - oracle).abs() < 1e-8,
                "{} vs {oracle}",
                fit.residual
            );
        }
    }

    #[test]
    fn leave_one_out_fits_match_direct_solves() {
        for (seed, reg) in [
            (1, Regressor::default()),
            (2, Regressor::Linear),
            (3, Regressor::BSpline { df: 6 }),
        ] {
            let data = spline_data(60, seed);
            let aug = refs(&data);
            let (xs, ys): (Vec<f64>, Vec<f64>) = data.iter().map(|p| (p[0], p[1])).unzip();
            let fast = LeaveOneOutFits::new(&xs, &reg)
                .unwrap()
                .residuals(&ys)
                .unwrap();
            let slow = loo_scores(&RegressionMeasure::new(reg), &aug).unwrap();
            let fast: Vec<f64> = fast.iter().map(|f| f.residual).collect();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn permutation_invariant() {
        let data = spline_data(40, 9);
        let mut rev = data.clone();
        rev.reverse();
        let point = [0.37, 0.2];
        for reg in [Regressor::default(), Regressor::Linear] {
            let a = regression_residual(&refs(&data), &point, &reg)
                .unwrap()
                .residual;
            let b = regression_residual(&refs(&rev), &point, &reg)
                .unwrap()
                .residual;
            assert_eq!(a, b);
            let mut with_point = data.clone();
            with_point.push(point);
            let mut rev_point = rev.clone();
            rev_point.insert(7, point);
            let m = RegressionMeasure::new(reg);
            let mut s1 = m.scores(&refs(&with_point)).unwrap();
            let mut s2 = m.scores(&refs(&rev_point)).unwrap();
            s1.sort_by(f64::total_cmp);
            s2.sort_by(f64::total_cmp);
            assert_eq!(s1, s2);
        }
    }
}
