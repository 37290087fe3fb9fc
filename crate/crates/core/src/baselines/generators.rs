//! Data-generating distributions for the simulation studies.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Cauchy, ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Generator {
    /// Mean zero with the given variance.
    Normal { variance: f64 },
    /// Standard Cauchy.
    Cauchy,
    /// Azzalini skew-normal with location 0, scale 1.
    SkewNormal { shape: f64 },
    /// Standard bivariate normal with correlation `rho`.
    Binormal { rho: f64 },
    /// Bivariate Student t with `df` degrees of freedom, scaled so its
    /// covariance has unit variances and correlation `rho` (needs `df > 2`).
    BivariateT { df: f64, rho: f64 },
    /// Every draw equals `value`.
    Degenerate { value: f64 },
}

impl Generator {
    pub fn dim(&self) -> usize {
        match self {
            Generator::Binormal { .. } | Generator::BivariateT { .. } => 2,
            _ => 1,
        }
    }

    fn correlated_pair<R: Rng + ?Sized>(rng: &mut R, rho: f64) -> [f64; 2] {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        [z1, rho * z1 + (1.0 - rho * rho).sqrt() * z2]
    }

    /// Appends one draw to `out`.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match *self {
            Generator::Normal { variance } => {
                let z: f64 = StandardNormal.sample(rng);
                out.push(variance.sqrt() * z);
            }
            Generator::Cauchy => out.push(Cauchy::new(0.0, 1.0).expect("unit scale").sample(rng)),
            Generator::SkewNormal { shape } => {
                let delta = shape / (1.0 + shape * shape).sqrt();
                let z0: f64 = StandardNormal.sample(rng);
                let z1: f64 = StandardNormal.sample(rng);
                out.push(delta * z0.abs() + (1.0 - delta * delta).sqrt() * z1);
            }
            Generator::Binormal { rho } => out.extend(Self::correlated_pair(rng, rho)),
            Generator::BivariateT { df, rho } => {
                let [a, b] = Self::correlated_pair(rng, rho);
                let chi: f64 = ChiSquared::new(df).expect("positive df").sample(rng);
                // scale matrix Σ (df − 2)/df gives covariance Σ
                let s = ((df - 2.0) / chi).sqrt();
                out.extend([a * s, b * s]);
            }
            Generator::Degenerate { value } => out.push(value),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Sample> {
        let mut coords = Vec::with_capacity(n * self.dim());
        for _ in 0..n {
            self.draw_into(rng, &mut coords);
        }
        Sample::new(self.dim(), coords)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        self.draw_into(rng, &mut out);
        out
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Normal { variance } if *variance == 1.0 => write!(f, "normal"),
            Generator::Normal { variance } => write!(f, "normal{variance}"),
            Generator::Cauchy => write!(f, "cauchy"),
            Generator::SkewNormal { shape } if *shape == 1.0 => write!(f, "skewnormal"),
            Generator::SkewNormal { shape } => write!(f, "skewnormal{shape}"),
            Generator::Binormal { rho } if *rho == 0.5 => write!(f, "binormal"),
            Generator::Binormal { rho } => write!(f, "binormal:rho={rho}"),
            Generator::BivariateT { df, rho } if *rho == 0.5 => write!(f, "bit{df}"),
            Generator::BivariateT { df, rho } => write!(f, "bit{df}:rho={rho}"),
            Generator::Degenerate { value } => write!(f, "degenerate{value}"),
        }
    }
}

fn number(s: &str, what: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::parse(format!("bad {what} {s:?}")))
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, rho) = match s.split_once(":rho=") {
            Some((h, r)) => (h, Some(number(r, "correlation")?)),
            None => (s, None),
        };
        let suffix = |prefix: &str| head.strip_prefix(prefix).filter(|r| !r.is_empty());
        let g = if head == "normal" {
            Generator::Normal { variance: 1.0 }
        } else if head == "cauchy" {
            Generator::Cauchy
        } else if head == "skewnormal" {
            Generator::SkewNormal { shape: 1.0 }
        } else if head == "binormal" {
            Generator::Binormal {
                rho: rho.unwrap_or(0.5),
            }
        } else if head == "degenerate" {
            Generator::Degenerate { value: 0.0 }
        } else if let Some(v) = suffix("normal") {
            Generator::Normal {
                variance: number(v, "variance")?,
            }
        } else if let Some(a) = suffix("skewnormal") {
            Generator::SkewNormal {
                shape: number(a, "skewness")?,
            }
        } else if let Some(df) = suffix("bit") {
            Generator::BivariateT {
                df: number(df, "degrees of freedom")?,
                rho: rho.unwrap_or(0.5),
            }
        } else if let Some(v) = suffix("degenerate") {
            Generator::Degenerate {
                value: number(v, "value")?,
            }
        } else {
            return Err(Error::parse(format!(
                "unknown generator {s:?}; expected normal[VAR], cauchy, skewnormal[SHAPE], binormal, bit<DF>, degenerate[VALUE]"
            )));
        };
        match g {
            Generator::Normal { variance } if !(variance > 0.0) => {
                Err(Error::domain("variance must be positive"))
            }
            Generator::BivariateT { df, .. } if !(df > 2.0) => Err(Error::domain(
                "bivariate t needs more than 2 degrees of freedom",
            )),
            Generator::Binormal { rho } | Generator::BivariateT { rho, .. }
                if !(rho.abs() < 1.0) =>
            {
                Err(Error::domain("correlation must lie in (-1, 1)"))
            }
            _ if rho.is_some() && g.dim() == 1 => {
                Err(Error::parse(format!("{head} takes no correlation")))
            }
            g => Ok(g),
        }
    }
}

impl TryFrom<String> for Generator {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Generator> for String {
    fn from(g: Generator) -> String {
        g.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
        (m, v)
    }

    #[test]
    fn names_round_trip() {
        for s in [
            "normal",
            "normal0.5",
            "cauchy",
            "skewnormal",
            "skewnormal3",
            "binormal",
            "bit3",
            "bit5:rho=0.2",
            "degenerate",
            "degenerate2",
        ] {
            let g: Generator = s.parse().unwrap();
            assert_eq!(g.to_string().parse::<Generator>().unwrap(), g, "{s}");
        }
        assert_eq!(
            "normal0.5".parse::<Generator>().unwrap(),
            Generator::Normal { variance: 0.5 }
        );
        assert!("bit2".parse::<Generator>().is_err());
        assert!("gamma".parse::<Generator>().is_err());
        assert!("cauchy:rho=0.1".parse::<Generator>().is_err());
        assert!("binormal:rho=1".parse::<Generator>().is_err());
    }

    #[test]
    fn normal_and_skew_normal_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = Generator::Normal { variance: 0.5 };
        let xs = g.sample(&mut rng, 200_000).unwrap().coords().to_vec();
        let (m, v) = moments(&xs);
        assert!(m.abs() < 0.01 && (v - 0.5).abs() < 0.01);
        // skew-normal(1): mean δ√(2/π), variance 1 − 2δ²/π with δ = 1/√2
        let xs = Generator::SkewNormal { shape: 1.0 }
            .sample(&mut rng, 200_000)
            .unwrap()
            .coords()
            .to_vec();
        let d = 0.5f64.sqrt();
        let (m, v) = moments(&xs);
        assert!((m - d * (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.01);
        assert!((v - (1.0 - 2.0 * d * d / std::f64::consts::PI)).abs() < 0.01);
    }

    #[test]
    fn cauchy_quartiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut xs = Generator::Cauchy
            .sample(&mut rng, 100_000)
            .unwrap()
            .order_statistics()
            .unwrap();
        xs.sort_by(f64::total_cmp);
        assert!((xs[25_000] + 1.0).abs() < 0.03 && (xs[75_000] - 1.0).abs() < 0.03);
    }

    #[test]
    fn bivariate_covariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for g in [
            Generator::Binormal { rho: 0.5 },
            Generator::BivariateT { df: 3.0, rho: 0.5 },
        ] {
            let s = g.sample(&mut rng, 400_000).unwrap();
            let n = s.len() as f64;
            let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
            for p in s.points() {
                sxx += p[0] * p[0];
                syy += p[1] * p[1];
                sxy += p[0] * p[1];
            }
            // t₃ has infinite fourth moments, so its sample covariance converges slowly
            let tol = if matches!(g, Generator::BivariateT { .. }) {
                0.15
            } else {
                0.01
            };
            assert!((sxx / n - 1.0).abs() < tol, "{g}: {}", sxx / n);
            assert!((syy / n - 1.0).abs() < tol, "{g}: {}", syy / n);
            assert!((sxy / n - 0.5).abs() < tol, "{g}: {}", sxy / n);
        }
    }

    #[test]
    fn bivariate_t_quadratic_form_is_f_distributed() {
        // with scale Σ/3, (y'Σ⁻¹y)·3/2 ~ F(2, 3), whose cdf is 1 − (1 + 2x/3)^(−3/2)
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = Generator::BivariateT { df: 3.0, rho: 0.5 };
        let n = 100_000;
        let s = g.sample(&mut rng, n).unwrap();
        let x0 = 2.0;
        let hits = s
            .points()
            .filter(|p| {
                let q = (p[0] * p[0] - p[0] * p[1] + p[1] * p[1]) / 0.75;
                q * 3.0 / 2.0 <= x0
            })
            .count();
        let expect = 1.0 - (1.0 + 2.0 * x0 / 3.0f64).powf(-1.5);
        assert!((hits as f64 / n as f64 - expect).abs() < 0.006);
    }

    #[test]
    fn degenerate_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = Generator::Degenerate { value: 2.0 }
            .sample(&mut rng, 5)
            .unwrap();
        assert!(s.coords().iter().all(|&x| x == 2.0));
    }
}
