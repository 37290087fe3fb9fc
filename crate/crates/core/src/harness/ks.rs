use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conformal::transducer;
use crate::error::{Error, Result};

use super::report::ExperimentConfig;
use super::rng::run_replications;

/// Fewer replications than this give a test too weak to be worth running.
const MIN_REPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub reps: usize,
    pub smoothed: bool,
    pub config_hash: String,
}

/// Kolmogorov distance between the empirical CDF of `values` and Unif(0, 1).
pub fn ks_statistic(values: &[f64]) -> f64 {
    let mut u: Vec<f64> = values.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    u.sort_by(f64::total_cmp);
    let r = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / r - x).max(x - i as f64 / r))
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of distance `d` from `reps` values, with the
/// `√R + 0.12 + 0.11/√R` small-sample scaling.
pub fn kolmogorov_pvalue(d: f64, reps: usize) -> f64 {
    let sr = (reps as f64).sqrt();
    let lambda = (sr + 0.12 + 0.11 / sr) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS test of `π(Y^n, Y_{n+1})` (or its smoothed version with `W ~ Unif(0, 1)`)
/// against Unif(0, 1).
pub fn ks_uniformity(config: &ExperimentConfig, smoothed: bool) -> Result<KsResult> {
    if config.reps < MIN_REPS {
        return Err(Error::domain(format!(
            "a KS test needs at least {MIN_REPS} replications, got {}",
            config.reps
        )));
    }
    config.validate()?;
    let measure = config.measure_spec()?.build();
    let gen = &config.generator;
    let values = run_replications(config.seed, config.reps, |rng| {
        let data = gen.sample(rng, config.n)?;
        let y = gen.draw(rng);
        let w: f64 = rng.random();
        let r = transducer(&data, measure.as_ref(), &y)?;
        if smoothed {
            r.smoothed(w)
        } else {
            Ok(r.value())
        }
    })?;
    let statistic = ks_statistic(&values);
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_pvalue(statistic, values.len()),
        reps: values.len(),
        smoothed,
        config_hash: config.hash(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::Generator;

    #[test]
    fn kolmogorov_tail_matches_reference_values() {
        // survival function of the Kolmogorov distribution, as tabulated by scipy's kstwobign
        let reference = [
            (0.5, 0.9639452436648751),
            (1.0, 0.26999967167735456),
            (1.36, 0.049485876755377876),
            (1.63, 0.009846364888486529),
            (2.0, 0.0006709252557796953),
        ];
        // with R huge the scaling factor is √R, so d = λ/√R recovers λ
        let reps = 1_000_000_000_000usize;
        for (lambda, p) in reference {
            let d = lambda / ((reps as f64).sqrt() + 0.12);
            assert!((kolmogorov_pvalue(d, reps) - p).abs() < 1e-9, "{lambda}");
        }
        assert_eq!(kolmogorov_pvalue(0.0, 100), 1.0);
    }

    #[test]
    fn statistic_examples() {
        assert!((ks_statistic(&[0.5]) - 0.5).abs() < 1e-15);
        assert!((ks_statistic(&[0.25, 0.75]) - 0.25).abs() < 1e-15);
        assert!((ks_statistic(&[1.0; 10]) - 1.0).abs() < 1e-15);
    }

    fn config(gen: Generator, n: usize, reps: usize) -> ExperimentConfig {
        ExperimentConfig::new(gen, n, reps, vec![0.05], 17)
    }

    #[test]
    fn smoothed_is_uniform_and_raw_is_not() {
        let cfg = config(Generator::Normal { variance: 1.0 }, 5, 5000);
        let smooth = ks_uniformity(&cfg, true).unwrap();
        assert!(smooth.p_value > 0.01, "{smooth:?}");
        let raw = ks_uniformity(&cfg, false).unwrap();
        assert!(raw.p_value < 1e-6, "{raw:?}");
    }

    #[test]
    fn degenerate_data_is_rejected() {
        let cfg = config(Generator::Degenerate { value: 0.0 }, 10, 200);
        let r = ks_uniformity(&cfg, false).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn too_few_replications_refused() {
        assert!(ks_uniformity(&config(Generator::Cauchy, 5, 99), true).is_err());
    }
}
