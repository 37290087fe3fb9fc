use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assertion::Assertion;
use crate::baselines::Generator;
use crate::error::{Error, Result};
use crate::nonconformity::MeasureSpec;

/// Monte Carlo slack, in standard errors, applied to every bound.
pub const SLACK_SE: f64 = 3.0;

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: Generator,
    pub n: usize,
    pub reps: usize,
    pub alphas: Vec<f64>,
    pub measure: String,
    /// Assertions for strong validity, or the assertion-map spec for the alternative form.
    #[serde(default)]
    pub assertions: Vec<String>,
    pub seed: u64,
    /// Not part of the hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(generator: Generator, n: usize, reps: usize, alphas: Vec<f64>, seed: u64) -> Self {
        ExperimentConfig {
            generator,
            n,
            reps,
            alphas,
            measure: "median".into(),
            assertions: Vec::new(),
            seed,
            output: None,
        }
    }

    pub fn with_measure(mut self, measure: impl Into<String>) -> Self {
        self.measure = measure.into();
        self
    }

    pub fn with_assertions<S: ToString>(mut self, assertions: &[S]) -> Self {
        self.assertions = assertions.iter().map(S::to_string).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::domain("at least one replication is required"));
        }
        if self.n < 1 {
            return Err(Error::domain("n must be at least 1"));
        }
        if self.alphas.is_empty() {
            return Err(Error::domain("the alpha ladder is empty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::domain(format!("alpha = {a} is outside [0, 1]")));
        }
        self.measure_spec()?;
        self.parsed_assertions()?;
        Ok(())
    }

    pub fn measure_spec(&self) -> Result<MeasureSpec> {
        self.measure.parse()
    }

    pub fn parsed_assertions(&self) -> Result<Vec<Assertion>> {
        self.assertions.iter().map(|s| s.parse()).collect()
    }

    /// Hex sha256 of the canonical JSON form, excluding the output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let json = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Which side of the bound the estimate must fall on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AtLeast,
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityRow {
    pub experiment: String,
    pub predictor: String,
    pub generator: String,
    pub n: usize,
    pub alpha: f64,
    /// Level the predictor output is compared against (`k_n(α)` or `α`).
    pub threshold: f64,
    /// Assertion or assertion map; empty for coverage rows.
    pub assertion: String,
    pub events: usize,
    pub reps: usize,
    pub estimate: f64,
    pub se: f64,
    pub bound: f64,
    pub direction: Direction,
    pub pass: bool,
}

impl ValidityRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        experiment: &str,
        predictor: &str,
        generator: &str,
        n: usize,
        alpha: f64,
        threshold: f64,
        assertion: String,
        events: usize,
        reps: usize,
        bound: f64,
        direction: Direction,
    ) -> Self {
        let estimate = events as f64 / reps as f64;
        let se = (estimate * (1.0 - estimate) / reps as f64).sqrt();
        let pass = match direction {
            Direction::AtLeast => estimate >= bound - SLACK_SE * se,
            Direction::AtMost => estimate <= bound + SLACK_SE * se,
        };
        ValidityRow {
            experiment: experiment.into(),
            predictor: predictor.into(),
            generator: generator.into(),
            n,
            alpha,
            threshold,
            assertion,
            events,
            reps,
            estimate,
            se,
            bound,
            direction,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub config_hash: String,
    pub seed: u64,
    pub slack_se: f64,
    pub rows: Vec<ValidityRow>,
}

impl ValidityReport {
    pub fn new(config: &ExperimentConfig, rows: Vec<ValidityRow>) -> Self {
        ValidityReport {
            config_hash: config.hash(),
            seed: config.seed,
            slack_se: SLACK_SE,
            rows,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidityRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    /// Appends another report's rows; metadata of `self` is kept.
    pub fn extend(&mut self, other: ValidityReport) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        w.write_record([
            "experiment",
            "predictor",
            "generator",
            "n",
            "alpha",
            "threshold",
            "assertion",
            "events",
            "reps",
            "estimate",
            "se",
            "bound",
            "direction",
            "pass",
            "config_hash",
            "seed",
            "slack_se",
        ])?;
        for r in &self.rows {
            let direction = match r.direction {
                Direction::AtLeast => "at_least",
                Direction::AtMost => "at_most",
            };
            w.write_record([
                r.experiment.clone(),
                r.predictor.clone(),
                r.generator.clone(),
                r.n.to_string(),
                r.alpha.to_string(),
                r.threshold.to_string(),
                r.assertion.clone(),
                r.events.to_string(),
                r.reps.to_string(),
                r.estimate.to_string(),
                r.se.to_string(),
                r.bound.to_string(),
                direction.into(),
                r.pass.to_string(),
                self.config_hash.clone(),
                self.seed.to_string(),
                self.slack_se.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}
