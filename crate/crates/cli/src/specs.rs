//! Parsers for the predictor, map and law names accepted on the command line.

use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use consonant::harness::{
    AssertionMap, BallMap, ConsonantFinite, ConsonantUpper, ConstantUpper, FinitePredictor, IidLaw,
    JointLaw, MixtureLaw, NormalUpper, RayMap, UpperPredictor,
};
use consonant::MeasureSpec;

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number {x:?}"))
        })
        .collect()
}

/// `consonant`, `normal-fitted` or `normal:MEAN,SD`.
pub fn upper_predictor(spec: &str, measure: &MeasureSpec) -> Result<Box<dyn UpperPredictor>> {
    Ok(match spec {
        "consonant" => Box::new(ConsonantUpper::new(measure.build())),
        "normal-fitted" => Box::new(NormalUpper::Fitted),
        _ => {
            let rest = spec
                .strip_prefix("normal:")
                .ok_or_else(|| anyhow!("unknown predictor {spec:?}; expected consonant, normal-fitted or normal:MEAN,SD"))?;
            match numbers(rest)?[..] {
                [mean, sd] if sd > 0.0 => Box::new(NormalUpper::Fixed { mean, sd }),
                _ => bail!("normal:MEAN,SD needs two numbers with SD > 0"),
            }
        }
    })
}

/// `ball:EPS` or `ray`.
pub fn assertion_map(spec: &str) -> Result<Box<dyn AssertionMap>> {
    if spec == "ray" {
        return Ok(Box::new(RayMap));
    }
    let eps: f64 = spec
        .strip_prefix("ball:")
        .ok_or_else(|| anyhow!("unknown map {spec:?}; expected ball:EPS or ray"))?
        .parse()
        .context("bad ball radius")?;
    if !(eps >= 0.0 && eps.is_finite()) {
        bail!("ball radius must be finite and nonnegative");
    }
    Ok(Box::new(BallMap { eps }))
}

/// `consonant` (with the given measure), `zero`, `vacuous` or `constant:C`.
pub fn finite_predictor(spec: &str, measure: &MeasureSpec) -> Result<Box<dyn FinitePredictor>> {
    Ok(match spec {
        "consonant" => Box::new(ConsonantFinite {
            measure: measure.build(),
        }),
        "zero" => Box::new(ConstantUpper(0.0)),
        "vacuous" => Box::new(ConstantUpper(1.0)),
        _ => {
            let c: f64 = spec
                .strip_prefix("constant:")
                .ok_or_else(|| anyhow!("unknown predictor {spec:?}; expected consonant, zero, vacuous or constant:C"))?
                .parse()
                .context("bad constant")?;
            Box::new(ConstantUpper(c))
        }
    })
}

/// `iid:P0,P1,...` or `mixture:W@P0,P1,...;W@P0,P1,...`.
pub fn joint_law(spec: &str) -> Result<Arc<dyn JointLaw>> {
    if let Some(rest) = spec.strip_prefix("iid:") {
        return Ok(Arc::new(IidLaw {
            probs: numbers(rest)?,
        }));
    }
    let rest = spec.strip_prefix("mixture:").ok_or_else(|| {
        anyhow!("unknown law {spec:?}; expected iid:P,... or mixture:W@P,...;...")
    })?;
    let mut weights = Vec::new();
    let mut components = Vec::new();
    for part in rest.split(';') {
        let (w, probs) = part
            .split_once('@')
            .ok_or_else(|| anyhow!("mixture component {part:?} needs the form W@P0,P1,..."))?;
        weights.push(w.trim().parse::<f64>().context("bad mixture weight")?);
        components.push(IidLaw {
            probs: numbers(probs)?,
        });
    }
    if components
        .iter()
        .any(|c| c.probs.len() != components[0].probs.len())
    {
        bail!("mixture components must share one space size");
    }
    Ok(Arc::new(MixtureLaw {
        weights,
        components,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predictor_names() {
        let m = MeasureSpec::Median;
        assert_eq!(
            upper_predictor("consonant", &m).unwrap().name(),
            "consonant:median"
        );
        assert!(upper_predictor("normal:0,0.1", &m).is_ok());
        assert!(upper_predictor("normal:0,-1", &m).is_err());
        assert!(upper_predictor("kde", &m).is_err());
        assert_eq!(finite_predictor("zero", &m).unwrap().name(), "constant:0");
        assert!(finite_predictor("constant:x", &m).is_err());
    }

    #[test]
    fn maps_and_laws() {
        assert_eq!(assertion_map("ray").unwrap().name(), RayMap.name());
        assert!(assertion_map("ball:0.01").is_ok());
        assert!(assertion_map("ball:-1").is_err());
        let law = joint_law("iid:0.3,0.7").unwrap();
        assert_eq!(law.space_size(), 2);
        assert!((law.probability(&[0, 1]) - 0.21).abs() < 1e-15);
        let mix = joint_law("mixture:0.5@0.2,0.8;0.5@0.9,0.1").unwrap();
        assert!((mix.probability(&[0]) - 0.55).abs() < 1e-15);
        assert!(joint_law("mixture:1@0.5,0.5;1@1").is_err());
        assert!(joint_law("polya").is_err());
    }
}
