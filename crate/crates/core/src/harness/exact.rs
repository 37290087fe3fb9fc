//! Exact strong-validity check on a finite sample space by full enumeration.
//!
//! For each assertion `A ⊆ {0, …, m−1}`, the `mⁿ` data configurations are
//! ranked by `Π̄_{y^n}(A)` (descending, ties broken by lexicographic order of
//! the configuration) and the predictor must satisfy
//! `Π̄_{y^n[r]}(A) ≥ Σ_{k ≥ r} P(Y_{n+1} ∈ A, Y^n = y^n[k])` for every rank `r`.
//! The same bound is also evaluated directly as
//! `P(Π̄(A) ≤ α, Y_{n+1} ∈ A) ≤ α` at every attained `α`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conformal::transducer;
use crate::error::{Error, Result};
use crate::nonconformity::NonconformityMeasure;
use crate::sample::Sample;

const MAX_SPACE: usize = 4;
const MAX_N: usize = 4;
const TOL: f64 = 1e-12;

/// An exchangeable law for `(Y_1, …, Y_{n+1})` on `{0, …, m−1}^{n+1}`.
pub trait JointLaw: Sync {
    fn name(&self) -> String;
    fn space_size(&self) -> usize;
    /// Fixed sequence length, for laws given as explicit tables.
    fn sequence_length(&self) -> Option<usize> {
        None
    }
    fn probability(&self, seq: &[usize]) -> f64;
}

/// Independent draws from `probs`.
#[derive(Debug, Clone, PartialEq)]
pub struct IidLaw {
    pub probs: Vec<f64>,
}

impl JointLaw for IidLaw {
    fn name(&self) -> String {
        format!("iid{:?}", self.probs)
    }

    fn space_size(&self) -> usize {
        self.probs.len()
    }

    fn probability(&self, seq: &[usize]) -> f64 {
        seq.iter().map(|&y| self.probs[y]).product()
    }
}

/// A finite mixture of iid laws.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureLaw {
    pub weights: Vec<f64>,
    pub components: Vec<IidLaw>,
}

impl JointLaw for MixtureLaw {
    fn name(&self) -> String {
        format!("mixture{:?}", self.weights)
    }

    fn space_size(&self) -> usize {
        self.components.first().map_or(0, |c| c.space_size())
    }

    fn probability(&self, seq: &[usize]) -> f64 {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * c.probability(seq))
            .sum()
    }
}

/// A law given by its full probability table, indexed lexicographically
/// with the first coordinate most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitLaw {
    space_size: usize,
    len: usize,
    table: Vec<f64>,
}

impl ExplicitLaw {
    pub fn new(space_size: usize, len: usize, table: Vec<f64>) -> Result<Self> {
        if space_size.checked_pow(len as u32) != Some(table.len()) {
            return Err(Error::domain(format!(
                "a table over {space_size}^{len} sequences needs {} entries, got {}",
                space_size.pow(len as u32),
                table.len()
            )));
        }
        Ok(ExplicitLaw {
            space_size,
            len,
            table,
        })
    }
}

impl JointLaw for ExplicitLaw {
    fn name(&self) -> String {
        "table".into()
    }

    fn space_size(&self) -> usize {
        self.space_size
    }

    fn sequence_length(&self) -> Option<usize> {
        Some(self.len)
    }

    fn probability(&self, seq: &[usize]) -> f64 {
        self.table[index_of(seq, self.space_size)]
    }
}

fn index_of(seq: &[usize], m: usize) -> usize {
    seq.iter().fold(0, |acc, &y| acc * m + y)
}

fn sequence(index: usize, m: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    let mut rest = index;
    for slot in out.iter_mut().rev() {
        *slot = rest % m;
        rest /= m;
    }
    out
}

/// Upper probability on a finite space; `a[y]` marks membership of `y` in `A`.
pub trait FinitePredictor: Sync {
    fn name(&self) -> String;
    fn upper(&self, data: &[usize], a: &[bool]) -> Result<f64>;
}

/// The consonant conformal predictor: `max_{y ∈ A} π(y; data)`, 0 on `∅`.
#[derive(Debug, Clone)]
pub struct ConsonantFinite {
    pub measure: Arc<dyn NonconformityMeasure>,
}

impl FinitePredictor for ConsonantFinite {
    fn name(&self) -> String {
        format!("consonant:{}", self.measure.name())
    }

    fn upper(&self, data: &[usize], a: &[bool]) -> Result<f64> {
        let values: Vec<f64> = data.iter().map(|&y| y as f64).collect();
        let sample = Sample::from_scalars(&values)?;
        let mut best = 0.0f64;
        for (y, _) in a.iter().enumerate().filter(|(_, &inside)| inside) {
            best = best.max(transducer(&sample, self.measure.as_ref(), &[y as f64])?.value());
        }
        Ok(best)
    }
}

/// `Π̄(A) = c` for nonempty `A`, 0 on `∅`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantUpper(pub f64);

impl FinitePredictor for ConstantUpper {
    fn name(&self) -> String {
        format!("constant:{}", self.0)
    }

    fn upper(&self, _data: &[usize], a: &[bool]) -> Result<f64> {
        Ok(if a.iter().any(|&x| x) { self.0 } else { 0.0 })
    }
}

/// A failed rank inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactViolation {
    /// Elements of `A`.
    pub assertion: Vec<usize>,
    pub rank: usize,
    pub configuration: Vec<usize>,
    pub upper: f64,
    pub tail_mass: f64,
}

/// A level at which `P(Π̄(A) ≤ α, Y_{n+1} ∈ A) > α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectViolation {
    pub assertion: Vec<usize>,
    pub alpha: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub space_size: usize,
    pub n: usize,
    pub predictor: String,
    pub law: String,
    pub assertions_checked: usize,
    pub inequalities_checked: usize,
    pub violations: Vec<ExactViolation>,
    pub direct_violations: Vec<DirectViolation>,
    /// Whether both computations flag exactly the same assertions.
    pub agree: bool,
}

impl ExactReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

fn elements(a: &[bool]) -> Vec<usize> {
    a.iter()
        .enumerate()
        .filter(|(_, &x)| x)
        .map(|(i, _)| i)
        .collect()
}

/// Full enumeration of the rank inequalities for every `A ⊆ {0, …, m−1}`.
pub fn exact_strong_validity_finite(
    space_size: usize,
    n: usize,
    predictor: &dyn FinitePredictor,
    law: &dyn JointLaw,
) -> Result<ExactReport> {
    let m = space_size;
    if !(1..=MAX_SPACE).contains(&m) || !(1..=MAX_N).contains(&n) {
        return Err(Error::domain(format!(
            "enumeration supports space sizes 1..={MAX_SPACE} and n in 1..={MAX_N}, got {m} and {n}"
        )));
    }
    if law.space_size() != m {
        return Err(Error::domain(format!(
            "law is over {} values, expected {m}",
            law.space_size()
        )));
    }
    if law.sequence_length().is_some_and(|l| l != n + 1) {
        return Err(Error::domain("law table length does not match n + 1"));
    }

    let full = m.pow(n as u32 + 1);
    let joint: Vec<f64> = (0..full)
        .map(|i| law.probability(&sequence(i, m, n + 1)))
        .collect();
    if joint.iter().any(|p| !(*p >= 0.0)) || (joint.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::contract(
            "joint law is not a probability distribution",
        ));
    }
    for (i, &p) in joint.iter().enumerate() {
        let mut s = sequence(i, m, n + 1);
        s.sort_unstable();
        if (p - joint[index_of(&s, m)]).abs() > TOL {
            return Err(Error::contract(format!(
                "joint law is not exchangeable: P{:?} differs from P{s:?}",
                sequence(i, m, n + 1)
            )));
        }
    }

    let configs = m.pow(n as u32);
    let mut violations = Vec::new();
    let mut direct_violations = Vec::new();
    let mut agree = true;
    let mut inequalities = 0;
    for bits in 0..(1usize << m) {
        let a: Vec<bool> = (0..m).map(|y| bits >> y & 1 == 1).collect();
        let uppers = (0..configs)
            .map(|k| predictor.upper(&sequence(k, m, n), &a))
            .collect::<Result<Vec<_>>>()?;
        // P(Y^n = config_k, Y_{n+1} ∈ A); the config is the leading n coordinates
        let mass: Vec<f64> = (0..configs)
            .map(|k| (0..m).filter(|&y| a[y]).map(|y| joint[k * m + y]).sum())
            .collect();

        let mut order: Vec<usize> = (0..configs).collect();
        order.sort_by(|&i, &j| uppers[j].total_cmp(&uppers[i]).then(i.cmp(&j)));
        let mut tail = 0.0;
        let mut rank_failed = false;
        for (r, &k) in order.iter().enumerate().rev() {
            tail += mass[k];
            inequalities += 1;
            if uppers[k] + TOL < tail {
                rank_failed = true;
                violations.push(ExactViolation {
                    assertion: elements(&a),
                    rank: r + 1,
                    configuration: sequence(k, m, n),
                    upper: uppers[k],
                    tail_mass: tail,
                });
            }
        }

        let mut levels = uppers.clone();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let mut direct_failed = false;
        for &alpha in &levels {
            let p: f64 = (0..configs)
                .filter(|&k| uppers[k] <= alpha)
                .map(|k| mass[k])
                .sum();
            if p > alpha + TOL {
                direct_failed = true;
                direct_violations.push(DirectViolation {
                    assertion: elements(&a),
                    alpha,
                    probability: p,
                });
            }
        }
        agree &= rank_failed == direct_failed;
    }

    Ok(ExactReport {
        space_size: m,
        n,
        predictor: predictor.name(),
        law: law.name(),
        assertions_checked: 1 << m,
        inequalities_checked: inequalities,
        violations,
        direct_violations,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonconformity::CountingMeasure;
    use std::time::Instant;

    fn consonant() -> ConsonantFinite {
        ConsonantFinite {
            measure: Arc::new(CountingMeasure),
        }
    }

    fn bernoulli(p: f64) -> IidLaw {
        IidLaw {
            probs: vec![1.0 - p, p],
        }
    }

    /// Pólya urn with one ball of each colour, a standard exchangeable non-iid law.
    fn polya(len: usize) -> ExplicitLaw {
        let table = (0..1usize << len)
            .map(|i| {
                let seq = sequence(i, 2, len);
                let (mut counts, mut p) = ([1.0, 1.0], 1.0);
                for (t, &y) in seq.iter().enumerate() {
                    p *= counts[y] / (2.0 + t as f64);
                    counts[y] += 1.0;
                }
                p
            })
            .collect();
        ExplicitLaw::new(2, len, table).unwrap()
    }

    #[test]
    fn consonant_conformal_passes_on_binary_spaces() {
        let start = Instant::now();
        for n in [2, 3] {
            for law in [
                &bernoulli(0.5) as &dyn JointLaw,
                &bernoulli(0.2),
                &polya(n + 1),
            ] {
                let report = exact_strong_validity_finite(2, n, &consonant(), law).unwrap();
                assert!(report.pass(), "{report:?}");
                assert!(report.direct_violations.is_empty());
                assert!(report.agree);
                assert_eq!(report.assertions_checked, 4);
                assert_eq!(report.inequalities_checked, 4 << n);
            }
        }
        assert!(start.elapsed().as_secs_f64() < 1.0);
    }

    #[test]
    fn consonant_conformal_passes_on_larger_spaces() {
        let mix = MixtureLaw {
            weights: vec![0.3, 0.7],
            components: vec![
                IidLaw {
                    probs: vec![0.6, 0.3, 0.1],
                },
                IidLaw {
                    probs: vec![0.1, 0.1, 0.8],
                },
            ],
        };
        let report = exact_strong_validity_finite(3, 3, &consonant(), &mix).unwrap();
        assert!(report.pass() && report.agree);
        let iid = IidLaw {
            probs: vec![0.25, 0.25, 0.4, 0.1],
        };
        let report = exact_strong_validity_finite(4, 2, &consonant(), &iid).unwrap();
        assert!(report.pass() && report.agree);
    }

    #[test]
    fn zero_predictor_fails_at_the_top_rank() {
        let report =
            exact_strong_validity_finite(2, 2, &ConstantUpper(0.0), &bernoulli(0.5)).unwrap();
        assert!(!report.pass());
        assert!(report.agree);
        let top = report
            .violations
            .iter()
            .find(|v| v.assertion == vec![1] && v.rank == 1)
            .unwrap();
        // the tail at rank 1 is P(Y_{n+1} ∈ A)
        assert!((top.tail_mass - 0.5).abs() < 1e-12);
        assert!(!report.direct_violations.is_empty());
    }

    #[test]
    fn vacuous_predictor_passes() {
        for n in [2, 3] {
            let report =
                exact_strong_validity_finite(2, n, &ConstantUpper(1.0), &bernoulli(0.3)).unwrap();
            assert!(report.pass() && report.agree);
        }
    }

    #[test]
    fn non_exchangeable_law_is_rejected() {
        // P(0, 1, 1) ≠ P(1, 1, 0)
        let mut table = vec![0.125; 8];
        table[3] = 0.2;
        table[6] = 0.05;
        let law = ExplicitLaw::new(2, 3, table).unwrap();
        let err = exact_strong_validity_finite(2, 2, &consonant(), &law).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        assert!(ExplicitLaw::new(2, 3, vec![0.5; 4]).is_err());
        assert!(exact_strong_validity_finite(5, 2, &consonant(), &bernoulli(0.5)).is_err());
        assert!(exact_strong_validity_finite(2, 3, &consonant(), &polya(3)).is_err());
    }

    #[test]
    fn enumeration_helpers_round_trip() {
        for i in 0..81 {
            assert_eq!(index_of(&sequence(i, 3, 4), 3), i);
        }
        assert_eq!(sequence(5, 2, 3), vec![1, 0, 1]);
    }
}
