//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test -p consonant --test acceptance` runs everything;
//! `... -- 3 7` runs only the listed criteria.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use consonant::assertion::Assertion;
use consonant::conformal::{prediction_region, smoothed_transducer};
use consonant::consonant::ConsonantPredictor;
use consonant::harness::{
    default_assertions, estimate_alt_strong_validity, estimate_strong_validity,
    estimate_weak_validity, exact_strong_validity_finite, ks_uniformity,
    regression_band_experiment, reproduce_table1, reproduce_table2, BallMap, ConformalRegions,
    ConsonantFinite, ConsonantUpper, ConstantUpper, ExperimentConfig, IidLaw, NormalUpper, RayMap,
    TABLE2_BAYES, TABLE2_IM,
};
use consonant::imrandomset::{
    classical_interval, im_contour, npi_bounds, randomized_im_contour, rank, twosided_region,
    NestedRandomSetFamily,
};
use consonant::nonconformity::{
    halfspace_depth_count, loo_scores, CountingMeasure, MeasureSpec, MedianDistance,
    NonconformityMeasure,
};
use consonant::{Generator, Grid, Interval, PlausibilityContour, Regressor, Sample};

const SEED: u64 = 20_190_101;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn within_rel(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target
}

fn table1() -> Outcome {
    let start = Instant::now();
    let t = reproduce_table1(5000, SEED).unwrap();
    let checks = [
        (20, "cauchy", 0.731, 0.025),
        (40, "normal", 0.921, 0.02),
        (30, "skew", 0.847, 0.025),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, dist, target, tol) in checks {
        let c = t.get(n, dist).unwrap().coverage;
        let ok = within(c, target, tol);
        pass &= ok;
        parts.push(format!(
            "{dist} n={n} {c:.4} (target {target}±{tol}) {}",
            if ok { "ok" } else { "off" }
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    Outcome::new(pass, format!("{}; {secs:.1}s", parts.join(", ")))
}

fn table2() -> Outcome {
    let start = Instant::now();
    let t = reproduce_table2(500, SEED).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut check = |label: String, value: f64, ok: bool| {
        pass &= ok;
        parts.push(format!(
            "{label} {value:.3} {}",
            if ok { "ok" } else { "off" }
        ));
    };
    for (dist, im_cov, bayes_cov, im_area, bayes_area) in [
        ("normal", 0.952, 0.947, 17.24, 16.57),
        ("t3", 0.948, 0.917, 25.55, 16.17),
    ] {
        let im = t.get(TABLE2_IM, dist).unwrap();
        let bayes = t.get(TABLE2_BAYES, dist).unwrap();
        check(
            format!("IM cov {dist} (target {im_cov}±0.03)"),
            im.coverage,
            within(im.coverage, im_cov, 0.03),
        );
        check(
            format!("Bayes cov {dist} (target {bayes_cov}±0.03)"),
            bayes.coverage,
            within(bayes.coverage, bayes_cov, 0.03),
        );
        check(
            format!("IM area {dist} (target {im_area}±15%)"),
            im.area,
            within_rel(im.area, im_area, 0.15),
        );
        check(
            format!("Bayes area {dist} (target {bayes_area}±10%)"),
            bayes.area,
            within_rel(bayes.area, bayes_area, 0.10),
        );
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 600.0;
    Outcome::new(pass, format!("{}; {secs:.1}s", parts.join(", ")))
}

fn weak_validity() -> Outcome {
    let builder = ConformalRegions::new(Arc::new(MedianDistance));
    let mut rows = 0;
    let mut failures = Vec::new();
    let mut worst = f64::INFINITY;
    for gen in ["normal0.5", "cauchy", "skewnormal"] {
        for n in [20, 50] {
            let config =
                ExperimentConfig::new(gen.parse().unwrap(), n, 2000, vec![0.05, 0.1, 0.2], SEED);
            let report = estimate_weak_validity(&config, &builder).unwrap();
            for r in &report.rows {
                rows += 1;
                worst = worst.min(r.estimate - (1.0 - r.alpha) + 3.0 * r.se);
                if !r.pass {
                    failures.push(format!("{gen} n={n} α={} cov={:.4}", r.alpha, r.estimate));
                }
            }
        }
    }
    Outcome::new(
        failures.is_empty() && rows == 18,
        format!("{rows} rows, smallest margin {worst:.4}; failures: {failures:?}"),
    )
}

fn strong_validity() -> Outcome {
    let assertions = default_assertions();
    let consonant = ConsonantUpper::new(Arc::new(MedianDistance));
    let mut rows = 0;
    let mut failures = Vec::new();
    for gen in ["normal", "cauchy"] {
        let config =
            ExperimentConfig::new(gen.parse().unwrap(), 20, 2000, vec![0.05, 0.1, 0.2], SEED);
        let report = estimate_strong_validity(&config, &consonant, &assertions).unwrap();
        rows += report.rows.len();
        failures.extend(
            report
                .failures()
                .map(|r| format!("{gen} α={} A={} p={:.4}", r.alpha, r.assertion, r.estimate)),
        );
    }
    let config = ExperimentConfig::new(
        Generator::Normal { variance: 1.0 },
        20,
        2000,
        vec![0.05, 0.1, 0.2],
        SEED,
    );
    let sure_loss = NormalUpper::Fixed { mean: 0.0, sd: 0.1 };
    let control = estimate_strong_validity(&config, &sure_loss, &assertions).unwrap();
    let control_failures = control.failures().count();
    Outcome::new(
        failures.is_empty() && assertions.len() >= 10 && control_failures >= 1,
        format!(
            "{} assertions, {rows} consonant rows, failures {failures:?}; sure-loss control fails {control_failures} rows",
            assertions.len()
        ),
    )
}

fn alt_strong_validity() -> Outcome {
    let config = ExperimentConfig::new(
        Generator::Normal { variance: 1.0 },
        20,
        2000,
        vec![0.05, 0.1, 0.2],
        SEED,
    );
    let consonant = ConsonantUpper::new(Arc::new(MedianDistance));
    let ball = estimate_alt_strong_validity(&config, &consonant, &BallMap { eps: 0.01 }).unwrap();
    let ray = estimate_alt_strong_validity(&config, &consonant, &RayMap).unwrap();
    let precise =
        estimate_alt_strong_validity(&config, &NormalUpper::Fitted, &BallMap { eps: 0.01 })
            .unwrap();
    let at_05 = precise.rows.iter().find(|r| r.alpha == 0.05).unwrap();
    let est = |r: &consonant::harness::ValidityReport| {
        r.rows
            .iter()
            .map(|x| format!("{:.4}", x.estimate))
            .collect::<Vec<_>>()
            .join("/")
    };
    Outcome::new(
        ball.all_pass() && ray.all_pass() && !at_05.pass,
        format!(
            "consonant ball {} ray {} (α=.05/.1/.2); precise ball at α=0.05: {:.4}",
            est(&ball),
            est(&ray),
            at_05.estimate
        ),
    )
}

fn exact_finite() -> Outcome {
    let start = Instant::now();
    let law = IidLaw {
        probs: vec![0.5, 0.5],
    };
    let consonant = ConsonantFinite {
        measure: Arc::new(CountingMeasure),
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2, 3] {
        let good = exact_strong_validity_finite(2, n, &consonant, &law).unwrap();
        let zero = exact_strong_validity_finite(2, n, &ConstantUpper(0.0), &law).unwrap();
        let top_rank = zero.violations.iter().any(|v| v.rank == 1);
        pass &= good.pass() && good.agree && !zero.pass() && zero.agree && top_rank;
        parts.push(format!(
            "n={n}: consonant {} of {} inequalities violated, zero predictor {} violated",
            good.violations.len(),
            good.inequalities_checked,
            zero.violations.len()
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 1.0;
    Outcome::new(pass, format!("{}; {secs:.3}s", parts.join(", ")))
}

/// `#{T_i ≥ T_{n+1}}` computed from explicit leave-one-out bags.
fn loo_count(data: &Sample, measure: &dyn NonconformityMeasure, y: &[f64]) -> usize {
    let mut aug: Vec<&[f64]> = data.points().collect();
    aug.push(y);
    let scores = loo_scores(measure, &aug).unwrap();
    let last = scores[scores.len() - 1];
    scores.iter().filter(|&&t| t >= last).count()
}

fn random_instance(rng: &mut ChaCha8Rng, dim: usize) -> (Sample, Vec<f64>) {
    let n = rng.random_range(5..=20);
    // small integer lattices force ties
    let level = if rng.random_bool(0.5) { 3 } else { 1000 };
    let mut coord = || rng.random_range(0..level) as f64 / 2.0;
    let coords: Vec<f64> = (0..n * dim).map(|_| coord()).collect();
    let y: Vec<f64> = (0..dim).map(|_| coord()).collect();
    (Sample::new(dim, coords).unwrap(), y)
}

fn im_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let specs = [
        "mean",
        "median",
        "raw",
        "counting",
        "constant:1",
        "depth2d",
        "regress:linear",
        "regress:bspline:df=4",
    ];
    let mut mismatches = Vec::new();
    let mut worst_smooth = 0.0f64;
    for spec in specs {
        let spec: MeasureSpec = spec.parse().unwrap();
        let measure = spec.build();
        let dim = measure.dim().unwrap_or(1);
        for i in 0..100 {
            let (data, y) = random_instance(&mut rng, dim);
            let n = data.len();
            let family = NestedRandomSetFamily::lower(n).unwrap();
            let r = rank(&data, measure.as_ref(), &y).unwrap();
            let gamma = family.contour_gamma(r.rank).unwrap();
            let im_count = (gamma * (n + 1) as f64).round() as usize;
            let im = im_contour(&data, measure.as_ref(), &y, &family).unwrap();
            let direct = loo_count(&data, measure.as_ref(), &y);
            if im_count != direct || im != direct as f64 / (n + 1) as f64 {
                mismatches.push(format!("{spec} #{i}: IM {im_count} vs direct {direct}"));
            }
            let w: f64 = rng.random();
            let a = randomized_im_contour(&data, measure.as_ref(), &y, w).unwrap();
            let b = smoothed_transducer(&data, measure.as_ref(), &y, w).unwrap();
            worst_smooth = worst_smooth.max((a - b).abs());
        }
    }
    Outcome::new(
        mismatches.is_empty() && worst_smooth <= 1e-15,
        format!(
            "{} measures x 100 instances; count mismatches {mismatches:?}; max |randomized − smoothed| = {worst_smooth:e}",
            specs.len()
        ),
    )
}

fn smoothed_uniformity() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [5, 20] {
        let config = ExperimentConfig::new(
            Generator::Normal { variance: 1.0 },
            n,
            5000,
            vec![0.05],
            SEED,
        );
        let r = ks_uniformity(&config, true).unwrap();
        pass &= r.p_value > 0.01;
        parts.push(format!("n={n}: D={:.4} p={:.3}", r.statistic, r.p_value));
    }
    Outcome::new(pass, parts.join(", "))
}

fn classical_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let gen = Generator::Normal { variance: 1.0 };
    let mut exact = true;
    for _ in 0..20 {
        let data = gen.sample(&mut rng, 50).unwrap();
        let ys = data.order_statistics().unwrap();
        let region = twosided_region(&data, 0.05).unwrap();
        exact &= region == Some(Interval::closed(ys[0], ys[49]).unwrap());
    }
    let (r, s, reps) = (1, 50, 5000);
    let mut hits = 0;
    let mut level = 0.0;
    for _ in 0..reps {
        let data = gen.sample(&mut rng, 50).unwrap();
        let w = classical_interval(&data, r, s).unwrap();
        level = w.level;
        hits += usize::from(w.interval.contains(gen.draw(&mut rng)[0]));
    }
    let cov = hits as f64 / reps as f64;
    let se = (level * (1.0 - level) / reps as f64).sqrt();
    let ok = (cov - level).abs() <= 3.0 * se;
    Outcome::new(
        exact && ok,
        format!("region == [y_(1), y_(50)] on 20 data sets: {exact}; Wilks coverage {cov:.4} vs {level:.4} (3 SE = {:.4})", 3.0 * se),
    )
}

fn npi_singletons() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut bad = Vec::new();
    for n in 1..=100 {
        let data = Generator::Cauchy.sample(&mut rng, n).unwrap();
        let ys = data.order_statistics().unwrap();
        let mut probes = vec![ys[0] - 1.0, ys[n - 1] + 1.0];
        probes.extend(
            ys.windows(2)
                .filter(|w| w[0] < w[1])
                .map(|w| 0.5 * (w[0] + w[1])),
        );
        for y in probes {
            let a = Assertion::interval(Interval::point(y).unwrap());
            let b = npi_bounds(&data, &a).unwrap();
            if b.lower() != 0.0 || b.upper() != 1.0 / (n + 1) as f64 {
                bad.push((n, y));
            }
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!("n = 1..=100, off-data singletons; mismatches {bad:?}"),
    )
}

/// Depth count by enumerating one direction inside every arc between
/// consecutive critical directions.
fn brute_depth(p: [f64; 2], cloud: &[[f64; 2]]) -> usize {
    use std::f64::consts::{FRAC_PI_2, TAU};
    let mut angles: Vec<f64> = cloud
        .iter()
        .filter(|q| **q != p)
        .flat_map(|q| {
            let a = (q[1] - p[1]).atan2(q[0] - p[0]);
            [
                (a + FRAC_PI_2).rem_euclid(TAU),
                (a - FRAC_PI_2).rem_euclid(TAU),
            ]
        })
        .collect();
    if angles.is_empty() {
        return cloud.len();
    }
    angles.sort_by(f64::total_cmp);
    let mut best = cloud.len();
    for i in 0..angles.len() {
        let next = if i + 1 < angles.len() {
            angles[i + 1]
        } else {
            angles[0] + TAU
        };
        if next - angles[i] < 1e-12 {
            continue;
        }
        let t = 0.5 * (angles[i] + next);
        let u = [t.cos(), t.sin()];
        let count = cloud
            .iter()
            .filter(|q| (q[0] - p[0]) * u[0] + (q[1] - p[1]) * u[1] >= 0.0)
            .count();
        best = best.min(count);
    }
    best
}

fn tukey_depth() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = 0;
    for _ in 0..200 {
        let m = rng.random_range(1..=50);
        let lattice = if rng.random_bool(0.5) { 5 } else { 41 };
        let pt = |rng: &mut ChaCha8Rng| {
            [
                rng.random_range(-lattice..=lattice) as f64,
                rng.random_range(-lattice..=lattice) as f64,
            ]
        };
        let cloud: Vec<[f64; 2]> = (0..m).map(|_| pt(&mut rng)).collect();
        let p = if rng.random_bool(0.3) {
            cloud[0]
        } else {
            pt(&mut rng)
        };
        let refs: Vec<&[f64]> = cloud.iter().map(|q| q.as_slice()).collect();
        if halfspace_depth_count(p, &refs).unwrap() != brute_depth(p, &cloud) {
            mismatches += 1;
        }
    }
    Outcome::new(
        mismatches == 0,
        format!("200 instances, m ≤ 50; mismatches {mismatches}"),
    )
}

fn possibility_calculus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=30);
        let len = rng.random_range(2..=40);
        let xs: Vec<f64> = (0..len).map(|i| i as f64).collect();
        let grid = Grid::from_scalars(&xs).unwrap();
        let mut counts: Vec<usize> = (0..len).map(|_| rng.random_range(1..=n + 1)).collect();
        if rng.random_bool(0.5) {
            let k = rng.random_range(0..len);
            counts[k] = n + 1;
        }
        counts.shuffle(&mut rng);
        let contour = PlausibilityContour::new(grid.clone(), counts, n).unwrap();
        let pred = ConsonantPredictor::new(contour.clone());
        let ma: Vec<bool> = (0..len).map(|_| rng.random_bool(0.4)).collect();
        let mb: Vec<bool> = (0..len).map(|_| rng.random_bool(0.4)).collect();
        let union: Vec<bool> = ma.iter().zip(&mb).map(|(a, b)| *a || *b).collect();
        let a = Assertion::mask(grid.clone(), ma.clone()).unwrap();
        let b = Assertion::mask(grid.clone(), mb).unwrap();
        let ab = Assertion::mask(grid.clone(), union).unwrap();
        let ac = Assertion::mask(grid.clone(), ma.iter().map(|x| !x).collect()).unwrap();
        let (ua, ub, uab) = (
            pred.upper_probability(&a).unwrap(),
            pred.upper_probability(&b).unwrap(),
            pred.upper_probability(&ab).unwrap(),
        );
        let la = pred.lower_probability(&a).unwrap();
        let lab = pred.lower_probability(&ab).unwrap();
        let mut ok = uab == ua.max(ub)
            && ua <= uab
            && la <= lab
            && la == 1.0 - pred.upper_probability(&ac).unwrap();
        let (a1, a2) = {
            let x: f64 = rng.random();
            let y: f64 = rng.random();
            (x.min(y), x.max(y))
        };
        let r1 = prediction_region(&contour, a1, true).unwrap();
        let r2 = prediction_region(&contour, a2, true).unwrap();
        ok &= r2
            .mask()
            .iter()
            .zip(r1.mask())
            .all(|(in2, in1)| !in2 || *in1);
        failures += usize::from(!ok);
    }
    Outcome::new(
        failures == 0,
        format!("1000 random contour/assertion instances; failures {failures}"),
    )
}

fn regression_band() -> Outcome {
    let e =
        regression_band_experiment(200, 200, 0.05, SEED, &Regressor::BSpline { df: 12 }).unwrap();
    Outcome::new(
        e.coverage_pass && e.finite_everywhere && e.fitted_inside >= 0.95,
        format!(
            "coverage {:.3} (≥ {:.3}), finite at every x: {}, fitted inside at {:.0}% of x",
            e.coverage,
            0.95 - 3.0 * e.se,
            e.finite_everywhere,
            100.0 * e.fitted_inside
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 13] = [
        (1, "DP interval coverage", table1),
        (2, "depth IM vs Jeffreys regions", table2),
        (3, "weak validity, median measure", weak_validity),
        (4, "strong validity + sure-loss control", strong_validity),
        (5, "alternative strong validity", alt_strong_validity),
        (6, "exact finite-space check", exact_finite),
        (7, "IM = conformal identity", im_identity),
        (8, "smoothed uniformity", smoothed_uniformity),
        (9, "classical recovery", classical_recovery),
        (10, "NPI singleton bounds", npi_singletons),
        (11, "Tukey depth oracle", tukey_depth),
        (12, "possibility calculus", possibility_calculus),
        (13, "regression band", regression_band),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} [{}] {name} ({:.1}s): {}",
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
