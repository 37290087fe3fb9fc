mod output;
mod specs;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use consonant::harness::{
    band_figure, contour_figure, default_assertions, derive_seed, estimate_alt_strong_validity,
    estimate_strong_validity, estimate_weak_validity, exact_strong_validity_finite, hist_figure,
    ks_uniformity, replication_rng, reproduce_table1, reproduce_table2, ConformalRegions,
    DataTable, DpRegions, ExperimentConfig, JeffreysRegions, RegionBuilder, TwoSidedRegions,
    ValidityReport, WilksRegions,
};
use consonant::nonconformity::fitted_mean;
use consonant::{
    contour_on_grid, im_contour_on_grid, npi_bounds, prediction_region, randomized_im_contour,
    regression_band, twosided_contour, Assertion, ConsonantPredictor, Generator, GridSpec,
    MeasureSpec, PlausibilityContour, RankTies, Regressor, Sample, WilksFamily,
};

use output::{opt, Format, Output};

#[derive(Parser, Debug)]
#[command(
    name = "consonant",
    version,
    about = "Conformal plausibility contours and validity checks"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Master RNG seed.
    #[arg(long, global = true, default_value_t = 20190101)]
    seed: u64,
    /// Monte Carlo replications (each command has its own default).
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV with one point per row.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "median")]
    measure: MeasureSpec,
    /// `auto[:POINTS[:PADDING]]` or `LO:HI:COUNT[,LO:HI:COUNT]`.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    grid: GridSpec,
}

#[derive(Args, Debug)]
struct ContourSource {
    /// A contour written by `contour` or `im-contour` (CSV or JSON).
    #[arg(long, conflicts_with = "data")]
    contour: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "median")]
    measure: MeasureSpec,
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    grid: GridSpec,
}

#[derive(Args, Debug)]
struct Experiment {
    /// Data generator, e.g. normal, normal0.5, cauchy, skewnormal, binormal, bit3.
    #[arg(long, default_value = "normal")]
    dist: Generator,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2])]
    alpha: Vec<f64>,
    #[arg(long, default_value = "median")]
    measure: MeasureSpec,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Ties {
    Min,
    Max,
}

impl From<Ties> for RankTies {
    fn from(t: Ties) -> Self {
        match t {
            Ties::Min => RankTies::Min,
            Ties::Max => RankTies::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeakMethod {
    Conformal,
    Dp,
    Wilks,
    Twosided,
    Jeffreys,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ImKind {
    Lower,
    Randomized,
    Twosided,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Conformal plausibility contour of the next observation on a grid.
    Contour(DataArgs),
    /// Prediction region `{π > threshold}` from a contour.
    Region {
        #[command(flatten)]
        source: ContourSource,
        #[arg(long)]
        alpha: f64,
        /// Threshold at k_n(α) rather than α.
        #[arg(long)]
        corrected: bool,
    },
    /// Full-conformal regression band for (x, y) data.
    Band {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value = "auto:50:0", allow_hyphen_values = true)]
        xgrid: GridSpec,
        #[arg(long, default_value = "auto:400:0.5", allow_hyphen_values = true)]
        ygrid: GridSpec,
        #[arg(long, default_value = "bspline:df=12")]
        regressor: Regressor,
    },
    /// Lower and upper probabilities of assertions from a contour.
    Plaus {
        #[command(flatten)]
        source: ContourSource,
        /// e.g. `[0,1]`, `(-inf,0)|(2,inf)`, `box:0,1,0,1`, `not:[0,1]`.
        #[arg(long = "assert", required = true)]
        assertions: Vec<Assertion>,
    },
    /// Inferential-model plausibility contour built from a nested random set.
    ImContour {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value_t = ImKind::Lower)]
        kind: ImKind,
        #[arg(long, value_enum, default_value_t = Ties::Min)]
        ties: Ties,
        /// Tie-breaking weight for the randomized kind; drawn from the seed when omitted.
        #[arg(long)]
        w: Option<f64>,
    },
    /// Nonparametric predictive lower and upper probabilities.
    Npi {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "assert", required = true)]
        assertions: Vec<Assertion>,
    },
    /// Order-statistic interval `[y_(r), y_(s)]` and its coverage.
    Wilks {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, requires = "s")]
        r: Option<usize>,
        #[arg(long, requires = "r")]
        s: Option<usize>,
        /// Pick the central interval for this level instead of `--r/--s`.
        #[arg(long, conflicts_with_all = ["r", "s"])]
        alpha: Option<f64>,
    },
    /// Coverage of the Bayesian baselines.
    #[command(subcommand)]
    Baseline(Baseline),
    /// Monte Carlo coverage of prediction regions.
    ValidateWeak {
        #[command(flatten)]
        exp: Experiment,
        #[arg(long, value_enum, default_value_t = WeakMethod::Conformal)]
        method: WeakMethod,
        #[arg(long, value_enum, default_value_t = Ties::Min)]
        ties: Ties,
    },
    /// Monte Carlo check of `P{Π̄(A) ≤ α, A true} ≤ α` over assertions.
    ValidateStrong {
        #[command(flatten)]
        exp: Experiment,
        /// consonant, normal-fitted or normal:MEAN,SD.
        #[arg(long, default_value = "consonant")]
        predictor: String,
        /// Assertions to check; a built-in suite when omitted.
        #[arg(long = "assert")]
        assertions: Vec<Assertion>,
    },
    /// The strong-validity check with data-dependent assertions `A[y]`.
    ValidateStrongAlt {
        #[command(flatten)]
        exp: Experiment,
        #[arg(long, default_value = "consonant")]
        predictor: String,
        /// ball:EPS or ray.
        #[arg(long, default_value = "ball:0.01")]
        map: String,
    },
    /// Exact strong-validity check on a finite space by enumeration.
    ValidateExact {
        #[arg(long, default_value_t = 2)]
        space_size: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// consonant, zero, vacuous or constant:C.
        #[arg(long, default_value = "consonant")]
        predictor: String,
        #[arg(long, default_value = "counting")]
        measure: MeasureSpec,
        /// iid:P0,P1,... or mixture:W@P0,P1,...;W@...
        #[arg(long, default_value = "iid:0.5,0.5")]
        law: String,
    },
    /// Kolmogorov-Smirnov test of transducer uniformity at the truth.
    Ks {
        #[arg(long, default_value = "normal")]
        dist: Generator,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value = "median")]
        measure: MeasureSpec,
        /// Use the unsmoothed transducer.
        #[arg(long)]
        raw: bool,
        /// Fail when the p-value is at or below this level.
        #[arg(long, default_value_t = 0.01)]
        level: f64,
    },
    /// Dirichlet-process interval coverage for three distributions and n = 20, 30, 40.
    Table1,
    /// Depth-based regions against Jeffreys predictive ellipsoids.
    Table2,
    /// Plot-ready data.
    #[command(subcommand)]
    FigureData(Figure),
}

#[derive(Subcommand, Debug)]
enum Baseline {
    /// Equal-tailed Dirichlet-process predictive intervals.
    Dp {
        #[arg(long, default_value = "cauchy")]
        dist: Generator,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
    },
    /// Jeffreys-prior Student-t predictive ellipsoids.
    Jeffreys {
        #[arg(long, default_value = "binormal")]
        dist: Generator,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

#[derive(Subcommand, Debug)]
enum Figure {
    /// One-dimensional data with median-measure and two-sided contours.
    Hist {
        #[arg(long, default_value = "normal")]
        dist: Generator,
        #[arg(long, default_value_t = 50)]
        n: usize,
    },
    /// Bivariate data with the depth contour and region membership.
    Contour {
        #[arg(long, default_value = "binormal")]
        dist: Generator,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Regression band with fitted and true mean curves.
    Band {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value = "bspline:df=12")]
        regressor: Regressor,
    },
}

/// What a command reports back to `main`.
enum Status {
    Done,
    BoundFailed,
}

fn read_sample(path: &PathBuf) -> Result<Sample> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Sample::read_csv(file).with_context(|| format!("cannot read data from {}", path.display()))
}

fn load_contour(source: &ContourSource) -> Result<PlausibilityContour> {
    match (&source.contour, &source.data) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            Ok(PlausibilityContour::read_any(&text)?)
        }
        (None, Some(data)) => {
            let data = read_sample(data)?;
            let grid = source.grid.resolve(&data)?;
            Ok(contour_on_grid(
                &data,
                source.measure.build().as_ref(),
                &grid,
            )?)
        }
        (None, None) => bail!("give either --contour or --data"),
    }
}

fn warn_normalization(contour: &PlausibilityContour) {
    if let Some(w) = contour.normalization_warning() {
        eprintln!("warning: {w}");
    }
}

fn write_contour(
    out: &Output,
    contour: &PlausibilityContour,
    metadata: BTreeMap<String, String>,
) -> Result<()> {
    let w = out.open()?;
    match out.format {
        Format::Csv => contour.write_csv(w)?,
        Format::Json => contour.write_json(w, metadata)?,
    }
    Ok(())
}

fn write_tables(out: &Output, tables: &[DataTable]) -> Result<()> {
    match (out.format, &out.path) {
        (Format::Json, None) => out.json(&tables),
        (Format::Csv, None) => {
            let mut w = out.open()?;
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    writeln!(w)?;
                }
                writeln!(w, "# {}", t.name)?;
                t.write_csv(&mut w)?;
            }
            Ok(())
        }
        (format, Some(_)) => {
            for (i, t) in tables.iter().enumerate() {
                let path = if i == 0 {
                    out.path.clone()
                } else {
                    out.sibling(&t.name)
                };
                let w = output::open_path(path.as_deref())?;
                match format {
                    Format::Csv => t.write_csv(w)?,
                    Format::Json => t.write_json(w)?,
                }
            }
            Ok(())
        }
    }
}

fn write_report(out: &Output, report: &ValidityReport) -> Result<Status> {
    let w = out.open()?;
    match out.format {
        Format::Csv => report.write_csv(w)?,
        Format::Json => report.write_json(w)?,
    }
    for row in report.failures() {
        eprintln!(
            "bound failed: {} {} n={} alpha={} {} estimate={:.4} bound={:.4} se={:.4}",
            row.experiment,
            row.predictor,
            row.n,
            row.alpha,
            row.assertion,
            row.estimate,
            row.bound,
            row.se
        );
    }
    Ok(if report.all_pass() {
        Status::Done
    } else {
        Status::BoundFailed
    })
}

fn config(global: &Global, exp: &Experiment, default_reps: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        exp.dist,
        exp.n,
        global.reps.unwrap_or(default_reps),
        exp.alpha.clone(),
        global.seed,
    )
    .with_measure(exp.measure.to_string());
    c.output = global.out.clone();
    c
}

fn run(cli: Cli) -> Result<Status> {
    let g = &cli.global;
    let out = Output {
        path: g.out.clone(),
        format: g.format,
    };
    match cli.command {
        Command::Contour(args) => {
            let data = read_sample(&args.data)?;
            let grid = args.grid.resolve(&data)?;
            let contour = contour_on_grid(&data, args.measure.build().as_ref(), &grid)?;
            warn_normalization(&contour);
            let meta = BTreeMap::from([
                ("data".to_string(), args.data.display().to_string()),
                ("measure".to_string(), args.measure.to_string()),
                ("grid".to_string(), args.grid.to_string()),
            ]);
            write_contour(&out, &contour, meta)?;
        }
        Command::Region {
            source,
            alpha,
            corrected,
        } => {
            let contour = load_contour(&source)?;
            let region = prediction_region(&contour, alpha, corrected)?;
            match out.format {
                Format::Json => out.json(&serde_json::json!({
                    "alpha": alpha,
                    "corrected": corrected,
                    "threshold": region.threshold,
                    "n": region.n,
                    "retained": region.retained(),
                    "intervals": region.intervals(),
                    "area": region.area(),
                }))?,
                Format::Csv => {
                    let dim = contour.grid().dim();
                    let mut header: Vec<String> = (0..dim).map(|a| format!("x{a}")).collect();
                    header.extend(["value".into(), "in_region".into()]);
                    let rows: Vec<Vec<String>> = contour
                        .grid()
                        .points()
                        .enumerate()
                        .map(|(i, p)| {
                            let mut r: Vec<String> = p.iter().map(f64::to_string).collect();
                            r.push(contour.value(i).to_string());
                            r.push(u8::from(region.contains_index(i)).to_string());
                            r
                        })
                        .collect();
                    let header: Vec<&str> = header.iter().map(String::as_str).collect();
                    out.records(&header, &rows)?;
                }
            }
        }
        Command::Band {
            data,
            alpha,
            xgrid,
            ygrid,
            regressor,
        } => {
            let pairs = read_sample(&data)?;
            if pairs.dim() != 2 {
                bail!("band needs two columns (x, y), got {}", pairs.dim());
            }
            let xs: Vec<f64> = pairs.points().map(|p| p[0]).collect();
            let ys: Vec<f64> = pairs.points().map(|p| p[1]).collect();
            let x_grid = xgrid.resolve(&Sample::from_scalars(&xs)?)?;
            let y_grid = ygrid.resolve(&Sample::from_scalars(&ys)?)?;
            let slices = regression_band(&pairs, x_grid.coords(), &y_grid, alpha, &regressor)?;
            let bag: Vec<&[f64]> = pairs.points().collect();
            let fitted = fitted_mean(&bag, x_grid.coords(), &regressor)?;
            let rows: Vec<Vec<String>> = slices
                .iter()
                .zip(fitted)
                .map(|(s, f)| vec![s.x.to_string(), opt(s.lower), opt(s.upper), f.to_string()])
                .collect();
            out.records(&["x", "lower", "upper", "fitted"], &rows)?;
        }
        Command::Plaus { source, assertions } => {
            let contour = load_contour(&source)?;
            warn_normalization(&contour);
            let rows = ConsonantPredictor::new(contour).credal_pair(&assertions);
            for r in &rows {
                if let Some(w) = &r.warning {
                    eprintln!("warning: {w}");
                }
            }
            match out.format {
                Format::Json => out.json(&rows)?,
                Format::Csv => {
                    let rows: Vec<Vec<String>> = rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.assertion.clone(),
                                opt(r.lower),
                                opt(r.upper),
                                r.error.clone().unwrap_or_default(),
                            ]
                        })
                        .collect();
                    out.records(&["assertion", "lower", "upper", "error"], &rows)?;
                }
            }
        }
        Command::ImContour {
            data: args,
            kind,
            ties,
            w,
        } => {
            let data = read_sample(&args.data)?;
            let grid = args.grid.resolve(&data)?;
            let measure = args.measure.build();
            let mut meta = BTreeMap::from([
                ("data".to_string(), args.data.display().to_string()),
                ("measure".to_string(), args.measure.to_string()),
                ("grid".to_string(), args.grid.to_string()),
            ]);
            let values: Vec<f64> = match kind {
                ImKind::Lower => {
                    let contour = im_contour_on_grid(&data, measure.as_ref(), &grid, ties.into())?;
                    warn_normalization(&contour);
                    meta.insert("ties".into(), format!("{ties:?}").to_lowercase());
                    return write_contour(&out, &contour, meta).map(|_| Status::Done);
                }
                ImKind::Randomized => {
                    let w = w.unwrap_or_else(|| {
                        replication_rng(derive_seed(g.seed, "im-contour/w"), 0).random()
                    });
                    meta.insert("seed".into(), g.seed.to_string());
                    meta.insert("w".into(), w.to_string());
                    grid.points()
                        .map(|p| randomized_im_contour(&data, measure.as_ref(), p, w))
                        .collect::<consonant::Result<_>>()?
                }
                ImKind::Twosided => grid
                    .points()
                    .map(|p| twosided_contour(&data, p[0]))
                    .collect::<consonant::Result<_>>()?,
            };
            let dim = grid.dim();
            let mut columns: Vec<String> = (0..dim).map(|a| format!("x{a}")).collect();
            columns.push("value".into());
            let table = DataTable {
                name: "im_contour".into(),
                columns,
                rows: grid
                    .points()
                    .zip(values)
                    .map(|(p, v)| p.iter().copied().chain([v]).collect())
                    .collect(),
                metadata: meta,
            };
            write_tables(&out, &[table])?;
        }
        Command::Npi { data, assertions } => {
            let data = read_sample(&data)?;
            let rows = assertions
                .iter()
                .map(|a| {
                    let b = npi_bounds(&data, a)?;
                    Ok(vec![
                        a.to_string(),
                        b.lower().to_string(),
                        b.upper().to_string(),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            out.records(&["assertion", "lower", "upper"], &rows)?;
        }
        Command::Wilks { data, r, s, alpha } => {
            let data = read_sample(&data)?;
            let (r, s) = match (r, s, alpha) {
                (Some(r), Some(s), _) => (r, s),
                (_, _, Some(a)) => WilksFamily::indices(data.len(), a)?.with_context(|| {
                    format!("no order-statistic interval reaches level {}", 1.0 - a)
                })?,
                _ => bail!("give --r and --s, or --alpha"),
            };
            let w = consonant::classical_interval(&data, r, s)?;
            let (lo, hi) = (w.interval.lo.value, w.interval.hi.value);
            out.records(
                &["r", "s", "lower", "upper", "level"],
                &[vec![
                    r.to_string(),
                    s.to_string(),
                    lo.to_string(),
                    hi.to_string(),
                    w.level.to_string(),
                ]],
            )?;
        }
        Command::Baseline(b) => {
            let (dist, n, alpha, builder): (_, _, _, Box<dyn RegionBuilder>) = match b {
                Baseline::Dp { dist, n, alpha } => (dist, n, alpha, Box::new(DpRegions)),
                Baseline::Jeffreys { dist, n, alpha } => {
                    (dist, n, alpha, Box::new(JeffreysRegions))
                }
            };
            let exp = Experiment {
                dist,
                n,
                alpha: vec![alpha],
                measure: MeasureSpec::Median,
            };
            let report = estimate_weak_validity(&config(g, &exp, 5000), builder.as_ref())?;
            return write_report(&out, &report);
        }
        Command::ValidateWeak { exp, method, ties } => {
            let builder: Box<dyn RegionBuilder> = match method {
                WeakMethod::Conformal => {
                    Box::new(ConformalRegions::new(exp.measure.build()).with_ties(ties.into()))
                }
                WeakMethod::Dp => Box::new(DpRegions),
                WeakMethod::Wilks => Box::new(WilksRegions),
                WeakMethod::Twosided => Box::new(TwoSidedRegions),
                WeakMethod::Jeffreys => Box::new(JeffreysRegions),
            };
            let report = estimate_weak_validity(&config(g, &exp, 2000), builder.as_ref())?;
            return write_report(&out, &report);
        }
        Command::ValidateStrong {
            exp,
            predictor,
            assertions,
        } => {
            let assertions = if assertions.is_empty() {
                default_assertions()
            } else {
                assertions
            };
            let cfg = config(g, &exp, 2000).with_assertions(&assertions);
            let predictor = specs::upper_predictor(&predictor, &exp.measure)?;
            let report = estimate_strong_validity(&cfg, predictor.as_ref(), &assertions)?;
            return write_report(&out, &report);
        }
        Command::ValidateStrongAlt {
            exp,
            predictor,
            map,
        } => {
            let cfg = config(g, &exp, 2000);
            let predictor = specs::upper_predictor(&predictor, &exp.measure)?;
            let map = specs::assertion_map(&map)?;
            let report = estimate_alt_strong_validity(&cfg, predictor.as_ref(), map.as_ref())?;
            return write_report(&out, &report);
        }
        Command::ValidateExact {
            space_size,
            n,
            predictor,
            measure,
            law,
        } => {
            let predictor = specs::finite_predictor(&predictor, &measure)?;
            let law = specs::joint_law(&law)?;
            let report =
                exact_strong_validity_finite(space_size, n, predictor.as_ref(), law.as_ref())?;
            match out.format {
                Format::Json => out.json(&report)?,
                Format::Csv => {
                    let join =
                        |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
                    let rows: Vec<Vec<String>> = report
                        .violations
                        .iter()
                        .map(|v| {
                            vec![
                                join(&v.assertion),
                                v.rank.to_string(),
                                join(&v.configuration),
                                v.upper.to_string(),
                                v.tail_mass.to_string(),
                            ]
                        })
                        .collect();
                    out.records(
                        &["assertion", "rank", "configuration", "upper", "tail_mass"],
                        &rows,
                    )?;
                }
            }
            eprintln!(
                "{} of {} inequalities violated over {} assertions; direct evaluation {}",
                report.violations.len(),
                report.inequalities_checked,
                report.assertions_checked,
                if report.agree { "agrees" } else { "disagrees" }
            );
            if !report.agree {
                bail!("rank-inequality and direct evaluations disagree");
            }
            return Ok(if report.pass() {
                Status::Done
            } else {
                Status::BoundFailed
            });
        }
        Command::Ks {
            dist,
            n,
            measure,
            raw,
            level,
        } => {
            let exp = Experiment {
                dist,
                n,
                alpha: vec![0.05],
                measure,
            };
            let result = ks_uniformity(&config(g, &exp, 5000), !raw)?;
            let pass = result.p_value > level;
            out.records(
                &[
                    "statistic",
                    "p_value",
                    "reps",
                    "smoothed",
                    "config_hash",
                    "seed",
                    "pass",
                ],
                &[vec![
                    result.statistic.to_string(),
                    result.p_value.to_string(),
                    result.reps.to_string(),
                    result.smoothed.to_string(),
                    result.config_hash.clone(),
                    g.seed.to_string(),
                    pass.to_string(),
                ]],
            )?;
            return Ok(if pass {
                Status::Done
            } else {
                Status::BoundFailed
            });
        }
        Command::Table1 => {
            let t = reproduce_table1(g.reps.unwrap_or(5000), g.seed)?;
            match out.format {
                Format::Csv => t.write_csv(out.open()?)?,
                Format::Json => out.json(&t)?,
            }
        }
        Command::Table2 => {
            let t = reproduce_table2(g.reps.unwrap_or(500), g.seed)?;
            match out.format {
                Format::Csv => t.write_csv(out.open()?)?,
                Format::Json => out.json(&t)?,
            }
        }
        Command::FigureData(fig) => {
            let tables = match fig {
                Figure::Hist { dist, n } => hist_figure(&dist, n, g.seed)?,
                Figure::Contour { dist, n, alpha } => contour_figure(&dist, n, alpha, g.seed)?,
                Figure::Band {
                    n,
                    alpha,
                    regressor,
                } => band_figure(n, alpha, g.seed, &regressor)?,
            };
            write_tables(&out, &tables)?;
        }
    }
    Ok(Status::Done)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: cannot start {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::BoundFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
