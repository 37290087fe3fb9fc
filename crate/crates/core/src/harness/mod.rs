//! Monte Carlo and exact-enumeration experiments: weak, strong and
//! alternative strong validity, the finite-space check, KS calibration,
//! table reproductions and plot-ready figure data.
//!
//! Every replication draws from its own RNG stream (see [`replication_rng`]),
//! so results do not depend on the number of worker threads.

mod exact;
mod figures;
mod ks;
mod report;
mod rng;
mod strong;
mod tables;
mod weak;

pub use exact::{
    exact_strong_validity_finite, ConsonantFinite, ConstantUpper, DirectViolation, ExactReport,
    ExactViolation, ExplicitLaw, FinitePredictor, IidLaw, JointLaw, MixtureLaw,
};
pub use figures::{band_figure, contour_figure, hist_figure, DataTable};
pub use ks::{kolmogorov_pvalue, ks_statistic, ks_uniformity, KsResult};
pub use report::{Direction, ExperimentConfig, ValidityReport, ValidityRow, SLACK_SE};
pub use rng::{derive_seed, replication_rng, run_replications};
pub use strong::{
    default_assertions, estimate_alt_strong_validity, estimate_strong_validity, AssertionMap,
    BallMap, ConsonantUpper, NormalUpper, RayMap, UpperPredictor,
};
pub use tables::{
    regression_band_experiment, reproduce_table1, reproduce_table2, BandExperiment, BandPoint,
    Table1, Table1Row, Table2, Table2Row, TABLE2_BAYES, TABLE2_IM, TABLE2_IM_MIN,
};
pub use weak::{
    estimate_weak_validity, ConformalRegions, DpRegions, JeffreysRegions, RegionBuilder,
    TwoSidedRegions, WilksRegions,
};
