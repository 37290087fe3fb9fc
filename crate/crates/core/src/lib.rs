pub mod assertion;
pub mod baselines;
pub mod conformal;
pub mod consonant;
pub mod contour;
pub mod error;
pub mod grid;
pub mod harness;
pub mod imrandomset;
pub mod level;
pub mod nonconformity;
pub mod region;
pub mod sample;

pub use assertion::{Assertion, Bound, BoxSet, Interval, IntervalSet};
pub use baselines::{DpPredictive, Generator, JeffreysPredictive};
pub use conformal::{
    contour_on_grid, prediction_region, regression_band, regression_contour, smoothed_transducer,
    transducer, TransducerResult,
};
pub use consonant::{ConsonantPredictor, CredalRow};
pub use contour::PlausibilityContour;
pub use error::{Error, Result};
pub use grid::{build_grid, Axis, Grid, GridSpec};
pub use imrandomset::{
    classical_interval, im_contour, im_contour_on_grid, im_contour_with_ties, npi_bounds,
    randomized_im_contour, twosided_contour, twosided_region, NestedRandomSetFamily, RankTies,
    WilksFamily,
};
pub use level::{corrected_steps, k_n};
pub use nonconformity::{MeasureSpec, NonconformityMeasure, Regressor};
pub use region::PredictionRegion;
pub use sample::Sample;
