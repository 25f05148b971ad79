//! Empirical measures, measure interpolation and Wasserstein distances.

mod assignment;
mod measure;
mod wasserstein;

pub use assignment::solve_assignment;
pub use measure::{stack_measures, EmpiricalMeasure, MeasureAt, MeasurePathView, MixtureMeasure};
pub use wasserstein::{
    d_p_sup, d_p_sup_with, interval_slack, w2_to_gaussian_1d, wasserstein_1d,
    wasserstein_1d_quantile, wasserstein_assignment, wasserstein_to_dirac0, WassersteinSolver,
    DEFAULT_ASSIGNMENT_CAP,
};
