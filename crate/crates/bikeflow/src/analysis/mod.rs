//! Stationary analysis of simulated paths: time-weighted occupancy
//! estimation, steady-state performance measures, the basic adjoint
//! relationship (BAR) residual check for the reflected diffusion, and
//! Kolmogorov–Smirnov distances for distributional comparisons.

mod bar;
mod ks;
mod report;
mod stationary;

pub use bar::{
    bar_residuals, bar_table_csv, generator, monomial_basis, BarAccumulator, BarResidual, Monomial,
};
pub use ks::{ks_compare, ks_one_sample, ks_two_sample};
pub use report::{performance_measures, BarResidualRow, PerformanceReport};
pub use stationary::{
    estimate_from_trajectory, BoundaryMeasureEstimate, Histogram, StationaryAccumulator,
    StationaryEstimate, HISTOGRAM_BINS,
};
