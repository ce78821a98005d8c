//! Semimartingale reflected Brownian motion on the network's box state
//! space: parameter assembly from a network model, reflection-geometry
//! verification via the S-matrix linear program, and an Euler scheme with a
//! projected Gauss–Seidel reflection step.

mod geometry;
mod params;
mod sim;
mod smatrix;

pub use geometry::{
    verify_reflection_geometry, verify_reflection_geometry_sampled, Face, FaceSet, GeometryReport,
    EXHAUSTIVE_DIM_LIMIT,
};
pub use params::{
    conserved_covariance, covariance_matrix, drift_vector, primitive_covariances,
    reflection_matrices, PrimitiveCovariances, SrbmParams,
};
pub use sim::{simulate_srbm, simulate_srbm_observed, SrbmObserver, SrbmPath};
pub use smatrix::{is_s_matrix, max_positivity_slack};
