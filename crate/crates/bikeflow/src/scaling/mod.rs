//! Heavy-traffic scaling: sequences of networks with `O(1/√n)` drifts and
//! `O(√n)` capacities, fluid- and diffusion-scaled paths, and convergence
//! diagnostics for the fluid limit and the martingale property of the
//! diffusion-scaled free process.

mod diagnostics;
mod family;
mod paths;

pub use diagnostics::{
    diagnostics_to_csv, diffusion_comparison, fluid_limit_diagnostic, martingale_diagnostic,
    srbm_params_for, trend_decreasing_pairs, DiagnosticRow,
};
pub use family::{zero_deflection_rates, ScalingFamily, CAPACITY_RULE, RATE_RULE};
pub use paths::{diffusion_scale, fluid_scale, ScaledPath, ScalingKind};
