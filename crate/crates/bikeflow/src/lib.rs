//! Simulation and numerical analysis of a closed bike-sharing queueing network.
//!
//! The library models a fleet of bikes circulating among capacitated stations
//! connected by road segments. Riders rent bikes at stations, travel along
//! roads, and return bikes at destination stations; returns to a full station
//! are deflected to another station and ride on as a second customer class.
//!
//! Modules:
//! - [`model`] — network configuration, validation, coordinate indexing, routing.
//! - [`des`] — discrete-event simulation of the closed network with exact
//!   flow-balance bookkeeping.
//! - [`scaling`] — heavy-traffic scaling families, fluid/diffusion rescaling,
//!   and convergence diagnostics.
//! - [`srbm`] — assembly and simulation of the limiting reflected Brownian
//!   motion in a box, plus reflection-geometry checks.
//! - [`analysis`] — stationary estimation, performance measures, basic adjoint
//!   relationship residuals, Kolmogorov–Smirnov comparisons.

pub mod analysis;
pub mod cli;
pub mod des;
pub mod error;
pub mod model;
pub mod scaling;
pub mod srbm;

pub use error::Error;
