//! Network configuration, validation, coordinate indexing, and routing.
//!
//! The closed network has `N` stations and `N(N-1)` directed roads. Each road
//! carries two customer classes: class 1 (first trip after rental) and class 2
//! (deflected after a blocked return). The canonical coordinate system is
//! per-class: coordinates `0..N` are stations, followed by the road-class
//! pairs in lexicographic `(origin, destination, class)` order, giving
//! dimension `N + 2N(N-1)`.

mod config;
mod dist;
mod index;
mod rates;
mod routing;

pub use config::{ConfigViolation, NetworkConfig, StationSpec};
pub use dist::{DistributionFamily, DistributionSpec, Sampler};
pub use index::{Coordinate, IndexMap};
pub use rates::NominalRates;
pub use routing::{routing_matrix, RoutingView};
