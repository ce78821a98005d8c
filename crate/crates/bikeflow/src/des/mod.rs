//! Discrete-event simulation of the closed bike-sharing network.
//!
//! Stations are renewal arrival streams with lost arrivals when empty; each
//! road-class coordinate is a single-server queue with renewal travel times,
//! so trip completions form the service process `S(B(t))` evaluated at the
//! server's cumulative busy time. Returns to a full station deflect: the bike
//! re-enters a class-2 road chosen by the deflection routing.
//!
//! A run is stored as the initial state plus the event log; all path
//! functionals (busy times, idle times, counters) are reconstructed exactly by
//! replay, which keeps long runs cheap in memory and makes the complementarity
//! checks exact.

mod checks;
mod event;
mod rng;
mod sim;
mod trajectory;

pub use checks::{
    centered_x, complementarity_check, conservation_and_box_check, flow_balance_check,
    long_run_rates, pathwise_decomposition_check, reflection_terms, BoxCheck,
};
pub use event::{Event, EventKind};
pub use rng::{stream_rng, StreamPurpose};
pub use sim::simulate;
pub use trajectory::{EventRecord, ProcessState, Trajectory};
