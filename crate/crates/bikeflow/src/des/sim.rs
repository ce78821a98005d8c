use std::collections::BinaryHeap;
use std::cmp::Reverse;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::event::{Event, EventKind};
use super::rng::{stream_rng, StreamPurpose};
use super::trajectory::{EventRecord, Trajectory};
use crate::error::{Error, Result};
use crate::model::{NetworkConfig, Sampler};

struct SimState {
    q: Vec<i64>,
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
}

impl SimState {
    fn push(&mut self, time: f64, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Reverse(Event { time, kind, seq }));
    }
}

/// Runs the closed-network simulation over `[0, horizon]`.
///
/// Mechanics per event:
/// - Arrival at station `j`: if `Q_j ≥ 1` the rider rents a bike, the
///   destination `i` is drawn from `first_routing[j]`, and the bike joins the
///   class-1 queue of road `j→i`; if `Q_j = 0` the arrival is lost. The next
///   arrival is scheduled either way.
/// - Completion on road `j→i`: if `Q_i < K_i` the bike docks; otherwise the
///   return is blocked, a deflection target `l` is drawn from
///   `deflect_routing[i]`, and the bike joins the class-2 queue of road `i→l`.
///
/// Each road-class queue is served by a single server drawing a fresh travel
/// time at each service start, so completions form a renewal process in the
/// server's busy time. Deterministic given `(cfg, horizon, seed)`.
pub fn simulate(cfg: &NetworkConfig, horizon: f64, seed: u64) -> Result<Trajectory> {
    cfg.validated()?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }

    let idx = cfg.index_map();
    let n = idx.n_stations();
    let mut tr = Trajectory::from_config(cfg, horizon, seed);

    let arrival_samplers: Vec<Sampler> = cfg.stations.iter().map(|s| s.arrival.sampler()).collect();
    let mut travel_samplers = vec![None; idx.dim()];
    for (j, i) in idx.road_pairs() {
        travel_samplers[idx.road(j, i, 1)] = Some(cfg.travel_first[j][i].sampler());
        travel_samplers[idx.road(j, i, 2)] = Some(cfg.travel_deflect[j][i].sampler());
    }

    let mut arrival_rngs: Vec<ChaCha8Rng> =
        (0..n).map(|j| stream_rng(seed, StreamPurpose::Arrival(j))).collect();
    let mut first_rngs: Vec<ChaCha8Rng> =
        (0..n).map(|j| stream_rng(seed, StreamPurpose::FirstRouting(j))).collect();
    let mut deflect_rngs: Vec<ChaCha8Rng> =
        (0..n).map(|j| stream_rng(seed, StreamPurpose::DeflectRouting(j))).collect();
    let mut travel_rngs: Vec<Option<ChaCha8Rng>> = (0..idx.dim())
        .map(|c| (c >= n).then(|| stream_rng(seed, StreamPurpose::Travel(c))))
        .collect();

    let mut sim = SimState { q: tr.initial_q.clone(), heap: BinaryHeap::new(), seq: 0 };
    for j in 0..n {
        let t = arrival_samplers[j].sample(&mut arrival_rngs[j]);
        sim.push(t, EventKind::Arrival { station: j });
    }

    // Starts service on a road-class queue (queue must be nonempty, server idle).
    let start_service = |sim: &mut SimState,
                             travel_rngs: &mut Vec<Option<ChaCha8Rng>>,
                             now: f64,
                             origin: usize,
                             dest: usize,
                             class: u8| {
        let coord = idx.road(origin, dest, class);
        let dt = travel_samplers[coord]
            .as_ref()
            .expect("road sampler")
            .sample(travel_rngs[coord].as_mut().expect("road rng"));
        sim.push(now + dt, EventKind::Completion { origin, dest, class });
    };

    while let Some(Reverse(ev)) = sim.heap.pop() {
        if ev.time > horizon {
            break;
        }
        match ev.kind {
            EventKind::Arrival { station: j } => {
                let next = ev.time + arrival_samplers[j].sample(&mut arrival_rngs[j]);
                sim.push(next, EventKind::Arrival { station: j });
                if sim.q[j] >= 1 {
                    let i = draw_destination(&cfg.first_routing[j], j, &mut first_rngs[j]);
                    sim.q[j] -= 1;
                    let coord = idx.road(j, i, 1);
                    sim.q[coord] += 1;
                    if sim.q[coord] == 1 {
                        start_service(&mut sim, &mut travel_rngs, ev.time, j, i, 1);
                    }
                    tr.events.push((ev.time, EventRecord::Arrival { station: j, dest: Some(i) }));
                } else {
                    tr.events.push((ev.time, EventRecord::Arrival { station: j, dest: None }));
                }
            }
            EventKind::Completion { origin, dest, class } => {
                let coord = idx.road(origin, dest, class);
                sim.q[coord] -= 1;
                if sim.q[coord] > 0 {
                    start_service(&mut sim, &mut travel_rngs, ev.time, origin, dest, class);
                }
                let deflected = if sim.q[dest] < cfg.stations[dest].capacity as i64 {
                    sim.q[dest] += 1;
                    None
                } else {
                    let l = draw_destination(&cfg.deflect_routing[dest], dest, &mut deflect_rngs[dest]);
                    let onward = idx.road(dest, l, 2);
                    sim.q[onward] += 1;
                    if sim.q[onward] == 1 {
                        start_service(&mut sim, &mut travel_rngs, ev.time, dest, l, 2);
                    }
                    Some(l)
                };
                tr.events.push((ev.time, EventRecord::Completion { origin, dest, class, deflected }));
            }
        }
    }

    Ok(tr)
}

/// Draws a destination from a routing row (diagonal entry is zero).
fn draw_destination<R: Rng>(row: &[f64], from: usize, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    let mut last = None;
    for (i, &p) in row.iter().enumerate() {
        if i == from || p <= 0.0 {
            continue;
        }
        cum += p;
        last = Some(i);
        if u < cum {
            return i;
        }
    }
    last.expect("routing row has positive off-diagonal mass")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DistributionSpec;

    fn sym() -> NetworkConfig {
        NetworkConfig::symmetric(
            2,
            5,
            3,
            DistributionSpec::exponential(1.0),
            DistributionSpec::exponential(1.0),
        )
    }

    #[test]
    fn deterministic_replay() {
        let cfg = sym();
        let a = simulate(&cfg, 100.0, 7).unwrap();
        let b = simulate(&cfg, 100.0, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate(&cfg, 100.0, 8).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn conservation_along_the_path() {
        let cfg = sym();
        let tr = simulate(&cfg, 500.0, 3).unwrap();
        let total: i64 = cfg.total_bikes() as i64;
        tr.replay(|s| assert_eq!(s.q.iter().sum::<i64>(), total));
    }

    #[test]
    fn blocked_return_increments_yk() {
        // K = C = 1 per station: every return to the other station while it
        // holds its bike is blocked and must deflect.
        let mut cfg = sym();
        for st in &mut cfg.stations {
            st.capacity = 1;
            st.initial_bikes = 1;
        }
        let tr = simulate(&cfg, 2000.0, 5).unwrap();
        let end = tr.final_state();
        let blocked = tr
            .events
            .iter()
            .filter(|(_, r)| matches!(r, EventRecord::Completion { deflected: Some(_), .. }))
            .count() as u64;
        assert!(blocked > 0, "expected deflections in a tight network");
        assert_eq!(end.yk.iter().sum::<u64>(), blocked);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = sym();
        assert!(simulate(&cfg, 0.0, 1).is_err());
        let mut bad = cfg;
        bad.first_routing[0] = vec![0.5, 0.4];
        assert!(simulate(&bad, 10.0, 1).is_err());
    }

    #[test]
    fn lost_arrivals_change_no_queue() {
        let cfg = sym();
        let tr = simulate(&cfg, 1000.0, 11).unwrap();
        let mut lost_seen = 0;
        tr.walk(
            |pre, rec| {
                if let EventRecord::Arrival { station, dest: None } = rec {
                    assert_eq!(pre.q[*station], 0);
                    lost_seen += 1;
                }
            },
            |_| {},
        );
        assert_eq!(tr.final_state().lost.iter().sum::<u64>() as usize, lost_seen);
    }
}
