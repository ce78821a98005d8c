use crate::model::{IndexMap, NetworkConfig};

/// One realized state transition, logged at its epoch.
///
/// The log is the complete run record: together with the initial state it
/// determines every path functional by deterministic replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventRecord {
    /// Rider arrival at `station`; `dest = Some(i)` is a rental onto road
    /// `station → i` (class 1), `None` a lost arrival at an empty station.
    Arrival { station: usize, dest: Option<usize> },
    /// Trip completion on road `origin → dest` of `class`; `deflected =
    /// Some(l)` means the return was blocked (destination full) and the bike
    /// re-entered road `dest → l` as class 2, `None` a successful docking.
    Completion { origin: usize, dest: usize, class: u8, deflected: Option<usize> },
}

/// Full process state at a point in time, reconstructed by replay.
///
/// Cumulative idle times are derived, not accumulated: `Y⁰ = t − B` per
/// coordinate, which keeps the pathwise decomposition an exact identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessState {
    pub t: f64,
    /// Queue lengths per coordinate (stations, then road-class pairs).
    pub q: Vec<i64>,
    /// Cumulative busy time `B` per coordinate (stations: nonempty time).
    pub busy: Vec<f64>,
    /// Cumulative time each station is full, `B^F`.
    pub full_time: Vec<f64>,
    /// Cumulative blocked returns (deflections) per station, `Y^K`.
    pub yk: Vec<u64>,
    /// Service completions per coordinate: rentals at stations, trip
    /// completions on road-class coordinates.
    pub completions: Vec<u64>,
    /// Class-1 routing counters `R_j^i` per road pair (rental destinations).
    pub r_first: Vec<u64>,
    /// Deflection routing counters per road pair.
    pub r_defl: Vec<u64>,
    /// Lost arrivals per station.
    pub lost: Vec<u64>,
}

impl ProcessState {
    pub fn initial(idx: &IndexMap, initial_q: &[i64]) -> Self {
        let dim = idx.dim();
        let n = idx.n_stations();
        ProcessState {
            t: 0.0,
            q: initial_q.to_vec(),
            busy: vec![0.0; dim],
            full_time: vec![0.0; n],
            yk: vec![0; n],
            completions: vec![0; dim],
            r_first: vec![0; idx.n_roads()],
            r_defl: vec![0; idx.n_roads()],
            lost: vec![0; n],
        }
    }

    /// Idle time `Y⁰` of a coordinate.
    pub fn idle(&self, coord: usize) -> f64 {
        self.t - self.busy[coord]
    }

    /// Accumulates the time integrals over `[self.t, t]` with the current
    /// (piecewise-constant) queue values.
    pub fn advance_to(&mut self, t: f64, capacities: &[u64]) {
        let dt = t - self.t;
        debug_assert!(dt >= 0.0);
        if dt > 0.0 {
            for (c, &qc) in self.q.iter().enumerate() {
                if qc > 0 {
                    self.busy[c] += dt;
                }
            }
            for (j, &cap) in capacities.iter().enumerate() {
                if self.q[j] == cap as i64 {
                    self.full_time[j] += dt;
                }
            }
        }
        self.t = t;
    }

    /// Applies the state jump of one logged event (time integrals must already
    /// be advanced to the event epoch).
    pub fn apply(&mut self, rec: &EventRecord, idx: &IndexMap) {
        match *rec {
            EventRecord::Arrival { station, dest } => match dest {
                Some(i) => {
                    self.completions[station] += 1;
                    self.r_first[idx.road_pair(station, i)] += 1;
                    self.q[station] -= 1;
                    self.q[idx.road(station, i, 1)] += 1;
                }
                None => self.lost[station] += 1,
            },
            EventRecord::Completion { origin, dest, class, deflected } => {
                let coord = idx.road(origin, dest, class);
                self.completions[coord] += 1;
                self.q[coord] -= 1;
                match deflected {
                    None => self.q[dest] += 1,
                    Some(l) => {
                        self.yk[dest] += 1;
                        self.r_defl[idx.road_pair(dest, l)] += 1;
                        self.q[idx.road(dest, l, 2)] += 1;
                    }
                }
            }
        }
    }
}

/// Complete record of one simulation run: initial condition plus event log.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub idx: IndexMap,
    pub horizon: f64,
    pub seed: u64,
    pub initial_q: Vec<i64>,
    /// Station capacities, needed to reconstruct full-time integrals.
    pub capacities: Vec<u64>,
    pub events: Vec<(f64, EventRecord)>,
}

impl Trajectory {
    pub fn from_config(cfg: &NetworkConfig, horizon: f64, seed: u64) -> Self {
        let idx = cfg.index_map();
        let mut initial_q = vec![0i64; idx.dim()];
        for (j, st) in cfg.stations.iter().enumerate() {
            initial_q[j] = st.initial_bikes as i64;
        }
        Trajectory {
            idx,
            horizon,
            seed,
            initial_q,
            capacities: cfg.stations.iter().map(|s| s.capacity).collect(),
            events: Vec::new(),
        }
    }

    pub fn initial_state(&self) -> ProcessState {
        ProcessState::initial(&self.idx, &self.initial_q)
    }

    /// Replays the run, calling `on_event(pre, record)` with the state
    /// advanced to each epoch but not yet jumped, and `post_event(state)`
    /// after each jump. Ends by advancing to the horizon and calling
    /// `post_event` one final time.
    pub fn walk(
        &self,
        mut on_event: impl FnMut(&ProcessState, &EventRecord),
        mut post_event: impl FnMut(&ProcessState),
    ) {
        let mut state = self.initial_state();
        post_event(&state);
        for (t, rec) in &self.events {
            state.advance_to(*t, &self.capacities);
            on_event(&state, rec);
            state.apply(rec, &self.idx);
            post_event(&state);
        }
        state.advance_to(self.horizon, &self.capacities);
        post_event(&state);
    }

    /// Replays the run, visiting the state after every jump (and at time 0 and
    /// the horizon).
    pub fn replay(&self, mut visit: impl FnMut(&ProcessState)) {
        self.walk(|_, _| {}, |s| visit(s));
    }

    /// State at the end of the run, integrals advanced to the horizon.
    pub fn final_state(&self) -> ProcessState {
        let mut state = self.initial_state();
        for (t, rec) in &self.events {
            state.advance_to(*t, &self.capacities);
            state.apply(rec, &self.idx);
        }
        state.advance_to(self.horizon, &self.capacities);
        state
    }

    /// States sampled at the given increasing times (integrals advanced to
    /// each sample point; events at exactly a sample time are applied first).
    pub fn states_at(&self, times: &[f64]) -> Vec<ProcessState> {
        let mut out = Vec::with_capacity(times.len());
        let mut state = self.initial_state();
        let mut next = times.iter().copied().peekable();
        for (t, rec) in &self.events {
            while let Some(&s) = next.peek() {
                if s < *t {
                    state.advance_to(s, &self.capacities);
                    out.push(state.clone());
                    next.next();
                } else {
                    break;
                }
            }
            state.advance_to(*t, &self.capacities);
            state.apply(rec, &self.idx);
        }
        for s in next {
            state.advance_to(s, &self.capacities);
            out.push(state.clone());
        }
        out
    }
}
