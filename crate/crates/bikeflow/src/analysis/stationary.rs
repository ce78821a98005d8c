use crate::des::Trajectory;
use crate::error::{Error, Result};
use crate::srbm::SrbmObserver;

/// Number of marginal histogram bins per coordinate.
pub const HISTOGRAM_BINS: usize = 50;

/// Time-weighted marginal histogram of one coordinate over `[0, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub hi: f64,
    /// Probability mass per equal-width bin; sums to 1 once normalized.
    pub mass: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        self.hi / self.mass.len() as f64
    }

    pub fn mean(&self) -> f64 {
        let w = self.bin_width();
        self.mass.iter().enumerate().map(|(k, &m)| m * (k as f64 + 0.5) * w).sum()
    }
}

/// Stationary occupancy statistics of a path after a burn-in period.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryEstimate {
    pub burn_in: f64,
    /// Effective averaging time (path duration past burn-in).
    pub total_time: f64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub marginals: Vec<Histogram>,
    /// Occupancy of the empty boundary per coordinate (exact state for
    /// integer paths, a thin bin for continuous ones).
    pub empty_occupancy: Vec<f64>,
    /// Occupancy of the full boundary per coordinate.
    pub full_occupancy: Vec<f64>,
    /// Width of the boundary detection band as a fraction of the box.
    pub boundary_width: f64,
}

/// Empirical boundary measures: long-run push/idle rates per face.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMeasureEstimate {
    /// Rate of idle-time / lower-face push accumulation per coordinate.
    pub lower_rate: Vec<f64>,
    /// Rate of blocked-return / full-face push accumulation per station.
    pub upper_rate: Vec<f64>,
}

/// Streaming accumulator of time-weighted occupancy over piecewise-constant
/// path segments. Also collects face push increments, so it can serve as an
/// observer of a reflected-diffusion run directly.
#[derive(Debug, Clone)]
pub struct StationaryAccumulator {
    caps: Vec<f64>,
    burn_in: f64,
    boundary_width: f64,
    time: f64,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    bins: Vec<Vec<f64>>,
    empty_time: Vec<f64>,
    full_time: Vec<f64>,
    push_lower: Vec<f64>,
    push_upper: Vec<f64>,
}

impl StationaryAccumulator {
    /// `caps` are the per-coordinate box heights; `boundary_width` the
    /// boundary band as a fraction of the box (0 detects exact face states).
    pub fn new(caps: Vec<f64>, n_stations: usize, burn_in: f64, boundary_width: f64) -> Self {
        let dim = caps.len();
        StationaryAccumulator {
            caps,
            burn_in,
            boundary_width,
            time: 0.0,
            sum: vec![0.0; dim],
            sum_sq: vec![0.0; dim],
            bins: vec![vec![0.0; HISTOGRAM_BINS]; dim],
            empty_time: vec![0.0; dim],
            full_time: vec![0.0; dim],
            push_lower: vec![0.0; dim],
            push_upper: vec![0.0; n_stations],
        }
    }

    /// Adds a segment during which the path held `values` for duration `dt`.
    pub fn add_segment(&mut self, dt: f64, values: &[f64]) {
        if dt <= 0.0 {
            return;
        }
        self.time += dt;
        for (c, &v) in values.iter().enumerate() {
            self.sum[c] += dt * v;
            self.sum_sq[c] += dt * v * v;
            let cap = self.caps[c];
            let band = self.boundary_width * cap + 1e-9;
            if v <= band {
                self.empty_time[c] += dt;
            }
            if v >= cap - band {
                self.full_time[c] += dt;
            }
            let k = if cap > 0.0 {
                ((v / cap * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
            } else {
                0
            };
            self.bins[c][k] += dt;
        }
    }

    /// Adds face push increments (idle time, blocked returns, or reflection
    /// pushes, in the source's own units).
    pub fn add_pushes(&mut self, lower: &[f64], upper: &[f64]) {
        for (acc, &d) in self.push_lower.iter_mut().zip(lower) {
            *acc += d;
        }
        for (acc, &d) in self.push_upper.iter_mut().zip(upper) {
            *acc += d;
        }
    }

    pub fn estimate(&self) -> Result<(StationaryEstimate, BoundaryMeasureEstimate)> {
        if self.time <= 0.0 {
            return Err(Error::InvalidArgument("no path time past burn-in".into()));
        }
        let t = self.time;
        let mean: Vec<f64> = self.sum.iter().map(|s| s / t).collect();
        let variance = self
            .sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| (sq / t - m * m).max(0.0))
            .collect();
        let marginals = self
            .bins
            .iter()
            .zip(&self.caps)
            .map(|(b, &cap)| Histogram { hi: cap, mass: b.iter().map(|m| m / t).collect() })
            .collect();
        let est = StationaryEstimate {
            burn_in: self.burn_in,
            total_time: t,
            mean,
            variance,
            marginals,
            empty_occupancy: self.empty_time.iter().map(|v| v / t).collect(),
            full_occupancy: self.full_time.iter().map(|v| v / t).collect(),
            boundary_width: self.boundary_width,
        };
        let boundary = BoundaryMeasureEstimate {
            lower_rate: self.push_lower.iter().map(|v| v / t).collect(),
            upper_rate: self.push_upper.iter().map(|v| v / t).collect(),
        };
        Ok((est, boundary))
    }
}

impl SrbmObserver for StationaryAccumulator {
    fn observe(&mut self, t0: f64, t1: f64, z: &[f64], push_lower: &[f64], push_upper: &[f64]) {
        if t1 <= self.burn_in {
            return;
        }
        self.add_segment(t1 - t0.max(self.burn_in), z);
        self.add_pushes(push_lower, push_upper);
    }
}

/// Accumulates a discrete-event trajectory (exact boundary states, so the
/// boundary band is zero) and returns the estimates past `burn_in`.
pub fn estimate_from_trajectory(
    tr: &Trajectory,
    burn_in: f64,
) -> Result<(StationaryEstimate, BoundaryMeasureEstimate)> {
    if burn_in >= tr.horizon {
        return Err(Error::InvalidArgument(format!(
            "burn-in {burn_in} not below horizon {}",
            tr.horizon
        )));
    }
    let idx = tr.idx;
    let total: f64 = tr.initial_q[..idx.n_stations()].iter().sum::<i64>() as f64;
    let caps: Vec<f64> = (0..idx.dim())
        .map(|c| if c < idx.n_stations() { tr.capacities[c] as f64 } else { total })
        .collect();
    let mut acc = StationaryAccumulator::new(caps, idx.n_stations(), burn_in, 0.0);
    let values = |q: &[i64]| q.iter().map(|&v| v as f64).collect::<Vec<f64>>();
    let mut prev_idle = None;
    let mut prev_yk = None;
    let mut last_t = 0.0f64;
    let mut state = tr.initial_state();
    for (t, rec) in &tr.events {
        let seg_end = t.min(tr.horizon);
        if seg_end > burn_in {
            if last_t < burn_in {
                // Entering the averaging window: snapshot the push counters.
                let mut snap = state.clone();
                snap.advance_to(burn_in, &tr.capacities);
                prev_idle = Some((0..idx.dim()).map(|c| snap.idle(c)).collect::<Vec<f64>>());
                prev_yk = Some(snap.yk.iter().map(|&v| v as f64).collect::<Vec<f64>>());
            }
            acc.add_segment(seg_end - last_t.max(burn_in), &values(&state.q));
        }
        state.advance_to(*t, &tr.capacities);
        state.apply(rec, &idx);
        last_t = *t;
    }
    if tr.horizon > last_t.max(burn_in) {
        if last_t < burn_in {
            let mut snap = state.clone();
            snap.advance_to(burn_in, &tr.capacities);
            prev_idle = Some((0..idx.dim()).map(|c| snap.idle(c)).collect::<Vec<f64>>());
            prev_yk = Some(snap.yk.iter().map(|&v| v as f64).collect::<Vec<f64>>());
        }
        acc.add_segment(tr.horizon - last_t.max(burn_in), &values(&state.q));
    }
    state.advance_to(tr.horizon, &tr.capacities);
    let base_idle = prev_idle.unwrap_or_else(|| vec![0.0; idx.dim()]);
    let base_yk = prev_yk.unwrap_or_else(|| vec![0.0; idx.n_stations()]);
    let d_idle: Vec<f64> =
        (0..idx.dim()).map(|c| (state.idle(c) - base_idle[c]).max(0.0)).collect();
    let d_yk: Vec<f64> =
        (0..idx.n_stations()).map(|j| (state.yk[j] as f64 - base_yk[j]).max(0.0)).collect();
    acc.add_pushes(&d_idle, &d_yk);
    acc.estimate()
}
