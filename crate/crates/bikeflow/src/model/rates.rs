use serde::{Deserialize, Serialize};

use super::config::NetworkConfig;
use super::index::IndexMap;
use crate::error::{Error, Result};

/// Constant nominal service rates used for centering and for the reflected
/// diffusion: `b_station[j]` is the long-run rental rate of station `j` and
/// `b_road[k]` the long-run trip-completion rate of road-class coordinate
/// `N + k` (road order of [`IndexMap`]).
///
/// The underlying station rate is state dependent (rentals happen only while
/// bikes are available), so these constants are an operating point: either the
/// natural nominal values ([`NominalRates::nominal`]) or rates estimated from
/// a calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NominalRates {
    pub b_station: Vec<f64>,
    pub b_road: Vec<f64>,
}

impl NominalRates {
    pub fn new(b_station: Vec<f64>, b_road: Vec<f64>) -> Self {
        Self { b_station, b_road }
    }

    /// Natural operating point: stations at their arrival rate `λ_j`, roads at
    /// their travel rate `1/mean`.
    pub fn nominal(cfg: &NetworkConfig, idx: &IndexMap) -> Self {
        let b_station = cfg.stations.iter().map(|s| s.arrival.rate()).collect();
        let mut b_road = vec![0.0; 2 * idx.n_roads()];
        for (j, i) in idx.road_pairs() {
            b_road[idx.road(j, i, 1) - idx.n_stations()] = cfg.travel_first[j][i].rate();
            b_road[idx.road(j, i, 2) - idx.n_stations()] = cfg.travel_deflect[j][i].rate();
        }
        Self { b_station, b_road }
    }

    /// Rate of the coordinate at `index` (station or road-class).
    pub fn at(&self, idx: &IndexMap, index: usize) -> f64 {
        if index < idx.n_stations() {
            self.b_station[index]
        } else {
            self.b_road[index - idx.n_stations()]
        }
    }

    pub fn road(&self, idx: &IndexMap, origin: usize, dest: usize, class: u8) -> f64 {
        self.b_road[idx.road(origin, dest, class) - idx.n_stations()]
    }

    /// Validates shape, nonnegativity, and `b_station[j] ≤ λ_j`.
    pub fn check(&self, cfg: &NetworkConfig, idx: &IndexMap) -> Result<()> {
        let mut problems = Vec::new();
        if self.b_station.len() != idx.n_stations() || self.b_road.len() != 2 * idx.n_roads() {
            problems.push("rate vector shapes do not match the network".to_string());
        } else {
            for (j, &b) in self.b_station.iter().enumerate() {
                if !(b >= 0.0) || !b.is_finite() {
                    problems.push(format!("station {} rate {b} is not a nonnegative number", j + 1));
                } else if b > cfg.stations[j].arrival.rate() + 1e-12 {
                    problems.push(format!(
                        "station {} rate {b} exceeds arrival rate {}",
                        j + 1,
                        cfg.stations[j].arrival.rate()
                    ));
                }
            }
            for (k, &b) in self.b_road.iter().enumerate() {
                if !(b >= 0.0) || !b.is_finite() {
                    problems.push(format!("road-class entry {k} rate {b} is not a nonnegative number"));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }
}
