use serde::{Deserialize, Serialize};

use super::dist::DistributionSpec;
use super::index::IndexMap;
use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// One station: dock capacity, initial fleet share, and arrival process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationSpec {
    /// Number of parking positions `K_i`.
    pub capacity: u64,
    /// Bikes docked at time zero, `C_i`.
    pub initial_bikes: u64,
    /// Renewal interarrival-time distribution of riders.
    pub arrival: DistributionSpec,
}

/// Full description of the closed network.
///
/// `first_routing[i][j]` is the probability a rider at station `i` heads to
/// station `j`; `deflect_routing[j][l]` is the probability a bike blocked at
/// full station `j` is redirected to station `l`. `travel_first` and
/// `travel_deflect` hold the road travel-time distributions per class.
/// Diagonal entries of all four matrices are ignored (roads are between
/// distinct stations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct NetworkConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub stations: Vec<StationSpec>,
    pub first_routing: Vec<Vec<f64>>,
    pub deflect_routing: Vec<Vec<f64>>,
    pub travel_first: Vec<Vec<DistributionSpec>>,
    pub travel_deflect: Vec<Vec<DistributionSpec>>,
}

/// A violated configuration invariant, with the offending location.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigViolation {
    StationCount { declared: usize, actual: usize },
    MatrixShape { matrix: &'static str, row: Option<usize> },
    CapacityOrder { station: usize, initial_bikes: u64, capacity: u64 },
    FleetTooSmall { station: usize, total_bikes: u64, capacity: u64 },
    RowSum { matrix: &'static str, row: usize, sum: f64 },
    NonzeroDiagonal { matrix: &'static str, row: usize, value: f64 },
    EntryOutOfRange { matrix: &'static str, row: usize, col: usize, value: f64 },
    BadDistribution { location: String, problem: String },
    TooFewStations { n: usize },
}

impl std::fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigViolation::StationCount { declared, actual } => {
                write!(f, "N = {declared} but {actual} stations given")
            }
            ConfigViolation::MatrixShape { matrix, row } => match row {
                Some(r) => write!(f, "{matrix} row {} has wrong length", r + 1),
                None => write!(f, "{matrix} has wrong number of rows"),
            },
            ConfigViolation::CapacityOrder { station, initial_bikes, capacity } => write!(
                f,
                "station {}: need 1 <= C <= K, got C = {initial_bikes}, K = {capacity}",
                station + 1
            ),
            ConfigViolation::FleetTooSmall { station, total_bikes, capacity } => write!(
                f,
                "total fleet {total_bikes} does not exceed capacity {capacity} of station {}",
                station + 1
            ),
            ConfigViolation::RowSum { matrix, row, sum } => {
                write!(f, "{matrix} row {} sums to {sum}, expected 1", row + 1)
            }
            ConfigViolation::NonzeroDiagonal { matrix, row, value } => {
                write!(f, "{matrix} diagonal entry {} is {value}, expected 0", row + 1)
            }
            ConfigViolation::EntryOutOfRange { matrix, row, col, value } => write!(
                f,
                "{matrix}[{}][{}] = {value} is outside [0, 1]",
                row + 1,
                col + 1
            ),
            ConfigViolation::BadDistribution { location, problem } => {
                write!(f, "{location}: {problem}")
            }
            ConfigViolation::TooFewStations { n } => write!(f, "need N >= 2 stations, got {n}"),
        }
    }
}

impl NetworkConfig {
    pub fn index_map(&self) -> IndexMap {
        IndexMap::new(self.n)
    }

    /// Total fleet `∑ C_i`.
    pub fn total_bikes(&self) -> u64 {
        self.stations.iter().map(|s| s.initial_bikes).sum()
    }

    /// Checks every structural invariant; an empty list means valid.
    pub fn validate(&self) -> Vec<ConfigViolation> {
        let mut out = Vec::new();
        let n = self.n;
        if n < 2 {
            out.push(ConfigViolation::TooFewStations { n });
        }
        if self.stations.len() != n {
            out.push(ConfigViolation::StationCount { declared: n, actual: self.stations.len() });
        }

        for (j, st) in self.stations.iter().enumerate() {
            if st.initial_bikes < 1 || st.initial_bikes > st.capacity {
                out.push(ConfigViolation::CapacityOrder {
                    station: j,
                    initial_bikes: st.initial_bikes,
                    capacity: st.capacity,
                });
            }
            for problem in st.arrival.problems() {
                out.push(ConfigViolation::BadDistribution {
                    location: format!("station {} arrival", j + 1),
                    problem,
                });
            }
        }

        let total = self.total_bikes();
        for (j, st) in self.stations.iter().enumerate() {
            if total <= st.capacity {
                out.push(ConfigViolation::FleetTooSmall {
                    station: j,
                    total_bikes: total,
                    capacity: st.capacity,
                });
            }
        }

        for (name, m) in [("first_routing", &self.first_routing), ("deflect_routing", &self.deflect_routing)] {
            if m.len() != n {
                out.push(ConfigViolation::MatrixShape { matrix: name, row: None });
                continue;
            }
            for (r, row) in m.iter().enumerate() {
                if row.len() != n {
                    out.push(ConfigViolation::MatrixShape { matrix: name, row: Some(r) });
                    continue;
                }
                for (c, &v) in row.iter().enumerate() {
                    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                        out.push(ConfigViolation::EntryOutOfRange { matrix: name, row: r, col: c, value: v });
                    }
                }
                if row[r] != 0.0 {
                    out.push(ConfigViolation::NonzeroDiagonal { matrix: name, row: r, value: row[r] });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    out.push(ConfigViolation::RowSum { matrix: name, row: r, sum });
                }
            }
        }

        for (name, m) in [("travel_first", &self.travel_first), ("travel_deflect", &self.travel_deflect)] {
            if m.len() != n {
                out.push(ConfigViolation::MatrixShape { matrix: name, row: None });
                continue;
            }
            for (r, row) in m.iter().enumerate() {
                if row.len() != n {
                    out.push(ConfigViolation::MatrixShape { matrix: name, row: Some(r) });
                    continue;
                }
                for (c, spec) in row.iter().enumerate() {
                    if r == c {
                        continue; // diagonal entries are ignored
                    }
                    for problem in spec.problems() {
                        out.push(ConfigViolation::BadDistribution {
                            location: format!("{name}[{}][{}]", r + 1, c + 1),
                            problem,
                        });
                    }
                }
            }
        }

        out
    }

    /// Validates and converts violations into an error.
    pub fn validated(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(violations.iter().map(|v| v.to_string()).collect()))
        }
    }

    /// Builds a fully symmetric network: all stations identical, uniform
    /// routing, identical travel-time laws for both classes.
    pub fn symmetric(
        n: usize,
        capacity: u64,
        initial_bikes: u64,
        arrival: DistributionSpec,
        travel: DistributionSpec,
    ) -> Self {
        let uniform: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 / (n as f64 - 1.0) }).collect())
            .collect();
        let travels: Vec<Vec<DistributionSpec>> =
            (0..n).map(|_| (0..n).map(|_| travel).collect()).collect();
        NetworkConfig {
            n,
            stations: (0..n)
                .map(|_| StationSpec { capacity, initial_bikes, arrival })
                .collect(),
            first_routing: uniform.clone(),
            deflect_routing: uniform,
            travel_first: travels.clone(),
            travel_deflect: travels,
        }
    }
}
