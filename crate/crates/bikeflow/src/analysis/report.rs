use serde::{Deserialize, Serialize};

use super::bar::BarResidual;
use super::stationary::{BoundaryMeasureEstimate, StationaryEstimate};
use crate::error::{Error, Result};
use crate::model::IndexMap;

/// Steady-state performance measures of a network path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    /// P(station j empty), indexed by station.
    pub empty_prob: Vec<f64>,
    /// P(station j full), indexed by station.
    pub full_prob: Vec<f64>,
    /// P(road-class coordinate empty), indexed by coordinate − N.
    pub road_empty_prob: Vec<f64>,
    /// P(road-class coordinate at its cap), indexed by coordinate − N.
    pub road_full_prob: Vec<f64>,
    /// Time-average queue length per coordinate.
    pub mean_queue: Vec<f64>,
    /// Long-run blocked-return (deflection) rate per station.
    pub deflection_rate: Vec<f64>,
    /// Boundary detection band width used for the probabilities.
    pub boundary_width: f64,
    /// BAR residual table, when evaluated.
    pub bar_residuals: Vec<BarResidualRow>,
}

/// Serializable BAR row (mirrors [`BarResidual`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarResidualRow {
    pub function: String,
    pub interior: f64,
    pub boundary: f64,
    pub residual: f64,
    pub scale: f64,
}

impl From<&BarResidual> for BarResidualRow {
    fn from(r: &BarResidual) -> Self {
        BarResidualRow {
            function: r.name.clone(),
            interior: r.interior,
            boundary: r.boundary,
            residual: r.residual,
            scale: r.scale,
        }
    }
}

/// Derives the §-style performance measures from stationary estimates.
pub fn performance_measures(
    est: &StationaryEstimate,
    boundary: &BoundaryMeasureEstimate,
    idx: &IndexMap,
) -> Result<PerformanceReport> {
    let n = idx.n_stations();
    if est.mean.len() != idx.dim() || boundary.upper_rate.len() != n {
        return Err(Error::InvalidArgument(format!(
            "estimate dimensions {}/{} do not match the index map ({} stations, dim {})",
            est.mean.len(),
            boundary.upper_rate.len(),
            n,
            idx.dim()
        )));
    }
    let report = PerformanceReport {
        empty_prob: est.empty_occupancy[..n].to_vec(),
        full_prob: est.full_occupancy[..n].to_vec(),
        road_empty_prob: est.empty_occupancy[n..].to_vec(),
        road_full_prob: est.full_occupancy[n..].to_vec(),
        mean_queue: est.mean.clone(),
        deflection_rate: boundary.upper_rate.clone(),
        boundary_width: est.boundary_width,
        bar_residuals: Vec::new(),
    };
    for (label, probs) in [
        ("empty_prob", &report.empty_prob),
        ("full_prob", &report.full_prob),
        ("road_empty_prob", &report.road_empty_prob),
        ("road_full_prob", &report.road_full_prob),
    ] {
        if probs.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p)) {
            return Err(Error::Numerical(format!("{label} outside [0, 1]")));
        }
    }
    if report.deflection_rate.iter().any(|&r| r < 0.0) {
        return Err(Error::Numerical("negative deflection rate".into()));
    }
    Ok(report)
}

impl PerformanceReport {
    pub fn with_bar_residuals(mut self, rows: &[BarResidual]) -> Self {
        self.bar_residuals = rows.iter().map(BarResidualRow::from).collect();
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Flat CSV: one `(measure, index, value)` row per scalar.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("measure,index,value\n");
        let mut push = |name: &str, values: &[f64]| {
            for (k, v) in values.iter().enumerate() {
                out.push_str(&format!("{name},{k},{v:.17e}\n"));
            }
        };
        push("empty_prob", &self.empty_prob);
        push("full_prob", &self.full_prob);
        push("road_empty_prob", &self.road_empty_prob);
        push("road_full_prob", &self.road_full_prob);
        push("mean_queue", &self.mean_queue);
        push("deflection_rate", &self.deflection_rate);
        out
    }
}
