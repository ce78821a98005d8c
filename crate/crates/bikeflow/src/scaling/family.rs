use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DistributionSpec, IndexMap, NetworkConfig, NominalRates, StationSpec};

/// A heavy-traffic sequence of networks indexed by `n`.
///
/// The rate rule holds travel-time means fixed and adjusts each station's
/// arrival rate so that the station drift satisfies `√n·θ_jⁿ = θ_j` exactly
/// at every `n`; capacities and fleets grow like `⌈√n·K⌉`, `⌈√n·C⌉`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFamily {
    pub base: NetworkConfig,
    /// Target station drift θ_j (index by station), in 1/time.
    pub target_drift: Vec<f64>,
}

pub const RATE_RULE: &str =
    "travel means fixed; arrival rate of station j set to (total nominal inflow) - theta_j/sqrt(n)";
pub const CAPACITY_RULE: &str = "K_i(n) = ceil(sqrt(n) K_i), C_i(n) = ceil(sqrt(n) C_i)";

impl ScalingFamily {
    pub fn new(base: NetworkConfig, target_drift: Vec<f64>) -> Result<Self> {
        base.validated()?;
        if target_drift.len() != base.n {
            return Err(Error::InvalidArgument(format!(
                "target drift has {} entries for {} stations",
                target_drift.len(),
                base.n
            )));
        }
        let fam = ScalingFamily { base, target_drift };
        // The rule must produce a positive arrival rate already at n = 1.
        fam.scale_config(1)?;
        Ok(fam)
    }

    /// Sustainable inflow rate `∑_{i≠j} b^{(1)}_{i→j}` into each station.
    ///
    /// Only first-choice roads count: deflection roads are fed exclusively by
    /// blocked returns, which vanish under fluid scaling, so their nominal
    /// service rates never materialize as sustained station inflow.
    pub fn inflow(&self) -> Vec<f64> {
        let idx = self.base.index_map();
        let rates = NominalRates::nominal(&self.base, &idx);
        (0..self.base.n)
            .map(|j| {
                (0..self.base.n)
                    .filter(|&i| i != j)
                    .map(|i| rates.road(&idx, i, j, 1))
                    .sum()
            })
            .collect()
    }

    /// The `n`-th network of the family.
    pub fn scale_config(&self, n: u64) -> Result<NetworkConfig> {
        if n == 0 {
            return Err(Error::InvalidArgument("scaling index n must be positive".into()));
        }
        let root = (n as f64).sqrt();
        let inflow = self.inflow();
        let mut cfg = self.base.clone();
        for (j, st) in cfg.stations.iter_mut().enumerate() {
            let rate = inflow[j] - self.target_drift[j] / root;
            if rate <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "rate rule gives non-positive arrival rate {rate} at station {} for n = {n}",
                    j + 1
                )));
            }
            *st = StationSpec {
                capacity: (root * st.capacity as f64).ceil() as u64,
                initial_bikes: (root * st.initial_bikes as f64).ceil() as u64,
                arrival: DistributionSpec {
                    mean: 1.0 / rate,
                    ..st.arrival
                },
            };
        }
        cfg.validated()?;
        Ok(cfg)
    }

    /// Nominal rates of the `n`-th network.
    pub fn rates_for(&self, n: u64) -> Result<(NetworkConfig, NominalRates)> {
        let cfg = self.scale_config(n)?;
        let idx = cfg.index_map();
        let rates = NominalRates::nominal(&cfg, &idx);
        Ok((cfg, rates))
    }

    /// Effective nominal rates of the `n`-th network: deflection-road rates
    /// are zeroed, since those servers carry no sustained flow and contribute
    /// nothing to the long-run balance (see [`Self::inflow`]).
    pub fn effective_rates(&self, n: u64) -> Result<(NetworkConfig, NominalRates)> {
        let (cfg, rates) = self.rates_for(n)?;
        Ok((cfg, zero_deflection_rates(rates, &self.base.index_map())))
    }

    /// Raw per-coordinate drift `θⁿ` of the `n`-th network at the effective
    /// rates.
    pub fn drift_for(&self, n: u64) -> Result<Vec<f64>> {
        let (cfg, rates) = self.effective_rates(n)?;
        let idx = cfg.index_map();
        Ok(crate::srbm::drift_vector(&cfg, &rates, &idx))
    }

    /// Diffusion-scaled drift `√n·θⁿ` per coordinate. Station entries equal
    /// the target drift exactly; road entries follow from the rate rule.
    pub fn scaled_drift(&self, n: u64) -> Result<Vec<f64>> {
        let root = (n as f64).sqrt();
        Ok(self.drift_for(n)?.into_iter().map(|v| root * v).collect())
    }
}

/// Copies the rates with every class-2 road entry set to zero.
pub fn zero_deflection_rates(mut rates: NominalRates, idx: &IndexMap) -> NominalRates {
    for (j, i) in idx.road_pairs() {
        rates.b_road[idx.road(j, i, 2) - idx.n_stations()] = 0.0;
    }
    rates
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced_base() -> NetworkConfig {
        // Symmetric, exponential, mean-1 travel and arrivals: first-choice
        // inflow per station is 1·1 = 1 = the arrival rate, so the base is a
        // fixed point of the rate rule at θ = 0, n = 1.
        NetworkConfig::symmetric(
            2,
            4,
            3,
            DistributionSpec::exponential(1.0),
            DistributionSpec::exponential(1.0),
        )
    }

    #[test]
    fn identity_at_n_one_with_zero_drift() {
        let base = balanced_base();
        let fam = ScalingFamily::new(base.clone(), vec![0.0, 0.0]).unwrap();
        assert_eq!(fam.scale_config(1).unwrap(), base);
    }

    #[test]
    fn capacity_ceiling() {
        let fam = ScalingFamily::new(balanced_base(), vec![0.0, 0.0]).unwrap();
        let cfg = fam.scale_config(4).unwrap();
        assert_eq!(cfg.stations[0].capacity, 8);
        assert_eq!(cfg.stations[0].initial_bikes, 6);
        let cfg5 = fam.scale_config(5).unwrap();
        assert_eq!(cfg5.stations[0].capacity, (5f64.sqrt() * 4.0).ceil() as u64);
    }

    #[test]
    fn station_drift_is_exact() {
        let fam = ScalingFamily::new(balanced_base(), vec![-0.1, 0.3]).unwrap();
        for n in [1, 16, 100, 1024] {
            let drift = fam.drift_for(n).unwrap();
            let root = (n as f64).sqrt();
            assert!((root * drift[0] - -0.1).abs() < 1e-12, "n={n}: {}", root * drift[0]);
            assert!((root * drift[1] - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ScalingFamily::new(balanced_base(), vec![0.0]).is_err());
        let fam = ScalingFamily::new(balanced_base(), vec![2.5, 0.0]).unwrap_err();
        // Drift 2.5 exceeds the inflow 1 at n = 1: negative arrival rate.
        assert!(matches!(fam, Error::InvalidArgument(_)));
        let fam = ScalingFamily::new(balanced_base(), vec![0.0, 0.0]).unwrap();
        assert!(fam.scale_config(0).is_err());
    }

    #[test]
    fn scaled_configs_stay_valid() {
        let fam = ScalingFamily::new(balanced_base(), vec![0.5, -0.5]).unwrap();
        for n in [1, 2, 64, 4096] {
            fam.scale_config(n).unwrap().validated().unwrap();
        }
    }
}
