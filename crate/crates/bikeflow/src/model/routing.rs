use nalgebra::DMatrix;

use super::config::NetworkConfig;
use super::index::IndexMap;

/// Routing matrix of the non-blocked dynamics plus the deflection channel.
///
/// `p[station j, road (j→i, 1)] = p_{j→i}` and `p[road (j→i, d), station i] = 1`
/// for both classes: absent blocking, every bike on a road docks at its
/// destination. The state-dependent deflection transition (triggered only when
/// the destination is full) is kept separately in `deflect`, whose entry
/// `deflect[station j, road (j→l, 2)] = α_{j→l}` gives the distribution of the
/// forced onward ride, so `p` remains a true stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingView {
    pub p: DMatrix<f64>,
    pub deflect: DMatrix<f64>,
}

/// Builds the coordinate-level routing matrix and deflection channel.
pub fn routing_matrix(cfg: &NetworkConfig, idx: &IndexMap) -> RoutingView {
    let dim = idx.dim();
    let mut p = DMatrix::zeros(dim, dim);
    let mut deflect = DMatrix::zeros(dim, dim);
    for (j, i) in idx.road_pairs() {
        p[(idx.station(j), idx.road(j, i, 1))] = cfg.first_routing[j][i];
        p[(idx.road(j, i, 1), idx.station(i))] = 1.0;
        p[(idx.road(j, i, 2), idx.station(i))] = 1.0;
        deflect[(idx.station(j), idx.road(j, i, 2))] = cfg.deflect_routing[j][i];
    }
    RoutingView { p, deflect }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DistributionSpec;

    fn sym(n: usize) -> (NetworkConfig, IndexMap) {
        let cfg = NetworkConfig::symmetric(
            n,
            5,
            3,
            DistributionSpec::exponential(1.0),
            DistributionSpec::exponential(1.0),
        );
        let idx = cfg.index_map();
        (cfg, idx)
    }

    #[test]
    fn road_to_station_is_one() {
        let (cfg, idx) = sym(2);
        let r = routing_matrix(&cfg, &idx);
        assert_eq!(r.p[(idx.road(0, 1, 1), idx.station(1))], 1.0);
        assert_eq!(r.p[(idx.road(0, 1, 2), idx.station(1))], 1.0);
    }

    #[test]
    fn forced_single_destination() {
        // N=2 forces p_{1→2} = 1, so the station row has a single unit entry.
        let (cfg, idx) = sym(2);
        let r = routing_matrix(&cfg, &idx);
        assert_eq!(r.p[(idx.station(0), idx.road(0, 1, 1))], 1.0);
    }

    #[test]
    fn uniform_deflection_channel() {
        let (cfg, idx) = sym(3);
        let r = routing_matrix(&cfg, &idx);
        assert_eq!(r.deflect[(idx.station(0), idx.road(0, 1, 2))], 0.5);
        assert_eq!(r.deflect[(idx.station(0), idx.road(0, 2, 2))], 0.5);
    }

    #[test]
    fn rows_sum_to_one() {
        for n in [2, 3, 4] {
            let (cfg, idx) = sym(n);
            let r = routing_matrix(&cfg, &idx);
            for c in 0..idx.dim() {
                let sum: f64 = r.p.row(c).iter().sum();
                assert!((sum - 1.0).abs() < 1e-12, "row {c} sums to {sum}");
            }
        }
    }

    #[test]
    fn deterministic_rebuild() {
        let (cfg, idx) = sym(3);
        assert_eq!(routing_matrix(&cfg, &idx), routing_matrix(&cfg, &idx));
    }
}
