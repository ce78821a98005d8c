//! Property tests for structural invariants: exact conservation and
//! complementarity of every simulated path, coordinate-indexing bijection,
//! covariance symmetry/degeneracy, and drift balance.

use proptest::prelude::*;

use bikeflow::des::{
    complementarity_check, conservation_and_box_check, flow_balance_check,
    pathwise_decomposition_check, simulate,
};
use bikeflow::model::{
    Coordinate, DistributionSpec, IndexMap, NetworkConfig, NominalRates, StationSpec,
};
use bikeflow::srbm::{conserved_covariance, covariance_matrix, drift_vector};

fn dist_strategy() -> impl Strategy<Value = DistributionSpec> {
    (0.4f64..2.5, prop_oneof![Just(0.0f64), 0.3f64..1.4]).prop_map(|(mean, cv)| {
        if cv == 0.0 {
            DistributionSpec::deterministic(mean)
        } else if (cv - 1.0).abs() < 0.05 {
            DistributionSpec::exponential(mean)
        } else {
            DistributionSpec::gamma(mean, cv)
        }
    })
}

fn routing_row(n: usize, diag: usize, weights: Vec<f64>) -> Vec<f64> {
    let total: f64 = weights.iter().enumerate().filter(|&(j, _)| j != diag).map(|(_, w)| w).sum();
    (0..n).map(|j| if j == diag { 0.0 } else { weights[j] / total }).collect()
}

prop_compose! {
    fn config_strategy()(n in 2usize..5)(
        n in Just(n),
        caps in prop::collection::vec(2u64..6, n),
        arrivals in prop::collection::vec(dist_strategy(), n),
        travel in prop::collection::vec(prop::collection::vec(dist_strategy(), n), n),
        travel2 in prop::collection::vec(prop::collection::vec(dist_strategy(), n), n),
        w1 in prop::collection::vec(prop::collection::vec(0.05f64..1.0, n), n),
        w2 in prop::collection::vec(prop::collection::vec(0.05f64..1.0, n), n),
        fills in prop::collection::vec(1u64..5, n),
    ) -> NetworkConfig {
        let mut stations: Vec<StationSpec> = (0..n).map(|j| StationSpec {
            capacity: caps[j],
            initial_bikes: fills[j].min(caps[j]),
            arrival: arrivals[j],
        }).collect();
        // The fleet must exceed every station capacity; fill docks greedily
        // until it does (always possible: capacities sum past any single one).
        let max_cap = caps.iter().max().copied().unwrap();
        let mut total: u64 = stations.iter().map(|s| s.initial_bikes).sum();
        for s in stations.iter_mut() {
            if total > max_cap {
                break;
            }
            let add = (s.capacity - s.initial_bikes).min(max_cap + 1 - total);
            s.initial_bikes += add;
            total += add;
        }
        NetworkConfig {
            n,
            stations,
            first_routing: (0..n).map(|i| routing_row(n, i, w1[i].clone())).collect(),
            deflect_routing: (0..n).map(|i| routing_row(n, i, w2[i].clone())).collect(),
            travel_first: travel,
            travel_deflect: travel2,
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn simulated_paths_satisfy_exact_invariants(cfg in config_strategy(), seed in 0u64..1000) {
        prop_assert!(cfg.validate().is_empty(), "strategy built invalid config");
        let tr = simulate(&cfg, 200.0, seed).unwrap();
        let boxes = conservation_and_box_check(&tr);
        prop_assert_eq!(boxes.max_total_deviation, 0);
        prop_assert_eq!(boxes.box_violations, 0);
        prop_assert_eq!(flow_balance_check(&tr), 0);
        prop_assert_eq!(complementarity_check(&tr), 0);
        let idx = cfg.index_map();
        let rates = NominalRates::nominal(&cfg, &idx);
        let residual = pathwise_decomposition_check(&tr, &cfg, &rates);
        prop_assert!(residual <= 1e-9, "decomposition residual {}", residual);
    }

    #[test]
    fn coordinate_indexing_is_a_bijection(n in 2usize..9) {
        let idx = IndexMap::new(n);
        for c in 0..idx.dim() {
            match idx.coordinate(c) {
                Coordinate::Station(j) => prop_assert_eq!(idx.station(j), c),
                Coordinate::Road { origin, dest, class } => {
                    prop_assert_ne!(origin, dest);
                    prop_assert_eq!(idx.road(origin, dest, class), c);
                }
            }
        }
    }

    #[test]
    fn covariances_are_symmetric_psd_and_drift_balances(cfg in config_strategy()) {
        let idx = cfg.index_map();
        let rates = NominalRates::nominal(&cfg, &idx);
        for gamma in [covariance_matrix(&cfg, &rates, &idx), conserved_covariance(&cfg, &rates, &idx)] {
            let asym = (&gamma - gamma.transpose()).abs().max();
            prop_assert!(asym <= 1e-12, "asymmetry {}", asym);
            let min_eig = gamma.clone().symmetric_eigen().eigenvalues.min();
            prop_assert!(min_eig >= -1e-10, "eigenvalue {}", min_eig);
        }
        // Noise and drift both conserve the fleet.
        let g = conserved_covariance(&cfg, &rates, &idx);
        let ones = nalgebra::DVector::from_element(idx.dim(), 1.0);
        prop_assert!((&g * &ones).abs().max() <= 1e-10);
        let theta = drift_vector(&cfg, &rates, &idx);
        prop_assert!(theta.iter().sum::<f64>().abs() <= 1e-10);
    }

    #[test]
    fn ks_distance_is_a_pseudometric_in_range(
        a in prop::collection::vec(-5.0f64..5.0, 1..60),
        b in prop::collection::vec(-5.0f64..5.0, 1..60),
    ) {
        let d = bikeflow::analysis::ks_two_sample(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(bikeflow::analysis::ks_two_sample(&a, &a).unwrap(), 0.0);
        let sym = bikeflow::analysis::ks_two_sample(&b, &a).unwrap();
        prop_assert!((d - sym).abs() <= 1e-15);
    }
}
