use super::trajectory::{EventRecord, ProcessState, Trajectory};
use crate::model::{IndexMap, NetworkConfig, NominalRates};
use crate::srbm::drift_vector;

/// Result of the conservation/confinement scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxCheck {
    /// Max |∑Q(t) − ∑C| over epochs (integer, should be 0).
    pub max_total_deviation: i64,
    /// Epoch count where some coordinate left `[0, cap]`.
    pub box_violations: u64,
}

/// Verifies exact conservation of the fleet and box confinement at every
/// epoch: `∑Q = ∑C`, `0 ≤ Q_j ≤ K_j`, `0 ≤ Q_road ≤ ∑C`.
pub fn conservation_and_box_check(tr: &Trajectory) -> BoxCheck {
    let total: i64 = tr.initial_q.iter().sum();
    let n = tr.idx.n_stations();
    let mut out = BoxCheck { max_total_deviation: 0, box_violations: 0 };
    tr.replay(|s| {
        out.max_total_deviation = out.max_total_deviation.max((s.q.iter().sum::<i64>() - total).abs());
        let mut ok = true;
        for (c, &qc) in s.q.iter().enumerate() {
            let cap = if c < n { tr.capacities[c] as i64 } else { total };
            if qc < 0 || qc > cap {
                ok = false;
            }
        }
        if !ok {
            out.box_violations += 1;
        }
    });
    out
}

/// Reconstructs every queue coordinate from the counting processes and
/// returns the maximum absolute discrepancy against the recorded path.
///
/// Stations: `Q_j = Q_j(0) + ∑_{d,i} S^{(d)}_{i→j} − S_j − Y_j^K`; roads:
/// `Q^{(1)}_{j→i} = R_j^i − S^{(1)}_{j→i}` and `Q^{(2)}_{j→i} = R̄_j^i −
/// S^{(2)}_{j→i}` (all roads start empty).
pub fn flow_balance_check(tr: &Trajectory) -> i64 {
    let idx = tr.idx;
    let n = idx.n_stations();
    let mut max_dev: i64 = 0;
    tr.replay(|s| {
        for j in 0..n {
            let mut rebuilt = tr.initial_q[j];
            for i in 0..n {
                if i != j {
                    rebuilt += s.completions[idx.road(i, j, 1)] as i64
                        + s.completions[idx.road(i, j, 2)] as i64;
                }
            }
            rebuilt -= s.completions[j] as i64 + s.yk[j] as i64;
            max_dev = max_dev.max((rebuilt - s.q[j]).abs());
        }
        for (j, i) in idx.road_pairs() {
            let pair = idx.road_pair(j, i);
            let c1 = idx.road(j, i, 1);
            let c2 = idx.road(j, i, 2);
            let rebuilt1 = tr.initial_q[c1] + s.r_first[pair] as i64 - s.completions[c1] as i64;
            let rebuilt2 = tr.initial_q[c2] + s.r_defl[pair] as i64 - s.completions[c2] as i64;
            max_dev = max_dev.max((rebuilt1 - s.q[c1]).abs()).max((rebuilt2 - s.q[c2]).abs());
        }
    });
    max_dev
}

/// Verifies the event-log complementarity conditions: rentals only from
/// nonempty stations, losses only at empty ones, completions only on busy
/// roads, deflections exactly when the destination is full. Returns the
/// number of violating events (zero tolerance).
pub fn complementarity_check(tr: &Trajectory) -> u64 {
    let idx = tr.idx;
    let mut violations = 0u64;
    tr.walk(
        |pre, rec| {
            let ok = match *rec {
                EventRecord::Arrival { station, dest: Some(_) } => pre.q[station] >= 1,
                EventRecord::Arrival { station, dest: None } => pre.q[station] == 0,
                EventRecord::Completion { origin, dest, class, deflected } => {
                    let busy = pre.q[idx.road(origin, dest, class)] >= 1;
                    let boundary = match deflected {
                        Some(_) => pre.q[dest] == tr.capacities[dest] as i64,
                        None => pre.q[dest] < tr.capacities[dest] as i64,
                    };
                    busy && boundary
                }
            };
            if !ok {
                violations += 1;
            }
        },
        |_| {},
    );
    violations
}

/// Empirical service rates `S(B(T))/B(T)` per coordinate; `None` where the
/// busy time is zero.
pub fn long_run_rates(tr: &Trajectory) -> Vec<Option<f64>> {
    let end = tr.final_state();
    end.busy
        .iter()
        .zip(&end.completions)
        .map(|(&b, &s)| (b > 0.0).then(|| s as f64 / b))
        .collect()
}

/// Centered free process `X(t)` of the pathwise decomposition, per coordinate.
///
/// Writing `Ŝ(B) = S(B) − b·B` for each centered service process and
/// `R̂` for centered routing counts:
/// - station `j`: `Q_j(0) + ∑_{d,i} Ŝ^{(d)}_{i→j} − Ŝ_j + θ_j t`,
/// - road `(j→i, 1)`: `R̂_j^i(S_j) + p_{j→i}·Ŝ_j − Ŝ^{(1)}_{j→i} + θ^{(1)} t`,
/// - road `(j→i, 2)`: `R̄̂_j^i(Y_j^K) − Ŝ^{(2)}_{j→i} + θ^{(2)} t`,
///
/// with `θ` the drift at the given rates. The blocked-return term `−Y^K`
/// appears in the reflection part `R^K Y^K`, not in `X`, so that
/// `Q = X + R⁰Y⁰ + R^K Y^K` holds exactly.
pub fn centered_x(
    s: &ProcessState,
    initial_q: &[i64],
    cfg: &NetworkConfig,
    idx: &IndexMap,
    rates: &NominalRates,
    theta: &[f64],
) -> Vec<f64> {
    let n = idx.n_stations();
    let mut x = vec![0.0; idx.dim()];
    let centered = |coord: usize| s.completions[coord] as f64 - rates.at(idx, coord) * s.busy[coord];
    for j in 0..n {
        let mut v = initial_q[j] as f64 - centered(j) + theta[j] * s.t;
        for i in 0..n {
            if i != j {
                v += centered(idx.road(i, j, 1)) + centered(idx.road(i, j, 2));
            }
        }
        x[j] = v;
    }
    for (j, i) in idx.road_pairs() {
        let pair = idx.road_pair(j, i);
        let c1 = idx.road(j, i, 1);
        let c2 = idx.road(j, i, 2);
        let p = cfg.first_routing[j][i];
        let alpha = cfg.deflect_routing[j][i];
        x[c1] = initial_q[c1] as f64
            + (s.r_first[pair] as f64 - p * s.completions[j] as f64)
            + p * centered(j)
            - centered(c1)
            + theta[c1] * s.t;
        x[c2] = initial_q[c2] as f64
            + (s.r_defl[pair] as f64 - alpha * s.yk[j] as f64)
            - centered(c2)
            + theta[c2] * s.t;
    }
    x
}

/// Reflection terms `R⁰Y⁰` and `R^K Y^K` of the decomposition at a state.
pub fn reflection_terms(
    s: &ProcessState,
    cfg: &NetworkConfig,
    idx: &IndexMap,
    rates: &NominalRates,
) -> (Vec<f64>, Vec<f64>) {
    let n = idx.n_stations();
    let mut r0y0 = vec![0.0; idx.dim()];
    let mut rkyk = vec![0.0; idx.dim()];
    for j in 0..n {
        let mut v = rates.b_station[j] * s.idle(j);
        for i in 0..n {
            if i != j {
                v -= rates.road(idx, i, j, 1) * s.idle(idx.road(i, j, 1))
                    + rates.road(idx, i, j, 2) * s.idle(idx.road(i, j, 2));
            }
        }
        r0y0[j] = v;
        rkyk[j] = -(s.yk[j] as f64);
    }
    for (j, i) in idx.road_pairs() {
        let c1 = idx.road(j, i, 1);
        let c2 = idx.road(j, i, 2);
        r0y0[c1] =
            rates.road(idx, j, i, 1) * s.idle(c1) - cfg.first_routing[j][i] * rates.b_station[j] * s.idle(j);
        r0y0[c2] = rates.road(idx, j, i, 2) * s.idle(c2);
        rkyk[c2] = cfg.deflect_routing[j][i] * s.yk[j] as f64;
    }
    (r0y0, rkyk)
}

/// Evaluates the decomposition residual `Q − X − R⁰Y⁰ − R^K Y^K` at every
/// epoch and returns the maximum absolute value. An algebraic identity for
/// any choice of rates; nonzero only through floating-point rounding or a
/// corrupted trajectory.
pub fn pathwise_decomposition_check(tr: &Trajectory, cfg: &NetworkConfig, rates: &NominalRates) -> f64 {
    let idx = tr.idx;
    let theta = drift_vector(cfg, rates, &idx);
    let mut max_res: f64 = 0.0;
    tr.replay(|s| {
        let x = centered_x(s, &tr.initial_q, cfg, &idx, rates, &theta);
        let (r0y0, rkyk) = reflection_terms(s, cfg, &idx, rates);
        for c in 0..idx.dim() {
            let res = (s.q[c] as f64 - x[c] - r0y0[c] - rkyk[c]).abs();
            max_res = max_res.max(res);
        }
    });
    max_res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::des::simulate;
    use crate::model::DistributionSpec;

    fn sym(k: u64, c: u64) -> NetworkConfig {
        NetworkConfig::symmetric(
            2,
            k,
            c,
            DistributionSpec::exponential(1.0),
            DistributionSpec::exponential(1.0),
        )
    }

    #[test]
    fn balance_and_conservation_hold() {
        let cfg = sym(3, 2);
        let tr = simulate(&cfg, 2000.0, 1).unwrap();
        assert_eq!(flow_balance_check(&tr), 0);
        let bc = conservation_and_box_check(&tr);
        assert_eq!(bc.max_total_deviation, 0);
        assert_eq!(bc.box_violations, 0);
        assert_eq!(complementarity_check(&tr), 0);
    }

    #[test]
    fn corrupted_log_is_detected() {
        let cfg = sym(3, 2);
        let mut tr = simulate(&cfg, 500.0, 2).unwrap();
        assert_eq!(flow_balance_check(&tr), 0);
        // Turn some successful docking into a phantom deflection.
        let pos = tr
            .events
            .iter()
            .position(|(_, r)| matches!(r, EventRecord::Completion { deflected: None, .. }))
            .unwrap();
        if let (t, EventRecord::Completion { origin, dest, class, .. }) = tr.events[pos] {
            tr.events[pos] =
                (t, EventRecord::Completion { origin, dest, class, deflected: Some(origin) });
        }
        assert!(conservation_and_box_check(&tr).max_total_deviation > 0 || complementarity_check(&tr) > 0);
        assert!(complementarity_check(&tr) > 0);
    }

    #[test]
    fn decomposition_is_an_identity() {
        let cfg = sym(2, 2); // tight capacities force boundary activity
        let idx = cfg.index_map();
        let tr = simulate(&cfg, 5000.0, 3).unwrap();
        let end = tr.final_state();
        assert!(end.yk.iter().sum::<u64>() > 0, "want blocking in this test");
        for rates in [
            NominalRates::nominal(&cfg, &idx),
            NominalRates::new(vec![0.5, 0.25], vec![0.3; 4]),
        ] {
            let res = pathwise_decomposition_check(&tr, &cfg, &rates);
            assert!(res <= 1e-9, "residual {res}");
        }
    }

    #[test]
    fn perturbed_drift_breaks_decomposition() {
        // The residual is the oracle for the drift/reflection assembly: a
        // wrong θ entry must surface as a residual growing linearly in t.
        let cfg = sym(2, 2);
        let idx = cfg.index_map();
        let tr = simulate(&cfg, 1000.0, 4).unwrap();
        let rates = NominalRates::nominal(&cfg, &idx);
        assert!(pathwise_decomposition_check(&tr, &cfg, &rates) <= 1e-9);
        let mut theta = drift_vector(&cfg, &rates, &idx);
        theta[0] += 0.01;
        let mut max_res: f64 = 0.0;
        tr.replay(|s| {
            let x = centered_x(s, &tr.initial_q, &cfg, &idx, &rates, &theta);
            let (r0y0, rkyk) = reflection_terms(s, &cfg, &idx, &rates);
            max_res = max_res.max((s.q[0] as f64 - x[0] - r0y0[0] - rkyk[0]).abs());
        });
        assert!(max_res > 0.5, "got {max_res}");
    }

    #[test]
    fn empty_trajectory_passes_trivially() {
        let cfg = sym(3, 2);
        let idx = cfg.index_map();
        let tr = Trajectory::from_config(&cfg, 1.0, 0);
        assert_eq!(flow_balance_check(&tr), 0);
        let rates = NominalRates::nominal(&cfg, &idx);
        assert!(pathwise_decomposition_check(&tr, &cfg, &rates) <= 1e-9);
    }

    #[test]
    fn long_run_rates_match_renewal_rates() {
        let cfg = sym(8, 5);
        let tr = simulate(&cfg, 50_000.0, 5).unwrap();
        let idx = cfg.index_map();
        let end = tr.final_state();
        let rates = long_run_rates(&tr);
        // Station rental rate ≈ λ = 1 within 3·sqrt(λ/B).
        for j in 0..2 {
            let r = rates[j].unwrap();
            let se = 3.0 * (1.0 / end.busy[j]).sqrt();
            assert!((r - 1.0).abs() < se, "station {j}: rate {r}, tol {se}");
        }
        // Class-1 road completion rate ≈ 1/mean = 1.
        let c = idx.road(0, 1, 1);
        let r = rates[c].unwrap();
        let k = end.completions[c] as f64;
        assert!((r - 1.0).abs() < 3.0 / k.sqrt() + 3.0 / k, "road rate {r} from {k} completions");
    }
}
