use nalgebra::DVector;
use rayon::prelude::*;

use super::family::{zero_deflection_rates, ScalingFamily};
use crate::analysis::ks_compare;
use crate::des::{centered_x, simulate};
use crate::error::{Error, Result};
use crate::srbm::{
    conserved_covariance, drift_vector, reflection_matrices, simulate_srbm, SrbmParams,
};

/// One diagnostic table entry, mirroring the CSV layout
/// `(n, coordinate, statistic, value, reps, seed_base)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub n: u64,
    pub coordinate: usize,
    pub statistic: String,
    pub value: f64,
    pub reps: u64,
    pub seed_base: u64,
}

pub fn diagnostics_to_csv(rows: &[DiagnosticRow]) -> String {
    let mut out = String::from("n,coordinate,statistic,value,reps,seed_base\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.16e},{},{}\n",
            r.n, r.coordinate, r.statistic, r.value, r.reps, r.seed_base
        ));
    }
    out
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

fn rep_seed(seed_base: u64, n: u64, rep: u64) -> u64 {
    seed_base ^ n.wrapping_mul(0x9e3779b97f4a7c15) ^ rep.wrapping_mul(0xd1b54a32d192ed03)
}

/// Fluid-limit convergence table: for each `n`, the per-coordinate median
/// over replications of `sup_{t≤T} |B̄ⁿ(t) − t|` (statistic `sup_busy_dev`)
/// and, per station, `sup_t Ȳ^{K,n}(t)` (statistic `sup_blocked`).
///
/// Both suprema are attained at the horizon: `t − B(t)` and `Y^K(t)` are
/// nondecreasing, so only the final state is needed.
pub fn fluid_limit_diagnostic(
    fam: &ScalingFamily,
    ns: &[u64],
    t_end: f64,
    reps: u64,
    seed_base: u64,
) -> Result<Vec<DiagnosticRow>> {
    if !ns.windows(2).all(|w| w[0] < w[1]) || ns.is_empty() {
        return Err(Error::InvalidArgument("ns must be strictly increasing and nonempty".into()));
    }
    if !(t_end > 0.0) || reps == 0 {
        return Err(Error::InvalidArgument("need positive horizon and reps".into()));
    }
    let mut rows = Vec::new();
    for &n in ns {
        let cfg = fam.scale_config(n)?;
        let idx = cfg.index_map();
        let nf = n as f64;
        let finals: Vec<_> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                simulate(&cfg, nf * t_end, rep_seed(seed_base, n, rep)).map(|tr| tr.final_state())
            })
            .collect::<Result<_>>()?;
        for c in 0..idx.dim() {
            let vals = finals.iter().map(|s| s.idle(c) / nf).collect();
            rows.push(DiagnosticRow {
                n,
                coordinate: c,
                statistic: "sup_busy_dev".into(),
                value: median(vals),
                reps,
                seed_base,
            });
        }
        for j in 0..idx.n_stations() {
            let vals = finals.iter().map(|s| s.yk[j] as f64 / nf).collect();
            rows.push(DiagnosticRow {
                n,
                coordinate: j,
                statistic: "sup_blocked".into(),
                value: median(vals),
                reps,
                seed_base,
            });
        }
    }
    Ok(rows)
}

/// Counts how many consecutive `n`-pairs of a statistic strictly decrease
/// for the given coordinate; returns `(decreasing, total pairs)`.
pub fn trend_decreasing_pairs(
    rows: &[DiagnosticRow],
    statistic: &str,
    coordinate: usize,
) -> (u64, u64) {
    let mut series: Vec<(u64, f64)> = rows
        .iter()
        .filter(|r| r.statistic == statistic && r.coordinate == coordinate)
        .map(|r| (r.n, r.value))
        .collect();
    series.sort_by_key(|&(n, _)| n);
    let total = series.len().saturating_sub(1) as u64;
    let dec = series.windows(2).filter(|w| w[1].1 < w[0].1).count() as u64;
    (dec, total)
}

/// Martingale check for the diffusion-scaled free process: pools the
/// increments `X̃ⁿ(t+s) − X̃ⁿ(t) − (√n·θⁿ + offset)·s` over a grid of
/// disjoint intervals and over replications, and returns the studentized
/// mean per coordinate (statistic `martingale_z`; 0 where the sample
/// variance vanishes).
///
/// `drift_offset` shifts the centering drift on every coordinate; 0 tests
/// the null, a nonzero value injects a known bias for power checks.
pub fn martingale_diagnostic(
    fam: &ScalingFamily,
    n: u64,
    t_end: f64,
    s: f64,
    reps: u64,
    seed_base: u64,
    drift_offset: f64,
) -> Result<Vec<DiagnosticRow>> {
    if !(s > 0.0) || t_end < s || reps == 0 {
        return Err(Error::InvalidArgument("need 0 < s ≤ t_end and reps ≥ 1".into()));
    }
    let cfg = fam.scale_config(n)?;
    let idx = cfg.index_map();
    let rates = crate::model::NominalRates::nominal(&cfg, &idx);
    let theta = drift_vector(&cfg, &rates, &idx);
    let nf = n as f64;
    let root = nf.sqrt();
    let intervals = (t_end / s).floor() as usize;
    let grid: Vec<f64> = (0..=intervals).map(|k| nf * k as f64 * s).collect();
    let dim = idx.dim();

    // increments[rep] is a flat (interval-major) dim-wide matrix.
    let increments: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let tr = simulate(&cfg, nf * t_end, rep_seed(seed_base, n, rep))?;
            let states = tr.states_at(&grid);
            let xs: Vec<Vec<f64>> = states
                .iter()
                .map(|st| {
                    centered_x(st, &tr.initial_q, &cfg, &idx, &rates, &theta)
                        .into_iter()
                        .map(|v| v / root)
                        .collect()
                })
                .collect();
            let mut inc = Vec::with_capacity(intervals * dim);
            for k in 0..intervals {
                for c in 0..dim {
                    inc.push(xs[k + 1][c] - xs[k][c] - (root * theta[c] + drift_offset) * s);
                }
            }
            Ok(inc)
        })
        .collect::<Result<_>>()?;

    let count = (reps as usize * intervals) as f64;
    let mut rows = Vec::with_capacity(dim);
    for c in 0..dim {
        let samples = increments
            .iter()
            .flat_map(|inc| (0..intervals).map(move |k| inc[k * dim + c]));
        let mean: f64 = samples.clone().sum::<f64>() / count;
        let var: f64 = samples.map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0).max(1.0);
        let z = if var > 0.0 { mean / (var / count).sqrt() } else { 0.0 };
        rows.push(DiagnosticRow {
            n,
            coordinate: c,
            statistic: "martingale_z".into(),
            value: z,
            reps,
            seed_base,
        });
    }
    Ok(rows)
}

/// Assembles the diffusion-scale SRBM matched to the `n`-th network of the
/// family: drift `√n·θⁿ` and reflection at the physical operating rates, box
/// and start point divided by `√n`, and the fleet-conserving covariance
/// ([`conserved_covariance`]) of the saturated primitives — exact
/// conservation keeps the reflected path away from corners where the
/// reflection map degenerates. Deflection-road service noise is dropped
/// because those clocks vanish under fluid scaling; the large negative drift
/// on deflection coordinates and their active lower faces keep them pinned
/// near zero, forwarding blocked returns to their destinations exactly as the
/// prelimit network does.
pub fn srbm_params_for(fam: &ScalingFamily, n: u64) -> Result<SrbmParams> {
    let (cfg, phys) = fam.rates_for(n)?;
    let idx = cfg.index_map();
    let root = (n as f64).sqrt();
    let theta =
        DVector::from_vec(drift_vector(&cfg, &phys, &idx).into_iter().map(|v| root * v).collect());
    let eff = zero_deflection_rates(phys.clone(), &idx);
    let gamma = conserved_covariance(&cfg, &eff, &idx);
    let (r0, rk) = reflection_matrices(&cfg, &phys, &idx);
    let n_st = idx.n_stations();
    let total = cfg.total_bikes() as f64 / root;
    let upper = DVector::from_fn(idx.dim(), |c, _| {
        if c < n_st {
            cfg.stations[c].capacity as f64 / root
        } else {
            total
        }
    });
    let start = DVector::from_fn(idx.dim(), |c, _| {
        if c < n_st {
            cfg.stations[c].initial_bikes as f64 / root
        } else {
            0.0
        }
    });
    let params = SrbmParams {
        dim: idx.dim(),
        n_stations: n_st,
        theta,
        gamma,
        r0,
        rk,
        upper,
        start,
        total_fleet: Some(total),
    };
    params.check()?;
    Ok(params)
}

/// Compares diffusion-scaled terminal marginals `Q(n·T)/√n` from the
/// discrete-event network against the matched SRBM at time `T`, per
/// coordinate (statistic `ks_distance`), across the given scales.
pub fn diffusion_comparison(
    fam: &ScalingFamily,
    ns: &[u64],
    t_end: f64,
    reps: u64,
    dt: f64,
    seed_base: u64,
) -> Result<Vec<DiagnosticRow>> {
    if ns.is_empty() || reps == 0 || !(t_end > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidArgument(
            "need nonempty ns, positive reps, horizon, and step".into(),
        ));
    }
    let mut rows = Vec::new();
    for &n in ns {
        let cfg = fam.scale_config(n)?;
        let root = (n as f64).sqrt();
        let des: Vec<Vec<f64>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let tr = simulate(&cfg, n as f64 * t_end, rep_seed(seed_base, n, rep))?;
                Ok(tr.final_state().q.iter().map(|&v| v as f64 / root).collect())
            })
            .collect::<Result<_>>()?;
        let params = srbm_params_for(fam, n)?;
        let srbm: Vec<Vec<f64>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let path = simulate_srbm(&params, t_end, dt, rep_seed(!seed_base, n, rep))?;
                Ok(path.final_state().to_vec())
            })
            .collect::<Result<_>>()?;
        for (c, d) in ks_compare(&des, &srbm)?.into_iter().enumerate() {
            rows.push(DiagnosticRow {
                n,
                coordinate: c,
                statistic: "ks_distance".into(),
                value: d,
                reps,
                seed_base,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DistributionSpec, NetworkConfig};

    fn fam() -> ScalingFamily {
        // Tight box (K = C = 2) so both boundaries stay active at every
        // scale and the idle/blocked statistics are nondegenerate.
        let cfg = NetworkConfig::symmetric(
            2,
            2,
            2,
            DistributionSpec::exponential(1.0),
            DistributionSpec::exponential(1.0),
        );
        ScalingFamily::new(cfg, vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn fluid_deviations_shrink() {
        let rows = fluid_limit_diagnostic(&fam(), &[1, 16, 256], 2.0, 10, 7).unwrap();
        for r in &rows {
            assert!(r.value >= 0.0, "negative sup deviation {r:?}");
        }
        // Stations (0, 1) and first-choice roads (2, 4) saturate in the
        // limit; deflection roads (3, 5) never do.
        for c in [0usize, 1, 2, 4] {
            let (dec, total) = trend_decreasing_pairs(&rows, "sup_busy_dev", c);
            assert_eq!(total, 2);
            assert!(dec >= 1, "coordinate {c} deviations not trending down");
            let at_256 = rows
                .iter()
                .find(|r| r.n == 256 && r.coordinate == c && r.statistic == "sup_busy_dev")
                .unwrap();
            assert!(at_256.value < 0.3, "coordinate {c} deviation {at_256:?}");
        }
        for c in [3usize, 5] {
            let at_256 = rows
                .iter()
                .find(|r| r.n == 256 && r.coordinate == c && r.statistic == "sup_busy_dev")
                .unwrap();
            assert!(at_256.value > 1.5, "deflection road {c} unexpectedly busy {at_256:?}");
        }
    }

    #[test]
    fn martingale_null_and_bias() {
        let f = fam();
        let rows = martingale_diagnostic(&f, 64, 2.0, 1.0, 60, 11, 0.0).unwrap();
        let big = rows.iter().filter(|r| r.value.abs() > 3.0).count();
        assert!(big * 10 <= rows.len(), "too many null rejections: {rows:?}");
        let biased = martingale_diagnostic(&f, 64, 2.0, 1.0, 60, 11, 1.0).unwrap();
        for j in 0..2 {
            assert!(biased[j].value.abs() > 3.0, "bias not detected at station {j}");
        }
    }

    #[test]
    fn csv_layout() {
        let rows = vec![DiagnosticRow {
            n: 4,
            coordinate: 1,
            statistic: "sup_blocked".into(),
            value: 0.25,
            reps: 3,
            seed_base: 9,
        }];
        let csv = diagnostics_to_csv(&rows);
        assert_eq!(
            csv,
            "n,coordinate,statistic,value,reps,seed_base\n4,1,sup_blocked,2.5000000000000000e-1,3,9\n"
        );
    }

    #[test]
    fn matched_srbm_params_are_valid() {
        let f = fam();
        let n = 64;
        let params = srbm_params_for(&f, n).unwrap();
        let idx = f.scale_config(n).unwrap().index_map();
        assert_eq!(params.dim, idx.dim());
        let root = (n as f64).sqrt();
        // Scaled box and start point.
        let caps = f.scale_config(n).unwrap();
        assert!((params.upper[0] - caps.stations[0].capacity as f64 / root).abs() < 1e-12);
        assert!((params.start[0] - caps.stations[0].initial_bikes as f64 / root).abs() < 1e-12);
        for (j, i) in idx.road_pairs() {
            let c2 = idx.road(j, i, 2);
            // No intrinsic noise on deflection coordinates, strong restoring
            // drift toward their lower face.
            assert_eq!(params.gamma[(c2, c2)], 0.0);
            assert!(params.theta[c2] < 0.0);
            assert!(params.r0[(c2, c2)] > 0.0);
        }
    }

    #[test]
    fn diffusion_marginals_close_at_moderate_scale() {
        let rows = diffusion_comparison(&fam(), &[64], 2.0, 60, 0.01, 21).unwrap();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            assert_eq!(r.statistic, "ks_distance");
            assert!((0.0..=1.0).contains(&r.value), "{r:?}");
        }
        // Station marginals should already be in the right ballpark; with 60
        // samples a KS distance of 0.45 rejects only gross mismatches.
        for j in 0..2 {
            assert!(rows[j].value < 0.45, "station {j} mismatch {rows:?}");
        }
    }

    #[test]
    fn invalid_arguments() {
        let f = fam();
        assert!(fluid_limit_diagnostic(&f, &[4, 2], 1.0, 2, 0).is_err());
        assert!(fluid_limit_diagnostic(&f, &[], 1.0, 2, 0).is_err());
        assert!(martingale_diagnostic(&f, 4, 0.5, 1.0, 5, 0, 0.0).is_err());
    }
}
