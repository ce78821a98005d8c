use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{IndexMap, NetworkConfig, NominalRates};

/// Data of the limiting reflected Brownian motion in a box.
///
/// Coordinates `0..n_stations` are stations (their upper faces reflect along
/// the `rk` columns); remaining coordinates are road-class queues, whose upper
/// faces carry no reflection direction (they sit above the reachable total
/// fleet and are never active). The face normal matrix is implicitly
/// `[I; −I]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SrbmParams {
    pub dim: usize,
    pub n_stations: usize,
    pub theta: DVector<f64>,
    pub gamma: DMatrix<f64>,
    /// Reflection directions of the lower (empty) faces, one column each.
    pub r0: DMatrix<f64>,
    /// Reflection directions of the full-station faces, one column per station.
    pub rk: DMatrix<f64>,
    pub upper: DVector<f64>,
    /// Start point of simulated paths.
    pub start: DVector<f64>,
    /// Total fleet of the underlying network, if the params came from one;
    /// used by the geometry check's reachability exclusions.
    pub total_fleet: Option<f64>,
}

/// Drift θ of the centered free process at the given operating rates:
/// `θ_j = ∑_d ∑_{i≠j} b^{(d)}_{i→j} − b_j` for stations,
/// `θ^{(1)}_{j→i} = p_{j→i}·b_j − b^{(1)}_{j→i}` and
/// `θ^{(2)}_{j→i} = −b^{(2)}_{j→i}` for roads.
pub fn drift_vector(cfg: &NetworkConfig, rates: &NominalRates, idx: &IndexMap) -> Vec<f64> {
    let n = idx.n_stations();
    let mut theta = vec![0.0; idx.dim()];
    for j in 0..n {
        let mut v = -rates.b_station[j];
        for i in 0..n {
            if i != j {
                v += rates.road(idx, i, j, 1) + rates.road(idx, i, j, 2);
            }
        }
        theta[j] = v;
    }
    for (j, i) in idx.road_pairs() {
        theta[idx.road(j, i, 1)] = cfg.first_routing[j][i] * rates.b_station[j] - rates.road(idx, j, i, 1);
        theta[idx.road(j, i, 2)] = -rates.road(idx, j, i, 2);
    }
    theta
}

/// The four primitive diffusion covariance matrices: centered service
/// processes and centered routing counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveCovariances {
    /// Covariance per unit time of the centered service/arrival processes:
    /// diagonal `b·c²` over all coordinates.
    pub service: DMatrix<f64>,
    /// Per station `l`: multinomial covariance `p_{l→k}(δ − p_{l→m})` of the
    /// first-trip destination counts, indexed by destination in road order.
    pub first_routing: Vec<DMatrix<f64>>,
    /// Per station `l`: multinomial covariance of the deflection destination
    /// counts.
    pub deflect_routing: Vec<DMatrix<f64>>,
    // Road exit routing is deterministic (each road feeds one station), so its
    // covariance is identically zero and carries no stored matrix.
}

/// Assembles the primitive covariance matrices from rates and the configured
/// coefficients of variation.
pub fn primitive_covariances(
    cfg: &NetworkConfig,
    rates: &NominalRates,
    idx: &IndexMap,
) -> PrimitiveCovariances {
    let n = idx.n_stations();
    let dim = idx.dim();
    let mut service = DMatrix::zeros(dim, dim);
    for j in 0..n {
        let cv = cfg.stations[j].arrival.cv;
        service[(j, j)] = rates.b_station[j] * cv * cv;
    }
    for (j, i) in idx.road_pairs() {
        let c1 = idx.road(j, i, 1);
        let c2 = idx.road(j, i, 2);
        let cv1 = cfg.travel_first[j][i].cv;
        let cv2 = cfg.travel_deflect[j][i].cv;
        service[(c1, c1)] = rates.road(idx, j, i, 1) * cv1 * cv1;
        service[(c2, c2)] = rates.road(idx, j, i, 2) * cv2 * cv2;
    }

    let multinomial = |row: &[f64], l: usize| {
        let dests: Vec<usize> = (0..n).filter(|&i| i != l).collect();
        DMatrix::from_fn(n - 1, n - 1, |a, b| {
            let pa = row[dests[a]];
            let pb = row[dests[b]];
            if a == b {
                pa * (1.0 - pa)
            } else {
                -pa * pb
            }
        })
    };
    let first_routing = (0..n).map(|l| multinomial(&cfg.first_routing[l], l)).collect();
    let deflect_routing = (0..n).map(|l| multinomial(&cfg.deflect_routing[l], l)).collect();

    PrimitiveCovariances { service, first_routing, deflect_routing }
}

/// Covariance Γ of the limiting free Brownian motion.
///
/// Entries: station diagonal `∑_d ∑_{i≠k} b^{(d)}_{i→k}(c^{(d)})² + b_k c_a²`;
/// station-k ↔ class-1 road `k→l` cross term `p_{k→l} b_k c_{a,k}²`;
/// class-1 road diagonal `b_k p_{k→l}(1−p_{k→l}) + p_{k→l} b_k c_{a,k}² +
/// b^{(1)}(c^{(1)})²`; class-2 road diagonal `b_k α_{k→l}(1−α_{k→l}) +
/// b^{(2)}(c^{(2)})²`; zero elsewhere.
pub fn covariance_matrix(cfg: &NetworkConfig, rates: &NominalRates, idx: &IndexMap) -> DMatrix<f64> {
    let n = idx.n_stations();
    let dim = idx.dim();
    let mut g = DMatrix::zeros(dim, dim);
    for k in 0..n {
        let ca = cfg.stations[k].arrival.cv;
        let mut v = rates.b_station[k] * ca * ca;
        for i in 0..n {
            if i != k {
                let cv1 = cfg.travel_first[i][k].cv;
                let cv2 = cfg.travel_deflect[i][k].cv;
                v += rates.road(idx, i, k, 1) * cv1 * cv1 + rates.road(idx, i, k, 2) * cv2 * cv2;
            }
        }
        g[(k, k)] = v;
    }
    for (k, l) in idx.road_pairs() {
        let ca = cfg.stations[k].arrival.cv;
        let p = cfg.first_routing[k][l];
        let alpha = cfg.deflect_routing[k][l];
        let c1 = idx.road(k, l, 1);
        let c2 = idx.road(k, l, 2);
        let cross = p * rates.b_station[k] * ca * ca;
        g[(k, c1)] = cross;
        g[(c1, k)] = cross;
        let cv1 = cfg.travel_first[k][l].cv;
        let cv2 = cfg.travel_deflect[k][l].cv;
        g[(c1, c1)] = rates.b_station[k] * p * (1.0 - p) + cross + rates.road(idx, k, l, 1) * cv1 * cv1;
        g[(c2, c2)] =
            rates.b_station[k] * alpha * (1.0 - alpha) + rates.road(idx, k, l, 2) * cv2 * cv2;
    }
    g
}

/// Covariance of the free Brownian motion assembled directly from the
/// primitive sources, each entering with the signed weight it carries in the
/// queue dynamics: a station's arrival clock removes a bike from the station
/// and places `p_{k→l}` of one on each outgoing road; a road completion moves
/// a bike from the road to its destination; first-trip routing redistributes
/// mass among a station's outgoing roads. Every source therefore has zero net
/// weight, so the total-fleet direction is an exact null vector of the result
/// and reflected paths conserve the fleet pathwise. Deflection routing is
/// clocked by blocking time rather than calendar time and contributes no
/// calendar-rate covariance.
pub fn conserved_covariance(
    cfg: &NetworkConfig,
    rates: &NominalRates,
    idx: &IndexMap,
) -> DMatrix<f64> {
    let n = idx.n_stations();
    let dim = idx.dim();
    let mut g = DMatrix::zeros(dim, dim);
    let add_rank_one = |g: &mut DMatrix<f64>, w: &[(usize, f64)], scale: f64| {
        for &(a, wa) in w {
            for &(b, wb) in w {
                g[(a, b)] += scale * wa * wb;
            }
        }
    };
    for k in 0..n {
        let ca = cfg.stations[k].arrival.cv;
        let mut w = vec![(k, -1.0)];
        for l in 0..n {
            if l != k {
                w.push((idx.road(k, l, 1), cfg.first_routing[k][l]));
            }
        }
        add_rank_one(&mut g, &w, rates.b_station[k] * ca * ca);
        // Multinomial destination noise across the outgoing class-1 roads.
        let b = rates.b_station[k];
        for l in 0..n {
            for m in 0..n {
                if l == k || m == k {
                    continue;
                }
                let pl = cfg.first_routing[k][l];
                let pm = cfg.first_routing[k][m];
                let cov = if l == m { pl * (1.0 - pl) } else { -pl * pm };
                g[(idx.road(k, l, 1), idx.road(k, m, 1))] += b * cov;
            }
        }
    }
    for (k, l) in idx.road_pairs() {
        let cv1 = cfg.travel_first[k][l].cv;
        let cv2 = cfg.travel_deflect[k][l].cv;
        let w1 = [(idx.road(k, l, 1), -1.0), (l, 1.0)];
        add_rank_one(&mut g, &w1, rates.road(idx, k, l, 1) * cv1 * cv1);
        let w2 = [(idx.road(k, l, 2), -1.0), (l, 1.0)];
        add_rank_one(&mut g, &w2, rates.road(idx, k, l, 2) * cv2 * cv2);
    }
    g
}

/// Reflection matrices of the decomposition.
///
/// `R0` column for station face `j`: `+b_j` on the station, `−p_{j→i} b_j` on
/// each class-1 road out of `j` (an idle station starves its outgoing roads).
/// `R0` column for road face `(i→j, d)`: `+b^{(d)}_{i→j}` on itself and
/// `−b^{(d)}_{i→j}` on destination station `j` (an idle road starves the
/// station it feeds). `RK` column for full-station face `j`: `−1` on the
/// station, `+α_{j→i}` on each class-2 road out of `j`.
pub fn reflection_matrices(
    cfg: &NetworkConfig,
    rates: &NominalRates,
    idx: &IndexMap,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = idx.n_stations();
    let dim = idx.dim();
    let mut r0 = DMatrix::zeros(dim, dim);
    let mut rk = DMatrix::zeros(dim, n);
    for j in 0..n {
        r0[(j, j)] = rates.b_station[j];
        rk[(j, j)] = -1.0;
    }
    for (j, i) in idx.road_pairs() {
        let c1 = idx.road(j, i, 1);
        let c2 = idx.road(j, i, 2);
        r0[(c1, j)] = -cfg.first_routing[j][i] * rates.b_station[j];
        r0[(c1, c1)] = rates.road(idx, j, i, 1);
        r0[(c2, c2)] = rates.road(idx, j, i, 2);
        r0[(i, c1)] = -rates.road(idx, j, i, 1);
        r0[(i, c2)] = -rates.road(idx, j, i, 2);
        rk[(c2, j)] = cfg.deflect_routing[j][i];
    }
    (r0, rk)
}

impl SrbmParams {
    /// Assembles SRBM data from a network at the given operating rates, with
    /// the physical box (station capacities, fleet-size road caps) and the
    /// initial fleet placement as the start point. The noise uses
    /// [`conserved_covariance`] so simulated paths conserve the fleet exactly
    /// and stay on the same affine slice of the box as the network.
    pub fn from_network(cfg: &NetworkConfig, rates: &NominalRates, idx: &IndexMap) -> Result<Self> {
        cfg.validated()?;
        rates.check(cfg, idx)?;
        let (r0, rk) = reflection_matrices(cfg, rates, idx);
        let total = cfg.total_bikes() as f64;
        let n = idx.n_stations();
        let upper = DVector::from_fn(idx.dim(), |c, _| {
            if c < n {
                cfg.stations[c].capacity as f64
            } else {
                total
            }
        });
        let start = DVector::from_fn(idx.dim(), |c, _| {
            if c < n {
                cfg.stations[c].initial_bikes as f64
            } else {
                0.0
            }
        });
        let params = SrbmParams {
            dim: idx.dim(),
            n_stations: n,
            theta: DVector::from_vec(drift_vector(cfg, rates, idx)),
            gamma: conserved_covariance(cfg, rates, idx),
            r0,
            rk,
            upper,
            start,
            total_fleet: Some(total),
        };
        params.check()?;
        Ok(params)
    }

    /// One-dimensional reflected Brownian motion in `[0, cap]`.
    pub fn one_dimensional(theta: f64, gamma: f64, cap: f64, start: f64) -> Self {
        SrbmParams {
            dim: 1,
            n_stations: 1,
            theta: DVector::from_vec(vec![theta]),
            gamma: DMatrix::from_vec(1, 1, vec![gamma]),
            r0: DMatrix::from_vec(1, 1, vec![1.0]),
            rk: DMatrix::from_vec(1, 1, vec![-1.0]),
            upper: DVector::from_vec(vec![cap]),
            start: DVector::from_vec(vec![start]),
            total_fleet: None,
        }
    }

    /// Validates symmetry/PSD of Γ, box ordering, and reflection diagonals.
    pub fn check(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.gamma.nrows() != self.dim
            || self.gamma.ncols() != self.dim
            || self.r0.nrows() != self.dim
            || self.r0.ncols() != self.dim
            || self.rk.nrows() != self.dim
            || self.rk.ncols() != self.n_stations
            || self.theta.len() != self.dim
            || self.upper.len() != self.dim
            || self.start.len() != self.dim
        {
            problems.push("inconsistent dimensions".to_string());
        } else {
            let asym = (&self.gamma - self.gamma.transpose()).abs().max();
            if asym > 1e-12 {
                problems.push(format!("gamma asymmetry {asym}"));
            }
            let eig = self.gamma.clone().symmetric_eigen();
            let min_eig = eig.eigenvalues.min();
            if min_eig < -1e-10 {
                problems.push(format!("gamma has negative eigenvalue {min_eig}"));
            }
            for c in 0..self.dim {
                if self.r0[(c, c)] < 0.0 {
                    problems.push(format!("negative R0 diagonal at coordinate {c}"));
                }
                if !(self.upper[c] > 0.0) {
                    problems.push(format!("upper bound at coordinate {c} is not positive"));
                }
            }
            for j in 0..self.n_stations {
                if self.rk[(j, j)] >= 0.0 {
                    problems.push(format!("RK diagonal at station {j} must be negative"));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(SrbmParamsFile::from(self)).expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let file: SrbmParamsFile = serde_json::from_value(v.clone())?;
        let p = file.into_params()?;
        p.check()?;
        Ok(p)
    }
}

/// Serialization schema: vectors plus row-major matrices.
#[derive(Debug, Serialize, Deserialize)]
struct SrbmParamsFile {
    dim: usize,
    n_stations: usize,
    theta: Vec<f64>,
    gamma: Vec<Vec<f64>>,
    r0: Vec<Vec<f64>>,
    rk: Vec<Vec<f64>>,
    upper: Vec<f64>,
    start: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    total_fleet: Option<f64>,
}

impl From<&SrbmParams> for SrbmParamsFile {
    fn from(p: &SrbmParams) -> Self {
        let rows = |m: &DMatrix<f64>| m.row_iter().map(|r| r.iter().copied().collect()).collect();
        SrbmParamsFile {
            dim: p.dim,
            n_stations: p.n_stations,
            theta: p.theta.iter().copied().collect(),
            gamma: rows(&p.gamma),
            r0: rows(&p.r0),
            rk: rows(&p.rk),
            upper: p.upper.iter().copied().collect(),
            start: p.start.iter().copied().collect(),
            total_fleet: p.total_fleet,
        }
    }
}

impl SrbmParamsFile {
    fn into_params(self) -> Result<SrbmParams> {
        let matrix = |rows: &Vec<Vec<f64>>, nrows: usize, ncols: usize, name: &str| {
            if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
                return Err(Error::InvalidArgument(format!("{name} must be {nrows}x{ncols}")));
            }
            Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
        };
        Ok(SrbmParams {
            dim: self.dim,
            n_stations: self.n_stations,
            theta: DVector::from_vec(self.theta),
            gamma: matrix(&self.gamma, self.dim, self.dim, "gamma")?,
            r0: matrix(&self.r0, self.dim, self.dim, "r0")?,
            rk: matrix(&self.rk, self.dim, self.n_stations, "rk")?,
            upper: DVector::from_vec(self.upper),
            start: DVector::from_vec(self.start),
            total_fleet: self.total_fleet,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DistributionSpec;

    fn sym2() -> (NetworkConfig, IndexMap, NominalRates) {
        let cfg = NetworkConfig::symmetric(
            2,
            5,
            3,
            DistributionSpec::exponential(1.0),
            DistributionSpec::exponential(1.0),
        );
        let idx = cfg.index_map();
        let rates = NominalRates::nominal(&cfg, &idx);
        (cfg, idx, rates)
    }

    #[test]
    fn drift_entries() {
        let (cfg, idx, mut rates) = sym2();
        rates.b_road = vec![1.0, 0.3, 1.0, 0.3];
        let theta = drift_vector(&cfg, &rates, &idx);
        // Station 1: inflow (1 + 0.3) from road 2->1, minus b_1 = 1.
        assert!((theta[0] - 0.3).abs() < 1e-14);
        // Class-1 road 1->2: p=1, b_1 = 1, b^{(1)} = 1 → 0.
        assert_eq!(theta[idx.road(0, 1, 1)], 0.0);
        // Class-2 road: sign flip of its rate.
        assert_eq!(theta[idx.road(0, 1, 2)], -0.3);
    }

    #[test]
    fn zero_rates_zero_drift() {
        let (cfg, idx, _) = sym2();
        let rates = NominalRates::new(vec![0.0; 2], vec![0.0; 4]);
        assert!(drift_vector(&cfg, &rates, &idx).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn covariance_structure() {
        let (cfg, idx, rates) = sym2();
        let g = covariance_matrix(&cfg, &rates, &idx);
        // Station-road cross term p·b·c_a² = 1.
        assert_eq!(g[(0, idx.road(0, 1, 1))], 1.0);
        assert_eq!(g[(idx.road(0, 1, 1), 0)], 1.0);
        // Class-1 road diagonal: p(1-p)=0 + cross 1 + b c_s² = 2.
        assert_eq!(g[(idx.road(0, 1, 1), idx.road(0, 1, 1))], 2.0);
        // Symmetric and PSD.
        assert!((&g - g.transpose()).abs().max() == 0.0);
        let min_eig = g.symmetric_eigen().eigenvalues.min();
        assert!(min_eig > -1e-10, "min eigenvalue {min_eig}");
    }

    #[test]
    fn conserved_covariance_structure() {
        let (cfg, idx, rates) = sym2();
        let g = conserved_covariance(&cfg, &rates, &idx);
        // Symmetric and PSD (sum of PSD primitives).
        assert!((&g - g.transpose()).abs().max() < 1e-14);
        let min_eig = g.clone().symmetric_eigen().eigenvalues.min();
        assert!(min_eig > -1e-10, "min eigenvalue {min_eig}");
        // The all-ones direction is an exact null vector: every noise source
        // moves a bike between coordinates without creating or destroying one.
        let ones = DVector::from_element(idx.dim(), 1.0);
        assert!((&g * &ones).abs().max() < 1e-12);
        // Shared clocks induce negative cross terms: the arrival clock pairs
        // the station with its outgoing road, a road completion pairs the
        // road with its destination.
        assert!(g[(0, idx.road(0, 1, 1))] < 0.0);
        assert!(g[(1, idx.road(0, 1, 1))] < 0.0);
        // Diagonals match the per-coordinate noise intensity: station 0 sees
        // its own clock plus the two incoming road clocks.
        assert!((g[(0, 0)] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn reflection_structure() {
        let (cfg, idx, rates) = sym2();
        let (r0, rk) = reflection_matrices(&cfg, &rates, &idx);
        assert_eq!(rk[(0, 0)], -1.0);
        assert_eq!(rk[(idx.road(0, 1, 2), 0)], 1.0); // α = 1 with N=2
        assert_eq!(r0[(idx.road(0, 1, 1), idx.road(0, 1, 1))], 1.0);
        assert_eq!(r0[(idx.road(0, 1, 1), 0)], -1.0);
        assert_eq!(r0[(1, idx.road(0, 1, 1))], -1.0);
    }

    #[test]
    fn primitive_matrices() {
        let cfg = NetworkConfig::symmetric(
            3,
            5,
            3,
            DistributionSpec::exponential(1.0),
            DistributionSpec::gamma(1.0, 0.5),
        );
        let idx = cfg.index_map();
        let rates = NominalRates::nominal(&cfg, &idx);
        let prim = primitive_covariances(&cfg, &rates, &idx);
        assert_eq!(prim.service[(0, 0)], 1.0); // b=1, c_a=1
        assert_eq!(prim.service[(idx.road(0, 1, 1), idx.road(0, 1, 1))], 0.25);
        let m = &prim.first_routing[0];
        assert_eq!(m[(0, 0)], 0.25); // p=1/2: p(1-p)
        assert_eq!(m[(0, 1)], -0.25);
    }

    #[test]
    fn params_roundtrip_and_check() {
        let (cfg, idx, rates) = sym2();
        let p = SrbmParams::from_network(&cfg, &rates, &idx).unwrap();
        let back = SrbmParams::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
        assert_eq!(p.upper[0], 5.0);
        assert_eq!(p.upper[idx.road(0, 1, 1)], 6.0);
    }
}
