use crate::des::{centered_x, Trajectory};
use crate::error::{Error, Result};
use crate::model::{NetworkConfig, NominalRates};
use crate::srbm::drift_vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingKind {
    Fluid,
    Diffusion,
}

/// A trajectory rescaled to the fluid (`/n`) or diffusion (`/√n`) regime.
///
/// All vectors are per-epoch samples of right-continuous step functions at
/// the scaled event times `times[k] = (raw epoch)/n`, covering `[0, horizon/n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPath {
    pub n: u64,
    pub kind: ScalingKind,
    /// Scaled event epochs, starting at 0 and ending at the scaled horizon.
    pub times: Vec<f64>,
    /// Scaled queue lengths per epoch (`Q̄` or `Q̃`), dim entries each.
    pub q: Vec<Vec<f64>>,
    /// Fluid: busy time `B̄(t) = B(nt)/n`. Diffusion: centered busy time
    /// `(B(nt) − nt)/√n`.
    pub busy: Vec<Vec<f64>>,
    /// Scaled idle times `Ȳ⁰`/`Ỹ⁰` per coordinate.
    pub y_lower: Vec<Vec<f64>>,
    /// Scaled blocked-return counts `Ȳ^K`/`Ỹ^K` per station.
    pub y_upper: Vec<Vec<f64>>,
    /// Diffusion only: the centered free process `X̃ⁿ` per epoch.
    pub x: Option<Vec<Vec<f64>>>,
}

impl ScaledPath {
    /// Scaled horizon `T = horizon/n`.
    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("paths sample at least t = 0")
    }
}

fn check_n(tr: &Trajectory, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("scaling index n must be positive".into()));
    }
    let nf = n as f64;
    if tr.horizon < nf {
        return Err(Error::InvalidArgument(format!(
            "horizon {} too short for scaling index {n} (needs ≥ n for unit scaled time)",
            tr.horizon
        )));
    }
    Ok(nf)
}

/// Fluid scaling `Q̄ⁿ(t) = Q(nt)/n`, `B̄ⁿ(t) = B(nt)/n`, sampled at the
/// event epochs of `tr` (scaled horizon `T = horizon/n`).
pub fn fluid_scale(tr: &Trajectory, n: u64) -> Result<ScaledPath> {
    let nf = check_n(tr, n)?;
    let n_st = tr.idx.n_stations();
    let mut path = ScaledPath {
        n,
        kind: ScalingKind::Fluid,
        times: Vec::new(),
        q: Vec::new(),
        busy: Vec::new(),
        y_lower: Vec::new(),
        y_upper: Vec::new(),
        x: None,
    };
    tr.replay(|s| {
        path.times.push(s.t / nf);
        path.q.push(s.q.iter().map(|&v| v as f64 / nf).collect());
        path.busy.push(s.busy.iter().map(|&b| b / nf).collect());
        path.y_lower.push((0..s.q.len()).map(|c| s.idle(c) / nf).collect());
        path.y_upper.push((0..n_st).map(|j| s.yk[j] as f64 / nf).collect());
    });
    Ok(path)
}

/// Diffusion scaling `Q̃ⁿ(t) = Q(nt)/√n` with the centered free process
/// `X̃ⁿ(t) = X(nt)/√n` built from the supplied nominal rates, and centered
/// busy times `(B(nt) − nt)/√n`.
pub fn diffusion_scale(
    tr: &Trajectory,
    cfg: &NetworkConfig,
    n: u64,
    rates: &NominalRates,
) -> Result<ScaledPath> {
    let nf = check_n(tr, n)?;
    let root = nf.sqrt();
    let idx = tr.idx;
    let theta = drift_vector(cfg, rates, &idx);
    let n_st = idx.n_stations();
    let mut path = ScaledPath {
        n,
        kind: ScalingKind::Diffusion,
        times: Vec::new(),
        q: Vec::new(),
        busy: Vec::new(),
        y_lower: Vec::new(),
        y_upper: Vec::new(),
        x: Some(Vec::new()),
    };
    tr.replay(|s| {
        path.times.push(s.t / nf);
        path.q.push(s.q.iter().map(|&v| v as f64 / root).collect());
        path.busy.push(s.busy.iter().map(|&b| (b - s.t) / root).collect());
        path.y_lower.push((0..idx.dim()).map(|c| s.idle(c) / root).collect());
        path.y_upper.push((0..n_st).map(|j| s.yk[j] as f64 / root).collect());
        let x = centered_x(s, &tr.initial_q, cfg, &idx, rates, &theta);
        path.x.as_mut().unwrap().push(x.into_iter().map(|v| v / root).collect());
    });
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::des::simulate;
    use crate::model::DistributionSpec;

    fn cfg() -> NetworkConfig {
        NetworkConfig::symmetric(
            2,
            4,
            3,
            DistributionSpec::exponential(1.0),
            DistributionSpec::exponential(1.0),
        )
    }

    #[test]
    fn n_one_fluid_is_identity_on_queues() {
        let cfg = cfg();
        let tr = simulate(&cfg, 50.0, 1).unwrap();
        let p = fluid_scale(&tr, 1).unwrap();
        let mut k = 0;
        tr.replay(|s| {
            assert_eq!(p.times[k], s.t);
            for (c, &qc) in s.q.iter().enumerate() {
                assert_eq!(p.q[k][c], qc as f64);
            }
            k += 1;
        });
    }

    #[test]
    fn fluid_divides_by_n() {
        let cfg = cfg();
        let tr = simulate(&cfg, 200.0, 2).unwrap();
        let p = fluid_scale(&tr, 16).unwrap();
        assert!((p.horizon() - 200.0 / 16.0).abs() < 1e-12);
        let end = tr.final_state();
        let last = p.q.last().unwrap();
        for c in 0..tr.idx.dim() {
            assert!((last[c] - end.q[c] as f64 / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diffusion_is_root_n_times_fluid() {
        let cfg = cfg();
        let idx = cfg.index_map();
        let rates = NominalRates::nominal(&cfg, &idx);
        let tr = simulate(&cfg, 100.0, 3).unwrap();
        let n = 25u64;
        let f = fluid_scale(&tr, n).unwrap();
        let d = diffusion_scale(&tr, &cfg, n, &rates).unwrap();
        let root = (n as f64).sqrt();
        for k in 0..f.times.len() {
            assert_eq!(f.times[k], d.times[k]);
            for c in 0..idx.dim() {
                assert!((d.q[k][c] - root * f.q[k][c]).abs() < 1e-9);
                // Busy centering: B̃ = √n(B̄ − t).
                assert!((d.busy[k][c] - root * (f.busy[k][c] - f.times[k])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn short_horizon_rejected() {
        let cfg = cfg();
        let tr = simulate(&cfg, 5.0, 1).unwrap();
        assert!(fluid_scale(&tr, 10).is_err());
        assert!(fluid_scale(&tr, 0).is_err());
    }
}
