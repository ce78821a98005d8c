use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::params::SrbmParams;
use crate::error::{Error, Result};

const LCP_TOL: f64 = 1e-10;
const LCP_MAX_SWEEPS: usize = 10_000;

/// Streaming consumer of SRBM steps.
///
/// Called once per Euler step with the post-reflection state (held over
/// `[t0, t1]`) and the pushes applied during the step: `push_lower` per
/// coordinate (empty faces), `push_upper` per station (full faces).
pub trait SrbmObserver {
    fn observe(&mut self, t0: f64, t1: f64, z: &[f64], push_lower: &[f64], push_upper: &[f64]);
}

/// Thinned record of a simulated SRBM path.
#[derive(Debug, Clone, PartialEq)]
pub struct SrbmPath {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Cumulative lower-face pushes at the recorded times.
    pub y_lower: Vec<Vec<f64>>,
    /// Cumulative full-station pushes at the recorded times.
    pub y_upper: Vec<Vec<f64>>,
    /// Steps on which the no-direction road caps needed a direct clamp
    /// (should stay 0 in any physically scaled run).
    pub clamped_steps: u64,
}

impl SrbmPath {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("path records at least the start")
    }
}

/// Factor `F` with `F·Fᵀ = Γ` via symmetric eigendecomposition, tolerating
/// PSD-singular Γ (eigenvalues in `[−1e-10, 0]` clamp to zero).
fn covariance_factor(gamma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = gamma.clone().symmetric_eigen();
    let mut f = eig.eigenvectors.clone();
    for (c, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -1e-10 {
            return Err(Error::Numerical(format!("covariance not PSD: eigenvalue {lambda}")));
        }
        let s = lambda.max(0.0).sqrt();
        for r in 0..f.nrows() {
            f[(r, c)] *= s;
        }
    }
    Ok(f)
}

struct Reflector<'a> {
    params: &'a SrbmParams,
    /// Lower faces with a usable (positive-diagonal) reflection direction.
    active_lower: Vec<usize>,
}

impl<'a> Reflector<'a> {
    fn new(params: &'a SrbmParams) -> Self {
        let active_lower = (0..params.dim).filter(|&c| params.r0[(c, c)] > 0.0).collect();
        Reflector { params, active_lower }
    }

    /// Projected Gauss–Seidel solve of the discrete Skorokhod step: finds
    /// minimal pushes `y ≥ 0` with `w = z + R0·y0 + RK·yK` inside the box and
    /// pushes only on violated faces. Mutates `w` in place; returns pushes.
    fn reflect(
        &self,
        w: &mut DVector<f64>,
        y_lower: &mut [f64],
        y_upper: &mut [f64],
    ) -> Result<()> {
        let p = self.params;
        y_lower.iter_mut().for_each(|v| *v = 0.0);
        y_upper.iter_mut().for_each(|v| *v = 0.0);
        for sweep in 0..LCP_MAX_SWEEPS {
            let mut worst: f64 = 0.0;
            for &c in &self.active_lower {
                let delta = (-w[c] / p.r0[(c, c)]).max(-y_lower[c]);
                if delta != 0.0 {
                    y_lower[c] += delta;
                    w.axpy(delta, &p.r0.column(c), 1.0);
                }
            }
            for j in 0..p.n_stations {
                // RK diagonal is negative: pushing reduces the coordinate.
                let delta = ((w[j] - p.upper[j]) / -p.rk[(j, j)]).max(-y_upper[j]);
                if delta != 0.0 {
                    y_upper[j] += delta;
                    w.axpy(delta, &p.rk.column(j), 1.0);
                }
            }
            for &c in &self.active_lower {
                worst = worst.max(-w[c]);
            }
            for j in 0..p.n_stations {
                worst = worst.max(w[j] - p.upper[j]);
            }
            if worst <= LCP_TOL {
                return Ok(());
            }
            if sweep == LCP_MAX_SWEEPS - 1 {
                return Err(Error::Numerical(format!(
                    "reflection solve did not converge (violation {worst} at state {:?})",
                    w.as_slice()
                )));
            }
        }
        unreachable!()
    }
}

/// Simulates the reflected diffusion with Euler steps
/// `z ← z + θ·dt + F·ξ·√dt` followed by the projected Gauss–Seidel
/// reflection solve. Records every `stride`-th step; observers see every
/// step. Coordinates whose faces carry no reflection direction (upper road
/// caps, zero-rate lower faces) are clamped only as a safeguard, with the
/// event counted.
pub fn simulate_srbm_observed(
    params: &SrbmParams,
    t_end: f64,
    dt: f64,
    seed: u64,
    stride: usize,
    observers: &mut [&mut dyn SrbmObserver],
) -> Result<SrbmPath> {
    params.check()?;
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!("need positive t_end and dt, got {t_end}, {dt}")));
    }
    let steps = (t_end / dt).round() as u64;
    let stride = stride.max(1);
    let factor = covariance_factor(&params.gamma)?;
    let reflector = Reflector::new(params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let dim = params.dim;
    let mut z = params.start.clone();
    let mut xi = DVector::zeros(dim);
    let mut push_lower = vec![0.0; dim];
    let mut push_upper = vec![0.0; params.n_stations];
    let mut cum_lower = vec![0.0; dim];
    let mut cum_upper = vec![0.0; params.n_stations];
    let sqrt_dt = dt.sqrt();

    let mut path = SrbmPath {
        times: vec![0.0],
        states: vec![z.as_slice().to_vec()],
        y_lower: vec![cum_lower.clone()],
        y_upper: vec![cum_upper.clone()],
        clamped_steps: 0,
    };

    for step in 1..=steps {
        for v in xi.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        z.axpy(dt, &params.theta, 1.0);
        z.gemv(sqrt_dt, &factor, &xi, 1.0);
        reflector.reflect(&mut z, &mut push_lower, &mut push_upper)?;

        let mut clamped = false;
        for c in 0..dim {
            if z[c] < 0.0 {
                // only possible on zero-direction lower faces
                z[c] = 0.0;
                clamped = true;
            }
            if c >= params.n_stations && z[c] > params.upper[c] {
                z[c] = params.upper[c];
                clamped = true;
            }
        }
        if clamped {
            path.clamped_steps += 1;
        }

        for (acc, &d) in cum_lower.iter_mut().zip(push_lower.iter()) {
            *acc += d;
        }
        for (acc, &d) in cum_upper.iter_mut().zip(push_upper.iter()) {
            *acc += d;
        }
        let t0 = (step - 1) as f64 * dt;
        let t1 = step as f64 * dt;
        for obs in observers.iter_mut() {
            obs.observe(t0, t1, z.as_slice(), &push_lower, &push_upper);
        }
        if step % stride as u64 == 0 || step == steps {
            path.times.push(t1);
            path.states.push(z.as_slice().to_vec());
            path.y_lower.push(cum_lower.clone());
            path.y_upper.push(cum_upper.clone());
        }
    }
    Ok(path)
}

/// Convenience wrapper recording roughly 10k points and using no observers.
pub fn simulate_srbm(params: &SrbmParams, t_end: f64, dt: f64, seed: u64) -> Result<SrbmPath> {
    let steps = (t_end / dt).round() as usize;
    simulate_srbm_observed(params, t_end, dt, seed, (steps / 10_000).max(1), &mut [])
}
