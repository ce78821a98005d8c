use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::srbm::{simulate_srbm_observed, SrbmObserver, SrbmParams};

/// A monomial test function `f(x) = ∏ (x_c − m_c)^{e_c}` centered at the box
/// midpoint `m`, with total degree ≤ 3.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    /// Sparse exponents `(coordinate, power)`, powers ≥ 1.
    pub terms: Vec<(usize, u8)>,
    /// Center point subtracted coordinate-wise before exponentiation.
    pub center: Vec<f64>,
}

impl Monomial {
    pub fn new(terms: Vec<(usize, u8)>, center: Vec<f64>) -> Result<Self> {
        let degree: u32 = terms.iter().map(|&(_, p)| p as u32).sum();
        if degree > 3 {
            return Err(Error::InvalidArgument(format!(
                "test functions are limited to total degree 3, got {degree}"
            )));
        }
        if terms.iter().any(|&(c, p)| c >= center.len() || p == 0) {
            return Err(Error::InvalidArgument("bad monomial term".into()));
        }
        Ok(Monomial { terms, center })
    }

    pub fn name(&self) -> String {
        if self.terms.is_empty() {
            return "1".into();
        }
        self.terms
            .iter()
            .map(|&(c, p)| if p == 1 { format!("x{c}") } else { format!("x{c}^{p}") })
            .collect::<Vec<_>>()
            .join("*")
    }

    fn shifted(&self, x: &[f64], c: usize) -> f64 {
        x[c] - self.center[c]
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(c, p)| self.shifted(x, c).powi(p as i32)).product()
    }

    /// Gradient entry `∂f/∂x_c`.
    pub fn gradient(&self, x: &[f64]) -> Vec<(usize, f64)> {
        self.terms
            .iter()
            .map(|&(c, p)| {
                let rest: f64 = self
                    .terms
                    .iter()
                    .filter(|&&(c2, _)| c2 != c)
                    .map(|&(c2, p2)| self.shifted(x, c2).powi(p2 as i32))
                    .product();
                (c, p as f64 * self.shifted(x, c).powi(p as i32 - 1) * rest)
            })
            .collect()
    }

    /// Hessian entries `∂²f/∂x_a∂x_b` (sparse, each unordered pair once with
    /// its symmetric multiplicity accounted by the caller).
    pub fn hessian(&self, x: &[f64]) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, &(a, pa)) in self.terms.iter().enumerate() {
            // Diagonal term.
            if pa >= 2 {
                let rest: f64 = self
                    .terms
                    .iter()
                    .filter(|&&(c2, _)| c2 != a)
                    .map(|&(c2, p2)| self.shifted(x, c2).powi(p2 as i32))
                    .product();
                let v = pa as f64 * (pa as f64 - 1.0) * self.shifted(x, a).powi(pa as i32 - 2);
                out.push((a, a, v * rest));
            }
            for &(b, pb) in self.terms.iter().skip(i + 1) {
                let rest: f64 = self
                    .terms
                    .iter()
                    .filter(|&&(c2, _)| c2 != a && c2 != b)
                    .map(|&(c2, p2)| self.shifted(x, c2).powi(p2 as i32))
                    .product();
                let v = pa as f64
                    * self.shifted(x, a).powi(pa as i32 - 1)
                    * pb as f64
                    * self.shifted(x, b).powi(pb as i32 - 1);
                out.push((a, b, v * rest));
            }
        }
        out
    }
}

/// Builds all monomials of total degree 1..=`max_degree` over `dim`
/// coordinates, centered at the box midpoint `upper/2`.
pub fn monomial_basis(upper: &[f64], max_degree: u8) -> Vec<Monomial> {
    let center: Vec<f64> = upper.iter().map(|&u| 0.5 * u).collect();
    let dim = upper.len();
    let mut out = Vec::new();
    // Enumerate exponent assignments by recursion over coordinates; every
    // nonempty partial assignment is itself a basis element.
    fn rec(
        dim: usize,
        start: usize,
        left: u8,
        cur: &mut Vec<(usize, u8)>,
        center: &[f64],
        out: &mut Vec<Monomial>,
    ) {
        if !cur.is_empty() {
            out.push(Monomial { terms: cur.clone(), center: center.to_vec() });
        }
        for c in start..dim {
            for p in 1..=left {
                cur.push((c, p));
                rec(dim, c + 1, left - p, cur, center, out);
                cur.pop();
            }
        }
    }
    let mut cur = Vec::new();
    rec(dim, 0, max_degree.min(3), &mut cur, &center, &mut out);
    out
}

/// One BAR evaluation: the stationary expectation of the generator plus the
/// boundary terms should vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct BarResidual {
    pub name: String,
    /// Time-average of `ℒf = θ·∇f + ½ tr(Γ∇²f)` along the path.
    pub interior: f64,
    /// Push-weighted average of the reflection directional derivatives.
    pub boundary: f64,
    pub residual: f64,
    /// Magnitude scale for relative comparison.
    pub scale: f64,
}

pub fn bar_table_csv(rows: &[BarResidual]) -> String {
    let mut out = String::from("function,interior,boundary,residual,scale\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            r.name, r.interior, r.boundary, r.residual, r.scale
        ));
    }
    out
}

/// Streaming accumulator of the BAR terms along a reflected-diffusion path.
pub struct BarAccumulator<'a> {
    params: &'a SrbmParams,
    functions: Vec<Monomial>,
    burn_in: f64,
    time: f64,
    interior: Vec<f64>,
    boundary: Vec<f64>,
    interior_abs: Vec<f64>,
    boundary_abs: Vec<f64>,
}

impl<'a> BarAccumulator<'a> {
    pub fn new(params: &'a SrbmParams, functions: Vec<Monomial>, burn_in: f64) -> Self {
        let k = functions.len();
        BarAccumulator {
            params,
            functions,
            burn_in,
            time: 0.0,
            interior: vec![0.0; k],
            boundary: vec![0.0; k],
            interior_abs: vec![0.0; k],
            boundary_abs: vec![0.0; k],
        }
    }

    pub fn finish(&self) -> Result<Vec<BarResidual>> {
        if self.time <= 0.0 {
            return Err(Error::InvalidArgument("no path time past burn-in".into()));
        }
        Ok(self
            .functions
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let interior = self.interior[k] / self.time;
                let boundary = self.boundary[k] / self.time;
                let scale =
                    (self.interior_abs[k] / self.time).max(self.boundary_abs[k] / self.time);
                BarResidual {
                    name: f.name(),
                    interior,
                    boundary,
                    residual: interior + boundary,
                    scale,
                }
            })
            .collect())
    }
}

impl SrbmObserver for BarAccumulator<'_> {
    fn observe(&mut self, t0: f64, t1: f64, z: &[f64], push_lower: &[f64], push_upper: &[f64]) {
        if t1 <= self.burn_in {
            return;
        }
        let dt = t1 - t0.max(self.burn_in);
        self.time += dt;
        let p = self.params;
        for (k, f) in self.functions.iter().enumerate() {
            let grad = f.gradient(z);
            let mut lf: f64 = grad.iter().map(|&(c, g)| p.theta[c] * g).sum();
            for (a, b, h) in f.hessian(z) {
                let w = if a == b { 0.5 } else { 1.0 };
                lf += w * p.gamma[(a, b)] * h;
            }
            self.interior[k] += lf * dt;
            self.interior_abs[k] += lf.abs() * dt;
            let mut push: f64 = 0.0;
            for (c, &y) in push_lower.iter().enumerate() {
                if y > 0.0 {
                    let v: f64 = grad.iter().map(|&(g_c, g)| p.r0[(g_c, c)] * g).sum();
                    push += v * y;
                }
            }
            for (j, &y) in push_upper.iter().enumerate() {
                if y > 0.0 {
                    let v: f64 = grad.iter().map(|&(g_c, g)| p.rk[(g_c, j)] * g).sum();
                    push += v * y;
                }
            }
            self.boundary[k] += push;
            self.boundary_abs[k] += push.abs();
        }
    }
}

/// Simulates the SRBM and evaluates the BAR residuals for the given test
/// functions (or the full degree-≤`max_degree` midpoint basis when
/// `functions` is empty).
pub fn bar_residuals(
    params: &SrbmParams,
    t_end: f64,
    dt: f64,
    seed: u64,
    burn_in: f64,
    functions: Vec<Monomial>,
) -> Result<Vec<BarResidual>> {
    let functions = if functions.is_empty() {
        monomial_basis(params.upper.as_slice(), 2)
    } else {
        functions
    };
    let mut acc = BarAccumulator::new(params, functions, burn_in);
    simulate_srbm_observed(params, t_end, dt, seed, usize::MAX, &mut [&mut acc])?;
    acc.finish()
}

/// The generator applied to a monomial at a point; exposed for direct checks.
pub fn generator(params: &SrbmParams, f: &Monomial, x: &DVector<f64>) -> f64 {
    let grad = f.gradient(x.as_slice());
    let mut lf: f64 = grad.iter().map(|&(c, g)| params.theta[c] * g).sum();
    for (a, b, h) in f.hessian(x.as_slice()) {
        let w = if a == b { 0.5 } else { 1.0 };
        lf += w * params.gamma[(a, b)] * h;
    }
    lf
}
