use crate::error::{Error, Result};

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) − F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("empty sample in KS comparison".into()));
    }
    let a = sorted(a.to_vec());
    let b = sorted(b.to_vec());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // Process every observation at the current value before comparing
        // the empirical CDFs, so ties contribute a single evaluation point.
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d.max(1.0 - (i as f64 / na).min(j as f64 / nb)).min(1.0))
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty sample in KS test".into()));
    }
    let s = sorted(samples.to_vec());
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - k as f64 / n).abs()).max(((k + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

/// Per-coordinate two-sample KS distances for vector-valued samples
/// (`samples × dim`, both sets sharing the dimension).
pub fn ks_compare(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Vec<f64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("empty sample in KS comparison".into()));
    }
    let dim = a[0].len();
    if b[0].len() != dim {
        return Err(Error::InvalidArgument("KS dimension mismatch".into()));
    }
    (0..dim)
        .map(|c| {
            let ac: Vec<f64> = a.iter().map(|v| v[c]).collect();
            let bc: Vec<f64> = b.iter().map(|v| v[c]).collect();
            ks_two_sample(&ac, &bc)
        })
        .collect()
}
