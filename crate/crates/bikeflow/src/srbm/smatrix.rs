use nalgebra::DMatrix;

const SLACK_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-12;

/// Decides whether `A` admits `x ≥ 0` with `A·x > 0` (the S-matrix property
/// for square `A`; the same feasibility question for rectangular `A`).
///
/// Decided by linear programming: maximize `s` subject to `A·x ≥ s·1`,
/// `0 ≤ x ≤ 1`; the property holds iff the optimum exceeds a small positive
/// tolerance. The box on `x` is harmless since the property is invariant
/// under positive scaling of `x`.
pub fn is_s_matrix(a: &DMatrix<f64>) -> bool {
    max_positivity_slack(a) > SLACK_TOL
}

/// Optimal slack `max { s : ∃ x ∈ [0,1]^n, A·x ≥ s·1, s ≥ 0 }`.
///
/// Zero rows force the optimum to 0; an empty constraint set (0 rows) is
/// vacuously satisfiable.
pub fn max_positivity_slack(a: &DMatrix<f64>) -> f64 {
    let m = a.nrows();
    let n = a.ncols();
    if m == 0 {
        return f64::INFINITY;
    }
    if n == 0 {
        return 0.0;
    }

    // Standard-form tableau for: maximize s over v = (x, s) ≥ 0 with
    //   -A·x + s·1 ≤ 0   (m rows)
    //    x ≤ 1           (n rows)
    // The origin is feasible, so the slack basis starts the simplex directly.
    let nv = n + 1;
    let nc = m + n;
    let width = nv + nc + 1; // structural + slack + rhs
    let rhs = width - 1;
    let mut t = vec![vec![0.0; width]; nc];
    for r in 0..m {
        for j in 0..n {
            t[r][j] = -a[(r, j)];
        }
        t[r][n] = 1.0;
        t[r][nv + r] = 1.0;
    }
    for i in 0..n {
        t[m + i][i] = 1.0;
        t[m + i][nv + m + i] = 1.0;
        t[m + i][rhs] = 1.0;
    }
    let mut obj = vec![0.0; width];
    obj[n] = 1.0;
    let mut basis: Vec<usize> = (nv..nv + nc).collect();

    // Bland's rule on both choices guards against cycling on the degenerate
    // origin vertex.
    for _ in 0..10_000 {
        let Some(enter) = (0..nv + nc).find(|&j| obj[j] > PIVOT_TOL) else {
            // The reduced-cost row accumulates -z in its rhs entry.
            return -obj[rhs];
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for r in 0..nc {
            if t[r][enter] > PIVOT_TOL {
                let ratio = t[r][rhs] / t[r][enter];
                if ratio < best - PIVOT_TOL
                    || (ratio < best + PIVOT_TOL
                        && leave.is_some_and(|l| basis[r] < basis[l]))
                {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(lr) = leave else {
            // s is bounded by max_i (A·x)_i over the box, so this is
            // unreachable; treat defensively as "very positive".
            return f64::INFINITY;
        };
        let piv = t[lr][enter];
        for v in t[lr].iter_mut() {
            *v /= piv;
        }
        for r in 0..nc {
            if r != lr && t[r][enter].abs() > 0.0 {
                let f = t[r][enter];
                for j in 0..width {
                    t[r][j] -= f * t[lr][j];
                }
            }
        }
        let f = obj[enter];
        if f.abs() > 0.0 {
            for j in 0..width {
                obj[j] -= f * t[lr][j];
            }
        }
        basis[lr] = enter;
    }
    -obj[rhs]
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn identity_is_s() {
        assert!(is_s_matrix(&DMatrix::identity(3, 3)));
    }

    #[test]
    fn known_negative_case() {
        // Row sum argument: (Ax)_1 + (Ax)_2 = -x1 - x2 ≤ 0.
        let a = dmatrix![1.0, -2.0; -2.0, 1.0];
        assert!(!is_s_matrix(&a));
    }

    #[test]
    fn positive_column_certificate() {
        let a = dmatrix![-5.0, 0.2; -3.0, 1.0; 0.0, 0.7];
        assert!(is_s_matrix(&a));
    }

    #[test]
    fn zero_row_fails() {
        let a = dmatrix![1.0, 0.0; 0.0, 0.0];
        assert!(!is_s_matrix(&a));
    }

    #[test]
    fn empty_matrix_vacuously_true() {
        assert!(is_s_matrix(&DMatrix::zeros(0, 0)));
    }

    #[test]
    fn slack_value_for_identity() {
        // x = 1 gives A·x = 1 exactly; the box caps the optimum at 1.
        assert!((max_positivity_slack(&DMatrix::identity(2, 2)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn balanced_cycle_is_not_s() {
        // Circulant flow structure: every row sums to 0, so summing all rows
        // of A·x > 0 is infeasible.
        let a = dmatrix![
            1.0, 0.0, 0.0, -1.0;
            0.0, 1.0, -1.0, 0.0;
            -1.0, 0.0, 1.0, 0.0;
            0.0, -1.0, 0.0, 1.0
        ];
        assert!(!is_s_matrix(&a));
    }
}
