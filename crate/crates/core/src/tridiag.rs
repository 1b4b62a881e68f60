//! Tridiagonal solves used by the implicit flow step, Newton, and inverse
//! iteration.

/// Solves `A x = rhs` for tridiagonal `A` with sub-diagonal `lower`
/// (`lower[i] = A[i+1][i]`), diagonal `diag` and super-diagonal `upper`
/// (`upper[i] = A[i][i+1]`), using Gaussian elimination with partial
/// pivoting.
///
/// Returns the index of the first zero pivot on failure.
pub fn solve_pivoted(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>, usize> {
    let n = diag.len();
    debug_assert_eq!(rhs.len(), n);
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        if diag[0] == 0.0 {
            return Err(0);
        }
        return Ok(vec![rhs[0] / diag[0]]);
    }
    // Row i of U holds u0[i] (diagonal), u1[i], u2[i] (fill-in from pivoting).
    let mut u0 = diag.to_vec();
    let mut u1 = upper.to_vec();
    u1.push(0.0);
    let mut u2 = vec![0.0; n];
    let mut sub = lower.to_vec();
    let mut b = rhs.to_vec();

    for i in 0..n - 1 {
        if sub[i].abs() > u0[i].abs() {
            // Swap rows i and i + 1.
            let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
            u0[i] = sub[i];
            u1[i] = u0[i + 1];
            u2[i] = u1[i + 1];
            b.swap(i, i + 1);
            let factor = a0 / u0[i];
            u0[i + 1] = a1 - factor * u1[i];
            u1[i + 1] = a2 - factor * u2[i];
            b[i + 1] -= factor * b[i];
            sub[i] = factor;
        } else {
            if u0[i] == 0.0 {
                return Err(i);
            }
            let factor = sub[i] / u0[i];
            u0[i + 1] -= factor * u1[i];
            b[i + 1] -= factor * b[i];
            if i + 1 < n - 1 {
                u1[i + 1] -= factor * u2[i];
            }
            sub[i] = factor;
        }
    }
    if u0[n - 1] == 0.0 {
        return Err(n - 1);
    }
    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / u0[n - 1];
    x[n - 2] = (b[n - 2] - u1[n - 2] * x[n - 1]) / u0[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (b[i] - u1[i] * x[i + 1] - u2[i] * x[i + 2]) / u0[i];
    }
    Ok(x)
}

/// Thomas algorithm without pivoting; valid for diagonally dominant systems.
pub fn solve_thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { upper[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = upper[i] / denom;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn multiply(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let lower = [1.0, 1.0];
        let diag = [0.0, 0.0, 1.0];
        let upper = [1.0, 1.0];
        let x_true = [1.0, -2.0, 3.0];
        let rhs = multiply(&lower, &diag, &upper, &x_true);
        let x = solve_pivoted(&lower, &diag, &upper, &rhs).unwrap();
        for (a, b) in x.iter().zip(x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_reported() {
        let r = solve_pivoted(&[0.0], &[1.0, 0.0], &[0.0], &[1.0, 1.0]);
        assert_eq!(r, Err(1));
    }

    proptest! {
        #[test]
        fn solves_random_systems(
            seed in proptest::collection::vec(-1.0f64..1.0, 3 * 12),
            n in 2usize..12,
        ) {
            let lower: Vec<f64> = seed[..n - 1].to_vec();
            let upper: Vec<f64> = seed[12..12 + n - 1].to_vec();
            let diag: Vec<f64> = seed[24..24 + n].iter().map(|d| d + 3.0).collect();
            let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
            let rhs = multiply(&lower, &diag, &upper, &x_true);
            let x = solve_pivoted(&lower, &diag, &upper, &rhs).unwrap();
            let y = solve_thomas(&lower, &diag, &upper, &rhs);
            for i in 0..n {
                prop_assert!((x[i] - x_true[i]).abs() < 1e-10);
                prop_assert!((y[i] - x_true[i]).abs() < 1e-10);
            }
        }
    }
}
