//! Tridiagonal elimination (Thomas algorithm) with real coefficients, and a
//! 2×2 block variant used by the Newton fallback of the midpoint integrator.

use std::ops::{Div, Mul, Sub};

use crate::error::{DnlsError, Result};

const PIVOT_FLOOR: f64 = 1e-300;

/// Solves `lower[i-1] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` in place.
///
/// `lower` and `upper` have length `n - 1`. No pivoting: meant for diagonally
/// dominant or symmetric positive-definite systems, and for Newton Jacobians
/// that are regular at the iterate.
pub fn solve<T>(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [T]) -> Result<()>
where
    T: Copy + Sub<Output = T> + Mul<f64, Output = T> + Div<f64, Output = T>,
{
    let n = diag.len();
    assert_eq!(rhs.len(), n);
    if n == 0 {
        return Ok(());
    }
    assert_eq!(lower.len(), n - 1);
    assert_eq!(upper.len(), n - 1);

    let mut c_prime = vec![0.0; n.saturating_sub(1)];
    let mut pivot = diag[0];
    if pivot.abs() < PIVOT_FLOOR {
        return Err(DnlsError::numerical("zero pivot in tridiagonal solve"));
    }
    if n > 1 {
        c_prime[0] = upper[0] / pivot;
    }
    rhs[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c_prime[i - 1];
        if pivot.abs() < PIVOT_FLOOR || !pivot.is_finite() {
            return Err(DnlsError::numerical("zero pivot in tridiagonal solve"));
        }
        if i < n - 1 {
            c_prime[i] = upper[i] / pivot;
        }
        rhs[i] = (rhs[i] - rhs[i - 1] * lower[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - rhs[i + 1] * c_prime[i];
    }
    Ok(())
}

pub type Mat2 = [[f64; 2]; 2];
pub type Vec2 = [f64; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mat_vec(a: &Mat2, v: &Vec2) -> Vec2 {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

fn inverse(a: &Mat2) -> Option<Mat2> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() < PIVOT_FLOOR || !det.is_finite() {
        return None;
    }
    Some([
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ])
}

/// Block Thomas elimination with 2×2 blocks; `lower`/`upper` have length `n - 1`.
pub fn solve_block(lower: &[Mat2], diag: &[Mat2], upper: &[Mat2], rhs: &mut [Vec2]) -> Result<()> {
    let n = diag.len();
    assert_eq!(rhs.len(), n);
    if n == 0 {
        return Ok(());
    }
    let singular = || DnlsError::numerical("singular block in block-tridiagonal solve");
    let mut c_prime: Vec<Mat2> = Vec::with_capacity(n.saturating_sub(1));
    let mut inv = inverse(&diag[0]).ok_or_else(singular)?;
    if n > 1 {
        c_prime.push(mat_mul(&inv, &upper[0]));
    }
    rhs[0] = mat_vec(&inv, &rhs[0]);
    for i in 1..n {
        let pivot = mat_sub(&diag[i], &mat_mul(&lower[i - 1], &c_prime[i - 1]));
        inv = inverse(&pivot).ok_or_else(singular)?;
        if i < n - 1 {
            c_prime.push(mat_mul(&inv, &upper[i]));
        }
        let l = mat_vec(&lower[i - 1], &rhs[i - 1]);
        rhs[i] = mat_vec(&inv, &[rhs[i][0] - l[0], rhs[i][1] - l[1]]);
    }
    for i in (0..n - 1).rev() {
        let c = mat_vec(&c_prime[i], &rhs[i + 1]);
        rhs[i] = [rhs[i][0] - c[0], rhs[i][1] - c[1]];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn three_by_three_hand_solution() {
        // tridiag(-1, 3, -1) x = e_1  =>  x = (1/7, 3/7, 1/7)
        let mut rhs = vec![0.0, 1.0, 0.0];
        solve(&[-1.0, -1.0], &[3.0, 3.0, 3.0], &[-1.0, -1.0], &mut rhs).unwrap();
        let expected = [1.0 / 7.0, 3.0 / 7.0, 1.0 / 7.0];
        for (x, e) in rhs.iter().zip(expected) {
            assert!((x - e).abs() < 1e-15);
        }
    }

    #[test]
    fn complex_rhs_solves_real_and_imaginary_parts() {
        let mut rhs = vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(3.0, 0.5),
            Complex64::new(-2.0, 1.0),
        ];
        let original = rhs.clone();
        let (lo, d, up) = ([1.0, -0.5, 2.0], [4.0, 5.0, 6.0, 7.0], [0.5, 1.0, -1.0]);
        solve(&lo, &d, &up, &mut rhs).unwrap();
        for i in 0..4 {
            let mut ax = rhs[i] * d[i];
            if i > 0 {
                ax += rhs[i - 1] * lo[i - 1];
            }
            if i < 3 {
                ax += rhs[i + 1] * up[i];
            }
            assert!((ax - original[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_pivot_is_reported() {
        let mut rhs = vec![1.0, 1.0];
        assert!(solve(&[1.0], &[0.0, 1.0], &[1.0], &mut rhs).is_err());
    }

    #[test]
    fn block_solver_matches_dense_product() {
        let diag = vec![[[4.0, 1.0], [-1.0, 3.0]], [[5.0, 0.5], [0.2, 4.0]], [[3.0, -1.0], [1.0, 6.0]]];
        let lower = vec![[[0.5, 0.0], [0.1, -0.3]], [[1.0, 0.2], [0.0, 0.4]]];
        let upper = vec![[[0.0, -1.0], [1.0, 0.0]], [[0.3, 0.0], [0.0, 0.3]]];
        let b = vec![[1.0, 2.0], [-1.0, 0.5], [3.0, -2.0]];
        let mut x = b.clone();
        solve_block(&lower, &diag, &upper, &mut x).unwrap();
        for i in 0..3 {
            let mut ax = mat_vec(&diag[i], &x[i]);
            if i > 0 {
                let l = mat_vec(&lower[i - 1], &x[i - 1]);
                ax = [ax[0] + l[0], ax[1] + l[1]];
            }
            if i < 2 {
                let u = mat_vec(&upper[i], &x[i + 1]);
                ax = [ax[0] + u[0], ax[1] + u[1]];
            }
            assert!((ax[0] - b[i][0]).abs() < 1e-13 && (ax[1] - b[i][1]).abs() < 1e-13);
        }
    }

    proptest::proptest! {
        #[test]
        fn dominant_systems_round_trip(
            rows in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -5.0..5.0f64), 1..40),
        ) {
            let n = rows.len();
            let lower: Vec<f64> = rows[1..].iter().map(|r| r.0).collect();
            let upper: Vec<f64> = rows[..n - 1].iter().map(|r| r.1).collect();
            let diag: Vec<f64> = rows.iter().map(|r| 2.5 + r.2.abs()).collect();
            let b: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let mut x = b.clone();
            solve(&lower, &diag, &upper, &mut x).unwrap();
            for i in 0..n {
                let mut ax = diag[i] * x[i];
                if i > 0 {
                    ax += lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    ax += upper[i] * x[i + 1];
                }
                proptest::prop_assert!((ax - b[i]).abs() <= 1e-12 * (1.0 + b[i].abs()));
            }
        }
    }
}
