use num_complex::Complex64;

use super::{forward_diff_into, LatticeState};
use crate::error::{DnlsError, Result};

/// Real scalar product `(u, v) = Re Σ u_n conj(v_n)`.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| a.re * b.re + a.im * b.im)
        .sum()
}

/// The ℓᵖ norm for `p ∈ [1, ∞]`.
pub fn norm(u: &LatticeState, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(DnlsError::validation("p", format!("{p} is not in [1, ∞]")));
    }
    let amps = u.amplitudes();
    if p.is_infinite() {
        return Ok(amps.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    if p == 2.0 {
        return Ok(amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    // Scale by the sup norm so large p does not overflow.
    let sup = amps.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if sup == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = amps.iter().map(|z| (z.norm() / sup).powf(p)).sum();
    Ok(sup * sum.powf(1.0 / p))
}

/// `‖Bu‖²` over all of ℤ for the zero extension of `u`. Besides the box
/// values of `Bu` this picks up the edge difference `u_{-m} - u_{-m-1} = u_{-m}`,
/// which makes `(Au, u) = -‖Bu‖²` exact.
pub(crate) fn grad_sq(u: &[Complex64], scratch: &mut [Complex64]) -> f64 {
    forward_diff_into(u, scratch);
    let edge = u.first().map_or(0.0, |z| z.norm_sqr());
    edge + scratch.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

pub(crate) fn l21_sq_slice(u: &[Complex64], scratch: &mut [Complex64]) -> f64 {
    grad_sq(u, scratch) + u.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// `‖u‖_{ℓ²₁} = (‖Bu‖² + ‖u‖²)^{1/2}`, with `‖Bu‖` taken over ℤ.
pub fn norm_l21(u: &LatticeState) -> f64 {
    let mut scratch = vec![Complex64::new(0.0, 0.0); u.len()];
    l21_sq_slice(u.amplitudes(), &mut scratch).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_norms() {
        let u = LatticeState::single_site(3, 0, Complex64::new(1.0, 1.0)).unwrap();
        assert!((norm(&u, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((norm(&u, f64::INFINITY).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((norm(&u, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let one = LatticeState::single_site(3, 0, Complex64::new(1.0, 0.0)).unwrap();
        assert!((norm_l21(&one) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_state_has_zero_norms() {
        let u = LatticeState::zeros(4);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_eq!(norm(&u, p).unwrap(), 0.0);
        }
        assert_eq!(norm_l21(&u), 0.0);
    }

    #[test]
    fn edge_site_counts_both_differences() {
        let u = LatticeState::single_site(2, -2, Complex64::new(1.0, 0.0)).unwrap();
        assert!((norm_l21(&u) - 3f64.sqrt()).abs() < 1e-15);
        let v = LatticeState::single_site(2, 2, Complex64::new(1.0, 0.0)).unwrap();
        assert!((norm_l21(&v) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_p_below_one() {
        let u = LatticeState::zeros(1);
        assert!(norm(&u, 0.5).unwrap_err().is_validation());
        assert!(norm(&u, f64::NAN).is_err());
    }

    #[test]
    fn large_p_does_not_overflow() {
        let u = LatticeState::from_fn(2, |_| Complex64::new(1e200, 0.0)).unwrap();
        let n = norm(&u, 4.0).unwrap();
        assert!(n.is_finite());
        assert!((n / (1e200 * 5f64.powf(0.25)) - 1.0).abs() < 1e-12);
    }
}
