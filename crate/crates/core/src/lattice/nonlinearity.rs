use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::LatticeState;
use crate::error::{DnlsError, Result};

/// A site-wise gauge-invariant nonlinearity `F(z) = f(|z|²) z`.
///
/// Implementors supply `f` and its derivative; the integrators only need
/// these two to assemble the vector field and its Jacobian.
pub trait Nonlinearity: Send + Sync {
    fn gain(&self, modulus_sq: f64) -> f64;
    fn gain_derivative(&self, modulus_sq: f64) -> f64;

    fn apply(&self, z: Complex64) -> Complex64 {
        z * self.gain(z.norm_sqr())
    }
}

/// `f(s) = s^σ`, i.e. `F(z) = |z|^{2σ} z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub sigma: f64,
}

impl PowerLaw {
    pub fn new(sigma: f64) -> Self {
        PowerLaw { sigma }
    }
}

impl Nonlinearity for PowerLaw {
    fn gain(&self, s: f64) -> f64 {
        if self.sigma == 0.0 {
            1.0
        } else if self.sigma == 1.0 {
            s
        } else {
            s.powf(self.sigma)
        }
    }

    fn gain_derivative(&self, s: f64) -> f64 {
        if self.sigma == 0.0 {
            0.0
        } else if self.sigma == 1.0 {
            1.0
        } else if s == 0.0 {
            if self.sigma > 1.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.sigma * s.powf(self.sigma - 1.0)
        }
    }
}

/// Site-wise `|u_n|^{2σ} u_n`.
pub fn apply_nonlinearity(u: &LatticeState, sigma: f64) -> Result<LatticeState> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(DnlsError::validation("sigma", "must be finite and >= 0"));
    }
    apply_nonlinearity_with(u, &PowerLaw::new(sigma))
}

pub fn apply_nonlinearity_with(u: &LatticeState, f: &dyn Nonlinearity) -> Result<LatticeState> {
    let out: Vec<Complex64> = u.amplitudes().iter().map(|&z| f.apply(z)).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(DnlsError::numerical("nonlinearity overflowed"));
    }
    Ok(LatticeState::from_parts(u.half_width(), out, u.time()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_at_two() {
        let u = LatticeState::single_site(1, 0, Complex64::new(2.0, 0.0)).unwrap();
        let f = apply_nonlinearity(&u, 1.0).unwrap();
        assert_eq!(f.get(0), Complex64::new(8.0, 0.0));
    }

    #[test]
    fn sigma_zero_is_identity() {
        let u = LatticeState::from_fn(3, |n| Complex64::new(n as f64, 0.5)).unwrap();
        assert_eq!(apply_nonlinearity(&u, 0.0).unwrap(), u);
    }

    #[test]
    fn overflow_is_a_numerical_error() {
        let u = LatticeState::single_site(1, 0, Complex64::new(1e200, 0.0)).unwrap();
        let err = apply_nonlinearity(&u, 1.0).unwrap_err();
        assert!(matches!(err, DnlsError::Numerical { .. }));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for sigma in [0.5, 1.0, 2.0, 3.0] {
            let f = PowerLaw::new(sigma);
            let s = 0.7;
            let h = 1e-6;
            let fd = (f.gain(s + h) - f.gain(s - h)) / (2.0 * h);
            assert!((fd - f.gain_derivative(s)).abs() < 1e-8, "sigma {sigma}");
        }
    }

    #[test]
    fn custom_nonlinearity_plugs_in() {
        struct Saturable;
        impl Nonlinearity for Saturable {
            fn gain(&self, s: f64) -> f64 {
                s / (1.0 + s)
            }
            fn gain_derivative(&self, s: f64) -> f64 {
                1.0 / ((1.0 + s) * (1.0 + s))
            }
        }
        let u = LatticeState::single_site(1, 0, Complex64::new(1.0, 0.0)).unwrap();
        let f = apply_nonlinearity_with(&u, &Saturable).unwrap();
        assert_eq!(f.get(0), Complex64::new(0.5, 0.0));
    }
}
