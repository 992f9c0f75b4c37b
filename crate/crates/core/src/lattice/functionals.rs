use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::norms::{grad_sq, inner, l21_sq_slice};
use super::{laplacian_into, LatticeState, ModelParams};
use crate::error::{DnlsError, Result};

/// `Σ |u_n|^{2σ+2}`.
pub(crate) fn power_sum(u: &[Complex64], sigma: f64) -> f64 {
    u.iter().map(|z| z.norm_sqr().powf(sigma + 1.0)).sum()
}

/// `‖u‖²_{ℓ²}`.
pub fn charge(u: &LatticeState) -> f64 {
    u.amplitudes().iter().map(|z| z.norm_sqr()).sum()
}

/// `‖u‖²_{ℓ²₁} = ‖Bu‖² + ‖u‖²`.
pub fn l21_norm_sq(u: &LatticeState) -> f64 {
    let mut scratch = vec![Complex64::new(0.0, 0.0); u.len()];
    l21_sq_slice(u.amplitudes(), &mut scratch)
}

/// Conserved energy of the undamped, unforced lattice:
/// `E(u) = (1/ε)‖u‖²_{ℓ²₁} - (1/(σ+1))‖u‖^{2σ+2}_{ℓ^{2σ+2}}`.
pub fn hamiltonian_energy(u: &LatticeState, params: &ModelParams) -> Result<f64> {
    params.check_state(u)?;
    let sigma = params.sigma();
    let e = l21_norm_sq(u) / params.epsilon() - power_sum(u.amplitudes(), sigma) / (sigma + 1.0);
    if !e.is_finite() {
        return Err(DnlsError::numerical("energy overflowed"));
    }
    Ok(e)
}

pub(crate) fn stationary_energy_coupled(
    phi: &[Complex64],
    coupling: f64,
    omega: f64,
    sigma: f64,
) -> f64 {
    let mut b = vec![Complex64::new(0.0, 0.0); phi.len()];
    let grad_sq = grad_sq(phi, &mut b);
    let mass: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
    0.5 * coupling * grad_sq + 0.5 * omega * omega * mass
        - power_sum(phi, sigma) / (2.0 * sigma + 2.0)
}

/// Energy whose critical points are standing-wave profiles:
/// `𝐄(φ) = (1/2ε)‖Bφ‖² + (ω²/2)‖φ‖² - (1/(2σ+2)) Σ |φ_n|^{2σ+2}`.
pub fn stationary_energy(phi: &LatticeState, epsilon: f64, omega: f64, sigma: f64) -> f64 {
    assert!(epsilon > 0.0, "epsilon must be positive");
    stationary_energy_coupled(phi.amplitudes(), 1.0 / epsilon, omega, sigma)
}

pub(crate) fn stationary_gradient_coupled(
    phi: &[Complex64],
    coupling: f64,
    omega: f64,
    sigma: f64,
    out: &mut [Complex64],
) {
    laplacian_into(phi, out);
    let w2 = omega * omega;
    for (g, &z) in out.iter_mut().zip(phi) {
        let s = z.norm_sqr();
        let nl = if sigma == 1.0 { s } else { s.powf(sigma) };
        *g = -coupling * *g + z * (w2 - nl);
    }
}

/// ℓ² representer of the derivative of [`stationary_energy`]:
/// `-(1/ε)Aφ + ω²φ - |φ|^{2σ}φ`.
pub fn stationary_gradient(
    phi: &LatticeState,
    epsilon: f64,
    omega: f64,
    sigma: f64,
) -> LatticeState {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let mut out = vec![Complex64::new(0.0, 0.0); phi.len()];
    stationary_gradient_coupled(phi.amplitudes(), 1.0 / epsilon, omega, sigma, &mut out);
    LatticeState::from_parts(phi.half_width(), out, phi.time())
}

/// The pair `(J(u), Λ(u))` of the dissipative energy balance
/// `½ dJ/dt + δJ = Λ`, with
///
/// ```text
/// J(u) = ‖u‖²_{ℓ²₁} - ε [ (1/(σ+1)) ‖u‖^{2σ+2}_{2σ+2} - 2(g,u) ]
/// Λ(u) = εδ [ (σ/(σ+1)) ‖u‖^{2σ+2}_{2σ+2} + (g,u) ] + Im Σ conj(u_n) g_n
/// ```
pub fn j_lambda(u: &LatticeState, params: &ModelParams) -> (f64, f64) {
    let mut scratch = vec![Complex64::new(0.0, 0.0); u.len()];
    j_lambda_slice(u.amplitudes(), params, &mut scratch)
}

pub(crate) fn j_lambda_slice(
    u: &[Complex64],
    params: &ModelParams,
    scratch: &mut [Complex64],
) -> (f64, f64) {
    let eps = params.epsilon();
    let sigma = params.sigma();
    let g = params.forcing();
    let p = power_sum(u, sigma);
    let gu = inner(g, u);
    let im_ug: f64 = u.iter().zip(g).map(|(a, b)| (a.conj() * b).im).sum();
    let j = l21_sq_slice(u, scratch) - eps * (p / (sigma + 1.0) - 2.0 * gu);
    let lambda = eps * params.delta() * (sigma / (sigma + 1.0) * p + gu) + im_ug;
    (j, lambda)
}

/// All scalar functionals of a state at once.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub charge: f64,
    pub energy: f64,
    pub l21_norm_sq: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
}

impl FunctionalReport {
    pub fn evaluate(u: &LatticeState, params: &ModelParams) -> Result<Self> {
        let energy = hamiltonian_energy(u, params)?;
        let (j, lambda) = j_lambda(u, params);
        Ok(FunctionalReport {
            charge: charge(u),
            energy,
            l21_norm_sq: l21_norm_sq(u),
            j,
            lambda,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit(m: usize) -> LatticeState {
        LatticeState::single_site(m, 0, c(1.0, 0.0)).unwrap()
    }

    #[test]
    fn charge_examples() {
        let u = LatticeState::single_site(2, 0, c(1.0, 1.0)).unwrap();
        assert_eq!(charge(&u), 2.0);
        assert_eq!(charge(&u.scaled(c(2.0, 0.0))), 8.0);
    }

    #[test]
    fn hamiltonian_energy_of_unit_mass() {
        let p = ModelParams::unforced(1.0, 0.0, 1.0, 3).unwrap();
        assert!((hamiltonian_energy(&unit(3), &p).unwrap() - 2.5).abs() < 1e-15);
        assert_eq!(hamiltonian_energy(&LatticeState::zeros(3), &p).unwrap(), 0.0);
    }

    #[test]
    fn hamiltonian_energy_rejects_mismatched_box() {
        let p = ModelParams::unforced(1.0, 0.0, 1.0, 3).unwrap();
        assert!(hamiltonian_energy(&unit(2), &p).is_err());
    }

    #[test]
    fn stationary_energy_examples() {
        assert!((stationary_energy(&unit(3), 1.0, 1.0, 1.0) - 1.25).abs() < 1e-15);
        assert_eq!(stationary_energy(&LatticeState::zeros(3), 1.0, 1.0, 1.0), 0.0);
        // Far along a ray the quartic term wins.
        let far = unit(3).scaled(c(10.0, 0.0));
        assert!(stationary_energy(&far, 1.0, 1.0, 1.0) < 0.0);
    }

    #[test]
    fn stationary_gradient_of_unit_mass() {
        let g = stationary_gradient(&unit(3), 1.0, 1.0, 1.0);
        let re: Vec<f64> = g.amplitudes().iter().map(|z| z.re).collect();
        assert_eq!(re, vec![0.0, 0.0, -1.0, 2.0, -1.0, 0.0, 0.0]);
        assert!(stationary_gradient(&LatticeState::zeros(3), 1.0, 1.0, 1.0).is_zero());
    }

    #[test]
    fn j_lambda_vanish_without_forcing_or_state() {
        let p = ModelParams::unforced(1.0, 0.3, 1.0, 3).unwrap();
        assert_eq!(j_lambda(&LatticeState::zeros(3), &p), (0.0, 0.0));
        let conservative = ModelParams::unforced(2.0, 0.0, 1.5, 3).unwrap();
        let u = LatticeState::from_fn(3, |n| c(0.3 * n as f64, 0.2)).unwrap();
        assert_eq!(j_lambda(&u, &conservative).1, 0.0);
    }

    #[test]
    fn j_includes_forcing_pairing() {
        let mut g = vec![c(0.0, 0.0); 3];
        g[1] = c(0.0, 1.0);
        let p = ModelParams::new(1.0, 0.5, 1.0, g, 1).unwrap();
        let u = LatticeState::single_site(1, 0, c(1.0, 0.0)).unwrap();
        let (j, lambda) = j_lambda(&u, &p);
        // (g,u) = Re(i * 1) = 0, Im(conj(u) g) = 1
        assert!((j - (3.0 - 0.5)).abs() < 1e-15);
        assert!((lambda - (0.5 * 0.5 * 1.0 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn report_is_consistent() {
        let p = ModelParams::unforced(1.0, 0.0, 1.0, 4).unwrap();
        let u = LatticeState::from_fn(4, |n| c((-(n * n) as f64).exp(), 0.1)).unwrap();
        let r = FunctionalReport::evaluate(&u, &p).unwrap();
        assert!(r.l21_norm_sq >= r.charge);
        assert_eq!(r.charge, charge(&u));
    }
}
