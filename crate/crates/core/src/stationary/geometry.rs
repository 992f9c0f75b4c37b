use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contraction::check_omega;
use crate::error::{DnlsError, Result};
use crate::lattice::{grad_sq, stationary_energy_coupled, LatticeState};
use crate::random::{complex_gaussian, stream_rng};

/// Rim and ray checks of the mountain-pass geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    /// Rim radius in the `‖·‖_{ℓ²_ε}` norm.
    pub r: f64,
    /// `1 / min{1/ε, ω}`
    pub kappa1: f64,
    /// `r²(1/2 - κ₁^{2σ+2} r^{2σ} / (2σ+2))`
    pub alpha: f64,
    /// `((σ+1)/κ₁^{2σ+2})^{1/(2σ)}`
    pub r_max: f64,
    pub rim_min_sampled: f64,
    pub rim_bound_holds: bool,
    /// A `t` with `𝐄(t·e) < 0` on the ray through the unit-rim profile `e`.
    pub ray_negative_t: f64,
    pub ray_energy: f64,
    pub n_samples: usize,
    pub half_width: usize,
    pub seed: u64,
}

/// `‖φ‖²_{ℓ²_ε} = (1/ε)‖Bφ‖² + ω²‖φ‖²`.
pub fn epsilon_norm_sq(phi: &LatticeState, epsilon: f64, omega: f64) -> f64 {
    eps_norm_sq(phi.amplitudes(), 1.0 / epsilon, omega)
}

fn eps_norm_sq(phi: &[Complex64], coupling: f64, omega: f64) -> f64 {
    let mut b = vec![Complex64::new(0.0, 0.0); phi.len()];
    let grad = grad_sq(phi, &mut b);
    let mass: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
    coupling * grad + omega * omega * mass
}

fn scaled_to(phi: &mut [Complex64], coupling: f64, omega: f64, radius: f64) {
    let s = radius / eps_norm_sq(phi, coupling, omega).sqrt();
    for z in phi {
        *z *= s;
    }
}

/// Samples `n_samples` Gaussian profiles on the rim `‖φ‖_{ℓ²_ε} = r` and
/// searches the ray through the centred unit-rim profile for negative energy.
#[allow(clippy::too_many_arguments)]
pub fn mountain_pass_geometry(
    r: f64,
    epsilon: f64,
    omega: f64,
    sigma: f64,
    n_samples: usize,
    seed: u64,
    half_width: usize,
) -> Result<GeometryReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(DnlsError::validation("epsilon", "must be finite and > 0"));
    }
    check_omega(omega)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(DnlsError::validation("sigma", "must be finite and > 0"));
    }
    if n_samples < 1000 {
        return Err(DnlsError::validation("n_samples", "must be >= 1000"));
    }
    let coupling = 1.0 / epsilon;
    let kappa1 = 1.0 / coupling.min(omega.abs());
    let p = 2.0 * sigma + 2.0;
    let r_max = ((sigma + 1.0) / kappa1.powf(p)).powf(1.0 / (2.0 * sigma));
    if !(r > 0.0 && r < r_max) {
        return Err(DnlsError::validation(
            "r",
            format!("rim radius must lie in (0, {r_max})"),
        ));
    }
    let alpha = r * r * (0.5 - kappa1.powf(p) * r.powf(2.0 * sigma) / p);

    let len = 2 * half_width + 1;
    let rim_min_sampled = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let mut phi = complex_gaussian(&mut rng, len);
            scaled_to(&mut phi, coupling, omega, r);
            stationary_energy_coupled(&phi, coupling, omega, sigma)
        })
        .reduce(|| f64::INFINITY, f64::min);

    let mut e = vec![Complex64::new(0.0, 0.0); len];
    e[half_width] = Complex64::new(1.0, 0.0);
    scaled_to(&mut e, coupling, omega, 1.0);
    let energy_at = |t: f64| {
        let phi: Vec<Complex64> = e.iter().map(|z| z * t).collect();
        stationary_energy_coupled(&phi, coupling, omega, sigma)
    };
    let mut hi = 1.0;
    while energy_at(hi) >= 0.0 {
        hi *= 2.0;
        if hi > 1e150 {
            return Err(DnlsError::numerical("no negative energy found along the ray"));
        }
    }
    let mut lo = hi / 2.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if energy_at(mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    Ok(GeometryReport {
        r,
        kappa1,
        alpha,
        r_max,
        rim_min_sampled,
        rim_bound_holds: rim_min_sampled >= alpha,
        ray_negative_t: hi,
        ray_energy: energy_at(hi),
        n_samples,
        half_width,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_parameters() {
        let g = mountain_pass_geometry(1.0, 1.0, 1.0, 1.0, 1000, 1, 10).unwrap();
        assert_eq!(g.kappa1, 1.0);
        assert!((g.r_max - 2f64.sqrt()).abs() < 1e-15);
        assert!((g.alpha - 0.25).abs() < 1e-15);
        assert!(g.rim_bound_holds);
        assert!(g.ray_energy < 0.0);
        // 𝐄(te) = t²/2 - t⁴/36 for the unit-rim single site, negative past √18.
        assert!((g.ray_negative_t - 18f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rejects_large_rim() {
        let err = mountain_pass_geometry(1.5, 1.0, 1.0, 1.0, 1000, 1, 5).unwrap_err();
        assert!(err.is_validation());
        assert!(mountain_pass_geometry(1.0, 1.0, 1.0, 1.0, 999, 1, 5).is_err());
    }

    #[test]
    fn epsilon_norm_of_single_site() {
        let u = LatticeState::single_site(3, 0, Complex64::new(1.0, 0.0)).unwrap();
        assert!((epsilon_norm_sq(&u, 0.5, 2.0) - (4.0 + 4.0)).abs() < 1e-15);
    }
}
