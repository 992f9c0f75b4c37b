use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};
use crate::lattice::{apply_nonlinearity, laplacian_into, LatticeState};
use crate::random::{in_ball, on_sphere, stream_rng};
use crate::tridiag;

/// `E_c(ω, σ) = (ω⁴/4)^{1/(4σ)}`.
pub fn critical_energy(omega: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(DnlsError::validation("sigma", "critical energy needs sigma > 0"));
    }
    check_omega(omega)?;
    Ok((omega.powi(4) / 4.0).powf(1.0 / (4.0 * sigma)))
}

pub(crate) fn check_omega(omega: f64) -> Result<()> {
    if omega == 0.0 || !omega.is_finite() {
        return Err(DnlsError::validation("omega", "must be finite and nonzero"));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(DnlsError::validation("epsilon", "must be finite and > 0"));
    }
    Ok(())
}

fn apply_a_omega(phi: &[Complex64], coupling: f64, w2: f64, out: &mut [Complex64]) {
    laplacian_into(phi, out);
    for (o, &p) in out.iter_mut().zip(phi) {
        *o = -coupling * *o + p * w2;
    }
}

fn l2(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `-(1/ε)Aφ + ω²φ = rhs` with Dirichlet ends.
pub fn solve_a_omega(rhs: &LatticeState, epsilon: f64, omega: f64) -> Result<LatticeState> {
    check_epsilon(epsilon)?;
    check_omega(omega)?;
    let c = 1.0 / epsilon;
    let w2 = omega * omega;
    let n = rhs.len();
    let off = vec![-c; n.saturating_sub(1)];
    let diag = vec![2.0 * c + w2; n];
    let b = rhs.amplitudes();
    let mut phi = b.to_vec();
    tridiag::solve(&off, &diag, &off, &mut phi)?;

    let target = 1e-12 * l2(b);
    let mut r = vec![Complex64::new(0.0, 0.0); n];
    let residual = |phi: &[Complex64], r: &mut [Complex64]| {
        apply_a_omega(phi, c, w2, r);
        for (ri, &bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        l2(r)
    };
    let mut res = residual(&phi, &mut r);
    if res > target {
        // one step of iterative refinement
        tridiag::solve(&off, &diag, &off, &mut r)?;
        for (p, d) in phi.iter_mut().zip(&r) {
            *p += d;
        }
        res = residual(&phi, &mut r);
    }
    if res > target {
        return Err(DnlsError::Numerical {
            reason: "A_omega solve failed its residual check".into(),
            time: None,
            residual: Some(res),
        });
    }
    Ok(LatticeState::from_parts(rhs.half_width(), phi, rhs.time()))
}

/// `𝒫(z) = A_ω^{-1}(|z|^{2σ} z)`.
pub fn fixed_point_map(z: &LatticeState, epsilon: f64, omega: f64, sigma: f64) -> Result<LatticeState> {
    let f = apply_nonlinearity(z, sigma)?;
    solve_a_omega(&f, epsilon, omega)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationOutcome {
    pub converged: bool,
    pub iterations: usize,
    pub final_norm: f64,
}

/// Iterates `𝒫` from `z0` until `‖z‖ ≤ tol` or `max_iter` applications.
pub fn iterate_to_zero(
    z0: &LatticeState,
    epsilon: f64,
    omega: f64,
    sigma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<IterationOutcome> {
    let mut z = z0.clone();
    let mut norm = l2(z.amplitudes());
    let mut iterations = 0;
    while norm > tol && iterations < max_iter {
        z = fixed_point_map(&z, epsilon, omega, sigma)?;
        norm = l2(z.amplitudes());
        iterations += 1;
    }
    Ok(IterationOutcome { converged: norm <= tol, iterations, final_norm: norm })
}

/// Empirical Lipschitz constant of `𝒫` on the ball `B_R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub radius: f64,
    pub ec: f64,
    /// `(2/ω²) R^{2σ}`
    pub lipschitz_bound: f64,
    pub empirical_ratio_max: f64,
    /// `empirical_ratio_max ≤ lipschitz_bound·(1 + 1e-9)`
    pub within_bound: bool,
    pub converged_to_zero: bool,
    pub iterations: usize,
    pub final_norm: f64,
    pub n_pairs: usize,
    pub half_width: usize,
    pub seed: u64,
    pub sampling: String,
}

/// Probe tolerance and iteration cap for the convergence-to-zero check.
const ZERO_TOL: f64 = 1e-12;
const ZERO_MAX_ITER: usize = 200;

/// Samples `n_pairs` pairs in `B_R` and records the largest
/// `‖𝒫z - 𝒫ξ‖ / ‖z - ξ‖`; then iterates `𝒫` from a random point of the
/// sphere `‖z‖ = R`.
#[allow(clippy::too_many_arguments)]
pub fn contraction_probe(
    radius: f64,
    epsilon: f64,
    omega: f64,
    sigma: f64,
    n_pairs: usize,
    seed: u64,
    half_width: usize,
) -> Result<ContractionReport> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(DnlsError::validation("R", "must be finite and > 0"));
    }
    if n_pairs < 100 {
        return Err(DnlsError::validation("n_pairs", "must be >= 100"));
    }
    check_epsilon(epsilon)?;
    let ec = critical_energy(omega, sigma)?;
    let lipschitz_bound = 2.0 / (omega * omega) * radius.powf(2.0 * sigma);

    let ratios: Vec<Result<f64>> = (0..n_pairs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let z = in_ball(&mut rng, half_width, radius);
            let xi = in_ball(&mut rng, half_width, radius);
            let dz = l2(z.sub(&xi)?.amplitudes());
            if dz == 0.0 {
                return Ok(0.0);
            }
            let pz = fixed_point_map(&z, epsilon, omega, sigma)?;
            let pxi = fixed_point_map(&xi, epsilon, omega, sigma)?;
            Ok(l2(pz.sub(&pxi)?.amplitudes()) / dz)
        })
        .collect();
    let mut empirical_ratio_max: f64 = 0.0;
    for r in ratios {
        empirical_ratio_max = empirical_ratio_max.max(r?);
    }

    let mut rng = stream_rng(seed, n_pairs as u64);
    let start = on_sphere(&mut rng, half_width, radius);
    let it = iterate_to_zero(&start, epsilon, omega, sigma, ZERO_TOL, ZERO_MAX_ITER)?;

    Ok(ContractionReport {
        radius,
        ec,
        lipschitz_bound,
        empirical_ratio_max,
        within_bound: empirical_ratio_max <= lipschitz_bound * (1.0 + 1e-9),
        converged_to_zero: it.converged,
        iterations: it.iterations,
        final_norm: it.final_norm,
        n_pairs,
        half_width,
        seed,
        sampling: format!(
            "pairs: complex Gaussian direction times R*v^(1/{}) with v uniform, ChaCha8 stream i of seed; \
             iteration start: Gaussian direction on the sphere of radius R, stream {n_pairs}",
            2 * (2 * half_width + 1)
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::inner;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn critical_energy_values() {
        for sigma in [0.5, 1.0, 2.0, 3.0] {
            assert!((critical_energy(2f64.sqrt(), sigma).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((critical_energy(1.0, 1.0).unwrap() - 0.70711).abs() < 1e-5);
        assert!(critical_energy(2.0, 1.0).unwrap() > critical_energy(1.0, 1.0).unwrap());
        assert!(critical_energy(1.0, 0.0).unwrap_err().is_validation());
    }

    #[test]
    fn three_site_solve() {
        let rhs = LatticeState::single_site(1, 0, c(1.0)).unwrap();
        let phi = solve_a_omega(&rhs, 1.0, 1.0).unwrap();
        let expect = [1.0 / 7.0, 3.0 / 7.0, 1.0 / 7.0];
        for (z, e) in phi.amplitudes().iter().zip(expect) {
            assert!((z.re - e).abs() < 1e-15 && z.im == 0.0);
        }
        assert!(solve_a_omega(&LatticeState::zeros(4), 1.0, 1.0).unwrap().is_zero());
    }

    #[test]
    fn fixed_point_map_basics() {
        assert!(fixed_point_map(&LatticeState::zeros(5), 1.0, 1.0, 1.0).unwrap().is_zero());
        let z = LatticeState::from_fn(5, |n| Complex64::new(0.3 / (1.0 + n.abs() as f64), 0.1)).unwrap();
        let pz = fixed_point_map(&z, 1.0, 1.0, 1.0).unwrap();
        let nz = l2(z.amplitudes());
        assert!(l2(pz.amplitudes()) <= nz.powi(3) + 1e-15);
        // A_ω 𝒫(z) = F(z)
        let mut out = vec![c(0.0); pz.len()];
        apply_a_omega(pz.amplitudes(), 1.0, 1.0, &mut out);
        let f = apply_nonlinearity(&z, 1.0).unwrap();
        for (a, b) in out.iter().zip(f.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn coercivity_on_a_fixed_profile() {
        let phi = LatticeState::from_fn(6, |n| Complex64::new((n as f64).sin(), (n as f64).cos())).unwrap();
        let mut out = vec![c(0.0); phi.len()];
        apply_a_omega(phi.amplitudes(), 2.0, 0.25, &mut out);
        let lhs = inner(&out, phi.amplitudes());
        assert!(lhs >= 0.25 * l2(phi.amplitudes()).powi(2));
    }

    #[test]
    fn probe_at_half_radius() {
        let r = contraction_probe(0.5, 1.0, 1.0, 1.0, 200, 7, 5).unwrap();
        assert_eq!(r.lipschitz_bound, 0.5);
        assert!(r.within_bound);
        assert!(r.empirical_ratio_max <= 0.5);
        assert!(r.converged_to_zero);
    }

    #[test]
    fn probe_is_thread_count_independent() {
        let a = contraction_probe(0.6, 1.0, 1.0, 1.0, 150, 11, 4).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| contraction_probe(0.6, 1.0, 1.0, 1.0, 150, 11, 4).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn small_radius_ratios_vanish() {
        let a = contraction_probe(1e-2, 1.0, 1.0, 1.0, 100, 3, 3).unwrap();
        let b = contraction_probe(1e-4, 1.0, 1.0, 1.0, 100, 3, 3).unwrap();
        assert!(a.empirical_ratio_max < 1e-3);
        assert!(b.empirical_ratio_max < a.empirical_ratio_max * 1e-3);
    }

    #[test]
    fn probe_rejects_bad_input() {
        assert!(contraction_probe(0.5, 1.0, 1.0, 1.0, 99, 0, 3).is_err());
        assert!(contraction_probe(0.0, 1.0, 1.0, 1.0, 100, 0, 3).is_err());
    }
}
