use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::contraction::check_omega;
use crate::error::{DnlsError, Result};
use crate::lattice::{
    stationary_energy_coupled, stationary_gradient_coupled, LatticeState,
};
use crate::tridiag;

/// A converged nontrivial standing-wave profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandingWave {
    pub omega: f64,
    pub sigma: f64,
    pub phi: LatticeState,
    /// ℓ² norm of the stationary gradient at `phi`.
    pub residual: f64,
    /// Stationary energy at `phi`.
    pub energy: f64,
    /// `1/ε`
    pub coupling: f64,
    pub iterations: usize,
}

impl StandingWave {
    pub fn norm(&self) -> f64 {
        l2(self.phi.amplitudes())
    }

    /// Largest real amplitude.
    pub fn amplitude(&self) -> f64 {
        self.phi.amplitudes().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum WaveOutcome {
    Nontrivial(StandingWave),
    /// Newton settled on the zero profile.
    Trivial { coupling: f64, iterations: usize, residual: f64 },
}

impl WaveOutcome {
    pub fn wave(&self) -> Option<&StandingWave> {
        match self {
            WaveOutcome::Nontrivial(w) => Some(w),
            WaveOutcome::Trivial { .. } => None,
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, WaveOutcome::Trivial { .. })
    }
}

fn l2(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `ω^{1/σ}` on `support`, zero elsewhere.
pub fn anticontinuum_seed(support: &[i64], omega: f64, sigma: f64, half_width: usize) -> Result<LatticeState> {
    if support.is_empty() {
        return Err(DnlsError::validation("support", "must not be empty"));
    }
    check_omega(omega)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(DnlsError::validation("sigma", "must be finite and > 0"));
    }
    let m = half_width as i64;
    if let Some(n) = support.iter().find(|n| n.abs() > m) {
        return Err(DnlsError::validation("support", format!("site {n} lies outside -{m}..={m}")));
    }
    let a = Complex64::new(omega.abs().powf(1.0 / sigma), 0.0);
    LatticeState::from_fn(half_width, |n| {
        if support.contains(&n) {
            a
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Rotates by the phase of the largest entry and keeps the real part.
fn real_profile(seed: &LatticeState) -> Vec<f64> {
    let peak = seed
        .amplitudes()
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or_default();
    let rot = if peak.norm() > 0.0 { peak.conj() / peak.norm() } else { Complex64::new(1.0, 0.0) };
    seed.amplitudes().iter().map(|z| (z * rot).re).collect()
}

fn real_residual(phi: &[f64], coupling: f64, w2: f64, sigma: f64, out: &mut [f64]) -> f64 {
    let n = phi.len();
    for i in 0..n {
        let left = if i > 0 { phi[i - 1] } else { 0.0 };
        let right = if i + 1 < n { phi[i + 1] } else { 0.0 };
        let lap = left - 2.0 * phi[i] + right;
        let nl = phi[i].abs().powf(2.0 * sigma);
        out[i] = -coupling * lap + w2 * phi[i] - nl * phi[i];
    }
    out.iter().map(|r| r * r).sum::<f64>().sqrt()
}

fn complex_residual(phi: &LatticeState, coupling: f64, omega: f64, sigma: f64) -> f64 {
    let mut g = vec![Complex64::new(0.0, 0.0); phi.len()];
    stationary_gradient_coupled(phi.amplitudes(), coupling, omega, sigma, &mut g);
    l2(&g)
}

/// Newton on the real profile equation `-(1/ε)Aφ + ω²φ - |φ|^{2σ}φ = 0`.
pub fn newton_standing_wave(
    seed: &LatticeState,
    epsilon: f64,
    omega: f64,
    sigma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<WaveOutcome> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(DnlsError::validation("epsilon", "must be finite and > 0"));
    }
    newton_standing_wave_coupled(seed, 1.0 / epsilon, omega, sigma, tol, max_iter)
}

/// As [`newton_standing_wave`] with the coupling `1/ε` given directly, so
/// that the decoupled limit `1/ε = 0` is reachable.
pub fn newton_standing_wave_coupled(
    seed: &LatticeState,
    coupling: f64,
    omega: f64,
    sigma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<WaveOutcome> {
    if !(coupling >= 0.0 && coupling.is_finite()) {
        return Err(DnlsError::validation("coupling", "must be finite and >= 0"));
    }
    check_omega(omega)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(DnlsError::validation("sigma", "must be finite and > 0"));
    }
    if !(tol > 0.0 && tol <= 1e-8) {
        return Err(DnlsError::validation("tol", "must lie in (0, 1e-8]"));
    }
    if seed.is_zero() {
        return Ok(WaveOutcome::Trivial { coupling, iterations: 0, residual: 0.0 });
    }
    let w2 = omega * omega;
    let n = seed.len();
    let mut phi = real_profile(seed);
    let mut r = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial_r = vec![0.0; n];
    let mut res = real_residual(&phi, coupling, w2, sigma, &mut r);
    let off = vec![-coupling; n.saturating_sub(1)];
    let mut diag = vec![0.0; n];
    let mut iterations = 0;
    while res > tol {
        if iterations >= max_iter {
            return Err(DnlsError::Numerical {
                reason: format!("Newton did not converge in {max_iter} iterations"),
                time: None,
                residual: Some(res),
            });
        }
        iterations += 1;
        for (d, &p) in diag.iter_mut().zip(&phi) {
            *d = 2.0 * coupling + w2 - (2.0 * sigma + 1.0) * p.abs().powf(2.0 * sigma);
        }
        let mut step = r.clone();
        tridiag::solve(&off, &diag, &off, &mut step).map_err(|_| DnlsError::Numerical {
            reason: "singular Jacobian in standing-wave Newton".into(),
            time: None,
            residual: Some(res),
        })?;
        // Backtracking on the residual norm.
        let mut lambda = 1.0;
        loop {
            for i in 0..n {
                trial[i] = phi[i] - lambda * step[i];
            }
            let trial_res = real_residual(&trial, coupling, w2, sigma, &mut trial_r);
            if trial_res < res || lambda < 1e-4 {
                std::mem::swap(&mut phi, &mut trial);
                std::mem::swap(&mut r, &mut trial_r);
                res = trial_res;
                break;
            }
            lambda *= 0.5;
        }
        if !res.is_finite() {
            return Err(DnlsError::Numerical {
                reason: "standing-wave Newton diverged".into(),
                time: None,
                residual: Some(res),
            });
        }
    }

    let state = LatticeState::from_parts(
        seed.half_width(),
        phi.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        0.0,
    );
    let residual = complex_residual(&state, coupling, omega, sigma);
    let norm = l2(state.amplitudes());
    // Near zero the equation is linear with a coercive operator, so
    // ‖φ‖ ≤ residual/ω² up to higher order.
    if norm <= 10.0 * tol / w2 {
        return Ok(WaveOutcome::Trivial { coupling, iterations, residual });
    }
    Ok(WaveOutcome::Nontrivial(StandingWave {
        omega,
        sigma,
        energy: stationary_energy_coupled(state.amplitudes(), coupling, omega, sigma),
        phi: state,
        residual,
        coupling,
        iterations,
    }))
}

/// A continuation branch, possibly cut short.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub waves: Vec<StandingWave>,
    pub schedule: Vec<f64>,
    pub complete: bool,
    /// Why the branch stopped early.
    pub failure: Option<String>,
}

const CONTINUATION_MAX_ITER: usize = 50;

/// Follows a branch over increasing couplings `1/ε`, warm-starting each
/// Newton solve from the previous profile.
pub fn continuation(
    seed: &LatticeState,
    omega: f64,
    sigma: f64,
    coupling_schedule: &[f64],
    tol: f64,
) -> Result<Branch> {
    if coupling_schedule.is_empty() {
        return Err(DnlsError::validation("coupling_schedule", "must not be empty"));
    }
    if coupling_schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(DnlsError::validation("coupling_schedule", "must be strictly increasing"));
    }
    if !(coupling_schedule[0] >= 0.0) {
        return Err(DnlsError::validation("coupling_schedule", "must start at a value >= 0"));
    }
    let mut waves: Vec<StandingWave> = Vec::with_capacity(coupling_schedule.len());
    let mut failure = None;
    for (k, &c) in coupling_schedule.iter().enumerate() {
        let start = waves.last().map_or(seed, |w| &w.phi);
        let outcome = newton_standing_wave_coupled(start, c, omega, sigma, tol, CONTINUATION_MAX_ITER);
        let reason = match outcome {
            Ok(WaveOutcome::Nontrivial(w)) => {
                waves.push(w);
                continue;
            }
            Ok(WaveOutcome::Trivial { .. }) => format!("branch collapsed to zero at coupling {c}"),
            Err(e) => format!("at coupling {c}: {e}"),
        };
        if k == 0 {
            return Err(DnlsError::Numerical { reason, time: None, residual: None });
        }
        failure = Some(reason);
        break;
    }
    Ok(Branch {
        complete: failure.is_none(),
        waves,
        schedule: coupling_schedule.to_vec(),
        failure,
    })
}
