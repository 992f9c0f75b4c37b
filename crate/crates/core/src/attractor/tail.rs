use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Trajectory, AUDIT_SLACK};
use crate::error::{DnlsError, Result};
use crate::lattice::LatticeState;

/// Cutoff `θ(|n|/M)` at scale `M`, with `|θ'| ≤ c0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub scale: usize,
    pub c0: f64,
}

impl CutoffSpec {
    pub fn new(scale: usize) -> Result<Self> {
        if scale == 0 {
            return Err(DnlsError::validation("M", "cutoff scale must be >= 1"));
        }
        Ok(CutoffSpec { scale, c0: FRAC_PI_2 })
    }

    /// `C₁ = 2 C₀`.
    pub fn c1(&self) -> f64 {
        2.0 * self.c0
    }
}

/// 0 on `[0,1]`, `sin²(π(s-1)/2)` on `[1,2]`, 1 beyond.
pub fn cutoff_theta(s: f64) -> f64 {
    if s <= 1.0 {
        0.0
    } else if s >= 2.0 {
        1.0
    } else {
        (FRAC_PI_2 * (s - 1.0)).sin().powi(2)
    }
}

/// `θ'(s)`; equals `(π/2) sin(π(s-1))` on the bridge.
pub fn cutoff_derivative(s: f64) -> f64 {
    if s <= 1.0 || s >= 2.0 {
        0.0
    } else {
        FRAC_PI_2 * (std::f64::consts::PI * (s - 1.0)).sin()
    }
}

/// `Σ_{|n| > 2M} |u_n|²`.
pub fn tail_mass(u: &LatticeState, m: usize) -> f64 {
    let cut = 2 * m as i64;
    u.sites()
        .filter(|(n, _)| n.abs() > cut)
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

/// `Σ θ(|n|/M) |u_n|²`.
pub fn cutoff_mass(u: &LatticeState, spec: &CutoffSpec) -> f64 {
    let scale = spec.scale as f64;
    u.sites()
        .map(|(n, z)| cutoff_theta(n.abs() as f64 / scale) * z.norm_sqr())
        .sum()
}

/// Outcome of checking `Σ_{|n|>2M}|u_n|² ≤ 2η/δ` for `t ≥ T(η)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub eta: f64,
    /// Tested cutoff scale.
    pub m_cutoff: usize,
    pub c0: f64,
    pub c1: f64,
    pub k_eta: usize,
    pub t0: f64,
    pub t_eta: f64,
    /// `(t, tail)` for every sample.
    pub observed_tail: Vec<(f64, f64)>,
    pub bound: f64,
    /// Number of samples with `t ≥ T(η)`.
    pub samples_checked: usize,
    /// `min (bound - tail)` over the checked samples.
    pub worst_margin: Option<f64>,
    pub passed: bool,
}

/// `(K(η), t₀, T(η))` for the tail estimate.
///
/// `K(η)` is the least `M ≥ 1` with
/// `(2C₁/M)ρ₁² + (1/δ)Σ_{|n|>M}|g_n|² ≤ η`.
pub fn tail_constants(
    forcing: &LatticeState,
    delta: f64,
    eta: f64,
    rho1: f64,
    radius: f64,
    c1: f64,
) -> Result<(usize, f64, f64)> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(DnlsError::validation("delta", "tail audit needs delta > 0"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(DnlsError::validation("eta", "must be finite and > 0"));
    }
    let norm_g = forcing.amplitudes().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let prediction =
        crate::dynamics::absorbing_prediction(norm_g, delta, rho1, radius.max(rho1))?;

    let condition = |m: usize| {
        let g_tail: f64 = forcing
            .sites()
            .filter(|(n, _)| n.unsigned_abs() as usize > m)
            .map(|(_, z)| z.norm_sqr())
            .sum();
        2.0 * c1 / m as f64 * rho1 * rho1 + g_tail / delta <= eta
    };
    let lower = (2.0 * c1 * rho1 * rho1 / eta).ceil();
    if !(lower < 1e15) {
        return Err(DnlsError::validation("eta", "too small: K(eta) is not representable"));
    }
    let mut k = (lower as usize).max(1);
    while k > 1 && condition(k - 1) {
        k -= 1;
    }
    while !condition(k) {
        k += 1;
    }
    let t0 = prediction.t0_predicted;
    let t_eta = t0 + (delta * rho1 * rho1 / eta).ln() / delta;
    Ok((k, t0, t_eta))
}

/// Checks the tail bound along a trajectory with snapshots.
pub fn tail_audit(traj: &Trajectory, eta: f64, rho1: f64, spec: &CutoffSpec) -> Result<TailReport> {
    let params = &traj.params;
    let snapshots = traj
        .snapshots
        .as_ref()
        .ok_or_else(|| DnlsError::validation("trajectory", "tail audit needs snapshots"))?;
    if snapshots.is_empty() {
        return Err(DnlsError::validation("trajectory", "has no snapshots"));
    }
    let forcing = LatticeState::new(params.half_width(), params.forcing().to_vec(), 0.0)?;
    let radius = traj.initial_row().charge.sqrt();
    let (k_eta, t0, t_eta) =
        tail_constants(&forcing, params.delta(), eta, rho1, radius, spec.c1())?;
    if spec.scale <= k_eta {
        return Err(DnlsError::validation(
            "M",
            format!("tested cutoff {} must exceed K(eta) = {k_eta}", spec.scale),
        ));
    }
    let bound = 2.0 * eta / params.delta();
    let observed_tail: Vec<(f64, f64)> = snapshots
        .iter()
        .map(|s| (s.time(), tail_mass(s, spec.scale)))
        .collect();
    let t_start = traj.initial_row().t;
    let checked: Vec<f64> = observed_tail
        .iter()
        .filter(|(t, _)| t - t_start >= t_eta)
        .map(|&(_, tail)| bound - tail)
        .collect();
    let worst_margin = checked.iter().copied().reduce(f64::min);
    let passed = worst_margin.is_none_or(|w| w >= -AUDIT_SLACK * bound);
    Ok(TailReport {
        eta,
        m_cutoff: spec.scale,
        c0: spec.c0,
        c1: spec.c1(),
        k_eta,
        t0,
        t_eta,
        observed_tail,
        bound,
        samples_checked: checked.len(),
        worst_margin,
        passed,
    })
}
