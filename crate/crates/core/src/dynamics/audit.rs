use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{DnlsError, Result};

/// Relative slack granted to every envelope comparison, covering the inner
/// solver tolerance and round-off accumulated along a run.
pub const AUDIT_SLACK: f64 = 1e-9;

/// Predicted and observed entry into the ℓ² absorbing ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingReport {
    /// `‖g‖ / δ`
    pub rho: f64,
    pub rho1: f64,
    /// Radius of the ball of initial data used for the prediction.
    pub radius: f64,
    /// `(1/δ) log(R² / (ρ₁² - ρ²))`
    pub t0_predicted: f64,
    /// Earliest sample after which the charge stays `≤ ρ₁²`.
    pub t_entry_observed: Option<f64>,
    /// ℓ²₁ radius `ρ₂` of the absorbing ball, when `ε, σ` are known.
    pub rho2: Option<f64>,
}

/// `t₀ = (1/δ) log(R² / (ρ₁² - ρ²))` with `ρ = ‖g‖/δ`.
pub fn absorbing_prediction(norm_g: f64, delta: f64, rho1: f64, radius: f64) -> Result<AbsorbingReport> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(DnlsError::validation("delta", "absorbing ball needs delta > 0"));
    }
    if !(norm_g.is_finite() && norm_g >= 0.0) {
        return Err(DnlsError::validation("norm_g", "must be finite and >= 0"));
    }
    let rho = norm_g / delta;
    if !(rho1 > rho) {
        return Err(DnlsError::validation(
            "rho1",
            format!("absorbing-ball radius must exceed ‖g‖/δ = {rho}"),
        ));
    }
    if !(radius >= rho1) {
        return Err(DnlsError::validation("R", format!("must be >= rho1 = {rho1}")));
    }
    let t0 = (radius * radius / (rho1 * rho1 - rho * rho)).ln() / delta;
    Ok(AbsorbingReport {
        rho,
        rho1,
        radius,
        t0_predicted: t0,
        t_entry_observed: None,
        rho2: None,
    })
}

impl AbsorbingReport {
    /// Adds `ρ₂² = ε ρ₁^{2σ+2} + 3ε‖g‖ρ₁ + (1/δ)‖g‖ρ₁`.
    pub fn with_rho2(mut self, epsilon: f64, sigma: f64, delta: f64) -> Self {
        let norm_g = self.rho * delta;
        let r1 = self.rho1;
        let rho2_sq = epsilon * r1.powf(2.0 * sigma + 2.0)
            + 3.0 * epsilon * norm_g * r1
            + norm_g * r1 / delta;
        self.rho2 = Some(rho2_sq.sqrt());
        self
    }
}

/// Earliest sampled time after which every sample has charge `≤ ρ₁²`.
pub fn observed_entry_time(traj: &Trajectory, rho1: f64) -> Option<f64> {
    let limit = rho1 * rho1;
    let last_outside = traj.rows.iter().rposition(|r| r.charge > limit);
    match last_outside {
        None => traj.rows.first().map(|r| r.t),
        Some(i) => traj.rows.get(i + 1).map(|r| r.t),
    }
}

/// First sampled time with charge `≤ ρ₁²`, whether or not it stays inside.
pub fn first_entry_time(traj: &Trajectory, rho1: f64) -> Option<f64> {
    let limit = rho1 * rho1;
    traj.rows.iter().find(|r| r.charge <= limit).map(|r| r.t)
}

/// Prediction for the trajectory's own initial radius plus the observed entry.
pub fn absorbing_report(traj: &Trajectory, rho1: f64) -> Result<AbsorbingReport> {
    let p = &traj.params;
    let radius = traj.initial_row().charge.sqrt().max(rho1);
    let mut report = absorbing_prediction(p.forcing_norm(), p.delta(), rho1, radius)?
        .with_rho2(p.epsilon(), p.sigma(), p.delta());
    report.t_entry_observed = observed_entry_time(traj, rho1);
    Ok(report)
}

/// Worst margins of the decay and growth estimates along a trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// `min_t [ ‖u0‖²e^{-δt} + ρ²(1-e^{-δt}) - ‖u(t)‖² ]`
    pub gronwall_margin: Option<f64>,
    pub gronwall_worst_time: Option<f64>,
    /// `min_t [ ‖u0‖²_{ℓ²₁} + (2ε/(σ+1))‖u0‖^{2σ+2} - ‖u(t)‖²_{ℓ²₁} ]`, conservative runs only.
    pub growth_margin: Option<f64>,
    pub growth_worst_time: Option<f64>,
    /// Largest `|½ dJ/dt + δJ - Λ|` by centered differences.
    pub j_balance_residual: Option<f64>,
    /// The same, divided by `max_t (|J| + |Λ|)`.
    pub j_balance_relative: Option<f64>,
    pub violations: Vec<String>,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Computes all margins without failing.
pub fn decay_margins(traj: &Trajectory) -> DecayReport {
    let mut report = DecayReport::default();
    let Some(first) = traj.rows.first() else {
        return report;
    };
    let p = &traj.params;
    let delta = p.delta();
    let norm_g = p.forcing_norm();
    let t0 = first.t;
    let c0 = first.charge;

    // (i) Gronwall envelope for the charge.
    let envelope: Option<Box<dyn Fn(f64) -> f64>> = if delta > 0.0 {
        let rho_sq = (norm_g / delta).powi(2);
        Some(Box::new(move |t: f64| {
            let decay = (-delta * (t - t0)).exp();
            c0 * decay + rho_sq * (1.0 - decay)
        }))
    } else if norm_g == 0.0 {
        Some(Box::new(move |_| c0))
    } else {
        None
    };
    if let Some(env) = envelope {
        let scale = c0.max((norm_g / delta.max(f64::MIN_POSITIVE)).powi(2).min(f64::MAX)).max(f64::MIN_POSITIVE);
        let (margin, at) = traj
            .rows
            .iter()
            .map(|r| (env(r.t) - r.charge, r.t))
            .fold((f64::INFINITY, t0), |a, b| if b.0 < a.0 { b } else { a });
        report.gronwall_margin = Some(margin);
        report.gronwall_worst_time = Some(at);
        if margin < -AUDIT_SLACK * scale {
            report
                .violations
                .push(format!("charge envelope violated at t = {at} by {:e}", -margin));
        }
    }

    // (ii) Growth bound of the ℓ²₁ norm in conservative runs.
    if p.is_conservative() {
        let sigma = p.sigma();
        let bound = first.l21_sq + 2.0 * p.epsilon() / (sigma + 1.0) * c0.powf(sigma + 1.0);
        let (margin, at) = traj
            .rows
            .iter()
            .map(|r| (bound - r.l21_sq, r.t))
            .fold((f64::INFINITY, t0), |a, b| if b.0 < a.0 { b } else { a });
        report.growth_margin = Some(margin);
        report.growth_worst_time = Some(at);
        if margin < -AUDIT_SLACK * bound.max(f64::MIN_POSITIVE) {
            report
                .violations
                .push(format!("l21 growth bound violated at t = {at} by {:e}", -margin));
        }
    }

    // (iii) Energy balance ½ J' + δJ = Λ.
    if traj.rows.len() >= 3 {
        let rows = &traj.rows;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in 1..rows.len() - 1 {
            let dj = (rows[k + 1].j - rows[k - 1].j) / (rows[k + 1].t - rows[k - 1].t);
            let r = 0.5 * dj + delta * rows[k].j - rows[k].lambda;
            worst = worst.max(r.abs());
            scale = scale.max(rows[k].j.abs() + rows[k].lambda.abs());
        }
        report.j_balance_residual = Some(worst);
        report.j_balance_relative = Some(if scale > 0.0 { worst / scale } else { worst });
    }
    report
}

/// Like [`decay_margins`], but a violated envelope is an error.
pub fn decay_audit(traj: &Trajectory) -> Result<DecayReport> {
    if traj.rows.is_empty() {
        return Err(DnlsError::validation("trajectory", "has no rows"));
    }
    let report = decay_margins(traj);
    if report.passed() {
        Ok(report)
    } else {
        Err(DnlsError::Audit(report.violations.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegratorConfig};
    use crate::lattice::{LatticeState, ModelParams};
    use num_complex::Complex64;

    #[test]
    fn prediction_by_hand() {
        let r = absorbing_prediction(0.1, 0.5, 0.3, 1.0).unwrap();
        assert!((r.rho - 0.2).abs() < 1e-15);
        assert!((r.t0_predicted - 2.0 * 20f64.ln()).abs() < 1e-12);
        assert!((r.t0_predicted - 5.9915).abs() < 1e-4);
    }

    #[test]
    fn prediction_is_zero_when_radius_equals_rho1_without_forcing() {
        let r = absorbing_prediction(0.0, 0.5, 0.7, 0.7).unwrap();
        assert_eq!(r.t0_predicted, 0.0);
    }

    #[test]
    fn prediction_rejects_small_rho1() {
        let err = absorbing_prediction(0.1, 0.5, 0.2, 1.0).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("rho1"));
        assert!(absorbing_prediction(0.1, 0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn rho2_formula() {
        let r = absorbing_prediction(0.1, 0.5, 0.3, 1.0)
            .unwrap()
            .with_rho2(1.0, 1.0, 0.5);
        let expected = 0.3f64.powi(4) + 3.0 * 0.1 * 0.3 + 0.1 * 0.3 / 0.5;
        assert!((r.rho2.unwrap().powi(2) - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_trajectory_has_nonnegative_margins() {
        let p = ModelParams::unforced(1.0, 0.0, 1.0, 5).unwrap();
        let traj = integrate(&LatticeState::zeros(5), &p, &IntegratorConfig::default(), 1.0).unwrap();
        let report = decay_audit(&traj).unwrap();
        assert!(report.gronwall_margin.unwrap() >= 0.0);
        assert!(report.growth_margin.unwrap() >= 0.0);
        assert_eq!(report.j_balance_residual, Some(0.0));
    }

    #[test]
    fn unforced_decay_sits_inside_the_weaker_envelope() {
        let p = ModelParams::unforced(1.0, 0.2, 1.0, 15).unwrap();
        let u0 = LatticeState::from_fn(15, |n| Complex64::new((-(n * n) as f64 / 8.0).exp(), 0.0))
            .unwrap();
        let traj = integrate(&u0, &p, &IntegratorConfig::default(), 5.0).unwrap();
        let report = decay_audit(&traj).unwrap();
        // True decay e^{-2δt} sits strictly below the e^{-δt} envelope.
        let c0 = traj.rows[0].charge;
        for r in &traj.rows[1..] {
            let slack = c0 * (-0.2 * r.t).exp() - r.charge;
            assert!(slack > 0.0);
        }
        assert!(report.gronwall_margin.unwrap() >= 0.0);
    }

    #[test]
    fn entry_times() {
        let mut g = vec![Complex64::new(0.0, 0.0); 11];
        g[5] = Complex64::new(0.1, 0.0);
        let p = ModelParams::new(1.0, 0.5, 1.0, g, 5).unwrap();
        let u0 = LatticeState::single_site(5, 0, Complex64::new(1.0, 0.0)).unwrap();
        let traj = integrate(&u0, &p, &IntegratorConfig::default(), 10.0).unwrap();
        let report = absorbing_report(&traj, 0.3).unwrap();
        let entry = report.t_entry_observed.unwrap();
        assert!(entry <= report.t0_predicted);
        assert_eq!(first_entry_time(&traj, 0.3), Some(entry));
    }
}
