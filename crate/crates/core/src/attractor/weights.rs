use serde::{Deserialize, Serialize};

use crate::dynamics::{Trajectory, AUDIT_SLACK};
use crate::error::{DnlsError, Result};
use crate::lattice::LatticeState;

/// Largest admissible `λ·m`, keeping every weight representable.
pub const MAX_WEIGHT_EXPONENT: f64 = 300.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightFamily {
    /// `w_n = e^{λ(n+m)}`, i.e. `e^{λn}` normalized to 1 at the left edge.
    ExponentialOneSided,
    /// `w_n = e^{λ|n|}`.
    ExponentialTwoSided,
}

/// Weight family on the box `-m..=m` with its growth constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub family: WeightFamily,
    pub lambda: f64,
    pub half_width: usize,
    pub d1: f64,
    pub d2_lower: f64,
}

impl WeightSpec {
    pub fn new(family: WeightFamily, lambda: f64, half_width: usize) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(DnlsError::validation("lambda", "must be finite and >= 0"));
        }
        if lambda * half_width as f64 > MAX_WEIGHT_EXPONENT {
            return Err(DnlsError::validation(
                "lambda",
                format!("lambda * m = {} exceeds {MAX_WEIGHT_EXPONENT}", lambda * half_width as f64),
            ));
        }
        let mut spec = WeightSpec { family, lambda, half_width, d1: 0.0, d2_lower: 1.0 };
        let (d1, d2) = weight_constants(&spec, half_width);
        spec.d1 = d1;
        spec.d2_lower = d2;
        Ok(spec)
    }

    fn exponent(&self, n: i64) -> f64 {
        match self.family {
            WeightFamily::ExponentialOneSided => self.lambda * (n + self.half_width as i64) as f64,
            WeightFamily::ExponentialTwoSided => self.lambda * n.abs() as f64,
        }
    }

    pub fn weight(&self, n: i64) -> f64 {
        self.exponent(n).exp()
    }

    /// `w_{n+1} / w_n`, computed without forming either weight.
    fn ratio(&self, n: i64) -> f64 {
        (self.exponent(n + 1) - self.exponent(n)).exp()
    }
}

/// `(d₁, d̲₂) = (sup |w_{n+1}-w_n|/w_n, inf w_{n+1}/w_n)` over `|n| ≤ n_range`.
pub fn weight_constants(spec: &WeightSpec, n_range: usize) -> (f64, f64) {
    let r = n_range as i64;
    let mut d1: f64 = 0.0;
    let mut d2 = f64::INFINITY;
    for n in -r..=r {
        let q = spec.ratio(n);
        d1 = d1.max((q - 1.0).abs());
        d2 = d2.min(q);
    }
    (d1, d2)
}

/// Whether `δ/2 - 2d₁d̲₂^{-1/2} ≥ 0`, and that slack.
pub fn damping_condition(delta: f64, spec: &WeightSpec) -> (bool, f64) {
    damping_condition_coupled(delta, 1.0, spec)
}

/// `δ/2 - 2c·d₁d̲₂^{-1/2}` for coupling `c = 1/ε`.
pub fn damping_condition_coupled(delta: f64, coupling: f64, spec: &WeightSpec) -> (bool, f64) {
    let slack = delta / 2.0 - 2.0 * coupling * spec.d1 / spec.d2_lower.sqrt();
    (slack >= 0.0, slack)
}

fn check_width(u: &LatticeState, spec: &WeightSpec) -> Result<()> {
    if u.half_width() > spec.half_width {
        return Err(DnlsError::validation(
            "half_width",
            format!(
                "state box {} is wider than the weight box {}",
                u.half_width(),
                spec.half_width
            ),
        ));
    }
    Ok(())
}

/// `(Σ w_n |u_n|²)^{1/2}`.
pub fn weighted_norm(u: &LatticeState, spec: &WeightSpec) -> Result<f64> {
    check_width(u, spec)?;
    Ok(u.sites()
        .map(|(n, z)| spec.weight(n) * z.norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// `Σ_{|n|>2M} w_n |u_n|²`.
pub fn weighted_tail(u: &LatticeState, spec: &WeightSpec, m: usize) -> Result<f64> {
    check_width(u, spec)?;
    let cut = 2 * m as i64;
    Ok(u.sites()
        .filter(|(n, _)| n.abs() > cut)
        .map(|(n, z)| spec.weight(n) * z.norm_sqr())
        .sum())
}

/// Weighted absorbing-ball and weighted tail checks along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedReport {
    pub weight: WeightSpec,
    /// `δ/2 - 2c·d₁d̲₂^{-1/2}`
    pub kappa: f64,
    /// `‖g‖²_w`
    pub forcing_weighted_sq: f64,
    /// `(t, ‖u(t)‖²_w)` for every sample.
    pub weighted_sq: Vec<(f64, f64)>,
    /// `min_t [envelope(t) - ‖u(t)‖²_w]` for the Gronwall envelope.
    pub envelope_margin: f64,
    /// `sup_t` of the envelope; a uniform bound when finite.
    pub uniform_bound: f64,
    pub max_weighted_sq: f64,
    pub eta: f64,
    pub m_cutoff: usize,
    /// First time the tail bound is checked: `(1/δ) ln(δ·uniform_bound/η)`, at least 0.
    pub t_eta: f64,
    pub tail_bound: f64,
    pub observed_tail: Vec<(f64, f64)>,
    pub samples_checked: usize,
    pub tail_worst_margin: Option<f64>,
    pub bounded: bool,
    pub passed: bool,
}

/// Checks the weighted Gronwall envelope
/// `X(t) ≤ X₀e^{-2κt} + G/(2κδ)(1 - e^{-2κt})` with `X = ‖u‖²_w`,
/// `G = ‖g‖²_w`, and the weighted tail bound `2η/δ` at scale `M`.
pub fn weighted_audit(traj: &Trajectory, spec: &WeightSpec, eta: f64, m: usize) -> Result<WeightedReport> {
    let params = &traj.params;
    let delta = params.delta();
    if !(delta > 0.0) {
        return Err(DnlsError::validation("delta", "weighted audit needs delta > 0"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(DnlsError::validation("eta", "must be finite and > 0"));
    }
    if m == 0 {
        return Err(DnlsError::validation("M", "cutoff scale must be >= 1"));
    }
    let (ok, kappa) = damping_condition_coupled(delta, params.coupling(), spec);
    if !ok {
        return Err(DnlsError::validation(
            "delta",
            format!(
                "damping condition delta/2 - 2(1/epsilon) d1 d2^(-1/2) >= 0 fails (slack {kappa})"
            ),
        ));
    }
    let snapshots = traj
        .snapshots
        .as_ref()
        .ok_or_else(|| DnlsError::validation("trajectory", "weighted audit needs snapshots"))?;
    let first = snapshots
        .first()
        .ok_or_else(|| DnlsError::validation("trajectory", "has no snapshots"))?;
    let forcing = LatticeState::new(params.half_width(), params.forcing().to_vec(), 0.0)?;
    let g_sq = weighted_norm(&forcing, spec)?.powi(2);
    let t_start = first.time();
    let x0 = weighted_norm(first, spec)?.powi(2);

    let envelope = |t: f64| -> f64 {
        let s = t - t_start;
        if kappa > 0.0 {
            let decay = (-2.0 * kappa * s).exp();
            x0 * decay + g_sq / (2.0 * kappa * delta) * (1.0 - decay)
        } else {
            x0 + g_sq * s / delta
        }
    };
    let uniform_bound = if kappa > 0.0 {
        x0.max(g_sq / (2.0 * kappa * delta))
    } else if g_sq == 0.0 {
        x0
    } else {
        f64::INFINITY
    };

    let mut weighted_sq = Vec::with_capacity(snapshots.len());
    let mut observed_tail = Vec::with_capacity(snapshots.len());
    let mut envelope_margin = f64::INFINITY;
    let mut max_weighted_sq: f64 = 0.0;
    for s in snapshots {
        let x = weighted_norm(s, spec)?.powi(2);
        weighted_sq.push((s.time(), x));
        observed_tail.push((s.time(), weighted_tail(s, spec, m)?));
        envelope_margin = envelope_margin.min(envelope(s.time()) - x);
        max_weighted_sq = max_weighted_sq.max(x);
    }
    let scale = x0.max(g_sq / delta).max(f64::MIN_POSITIVE);
    let bounded = envelope_margin >= -AUDIT_SLACK * scale;

    let tail_bound = 2.0 * eta / delta;
    let t_eta = if uniform_bound.is_finite() {
        ((delta * uniform_bound / eta).ln() / delta).max(0.0)
    } else {
        f64::INFINITY
    };
    let checked: Vec<f64> = observed_tail
        .iter()
        .filter(|(t, _)| t - t_start >= t_eta)
        .map(|&(_, tail)| tail_bound - tail)
        .collect();
    let tail_worst_margin = checked.iter().copied().reduce(f64::min);
    let tail_ok = tail_worst_margin.is_none_or(|w| w >= -AUDIT_SLACK * tail_bound);
    Ok(WeightedReport {
        weight: spec.clone(),
        kappa,
        forcing_weighted_sq: g_sq,
        weighted_sq,
        envelope_margin,
        uniform_bound,
        max_weighted_sq,
        eta,
        m_cutoff: m,
        t_eta,
        tail_bound,
        observed_tail,
        samples_checked: checked.len(),
        tail_worst_margin,
        bounded,
        passed: bounded && tail_ok,
    })
}
