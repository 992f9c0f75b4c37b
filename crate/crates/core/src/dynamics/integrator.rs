use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::vector_field_into;
use crate::attractor::{tail_mass, weighted_norm, WeightSpec};
use crate::error::{DnlsError, Result};
use crate::lattice::{
    charge, hamiltonian_energy, j_lambda, l21_norm_sq, LatticeState, ModelParams, Nonlinearity,
    PowerLaw,
};
use crate::tridiag::{self, Mat2, Vec2};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// States with a sup norm above this are treated as overflow.
const BLOWUP_GUARD: f64 = 1e100;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Charge-conserving implicit midpoint rule (production scheme).
    #[default]
    ImplicitMidpoint,
    /// Classical explicit Runge-Kutta, kept as a cross-check.
    Rk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    /// Tolerance of the inner midpoint solve, relative to `max(1, ‖u‖)`.
    pub solver_tol: f64,
    pub max_inner_iters: usize,
    /// Record a diagnostics row every this many steps.
    pub record_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            scheme: Scheme::ImplicitMidpoint,
            dt: 0.01,
            solver_tol: 1e-12,
            max_inner_iters: 100,
            record_stride: 10,
        }
    }
}

impl IntegratorConfig {
    pub fn midpoint(dt: f64) -> Self {
        IntegratorConfig {
            dt,
            ..Default::default()
        }
    }

    pub fn with_stride(mut self, record_stride: usize) -> Self {
        self.record_stride = record_stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(DnlsError::validation("dt", "must be finite and > 0"));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol <= 1e-6) {
            return Err(DnlsError::validation("solver_tol", "must lie in (0, 1e-6]"));
        }
        if self.max_inner_iters == 0 {
            return Err(DnlsError::validation("max_inner_iters", "must be >= 1"));
        }
        if self.record_stride == 0 {
            return Err(DnlsError::validation("record_stride", "must be >= 1"));
        }
        Ok(())
    }
}

/// One sampled point of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub charge: f64,
    pub energy: f64,
    pub l21_sq: f64,
    pub tail_mass: Option<f64>,
    pub weighted_norm: Option<f64>,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
}

/// What to record besides the always-present functionals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecordOptions {
    pub keep_snapshots: bool,
    /// Compute `Σ_{|n|>2M} |u_n|²` for this `M`.
    pub tail_cutoff: Option<usize>,
    pub weight: Option<WeightSpec>,
}

impl RecordOptions {
    pub fn snapshots() -> Self {
        RecordOptions {
            keep_snapshots: true,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<DiagnosticsRow>,
    /// States at the recorded times, when requested.
    pub snapshots: Option<Vec<LatticeState>>,
    pub final_state: LatticeState,
    pub params: ModelParams,
    pub config: IntegratorConfig,
}

impl Trajectory {
    pub fn initial_row(&self) -> &DiagnosticsRow {
        &self.rows[0]
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.t)
    }

    /// Largest `|q(t) - q(0)| / |q(0)|` of a recorded quantity.
    pub fn max_relative_drift(&self, quantity: impl Fn(&DiagnosticsRow) -> f64) -> f64 {
        let q0 = quantity(&self.rows[0]);
        let scale = if q0 == 0.0 { 1.0 } else { q0.abs() };
        self.rows
            .iter()
            .map(|r| (quantity(r) - q0).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Reusable work buffers for stepping one trajectory.
pub(crate) struct Stepper<'a> {
    params: &'a ModelParams,
    config: &'a IntegratorConfig,
    nl: PowerLaw,
    mid: Vec<Complex64>,
    field: Vec<Complex64>,
    next: Vec<Complex64>,
    stages: [Vec<Complex64>; 4],
    pub(crate) newton_fallbacks: usize,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(params: &'a ModelParams, config: &'a IntegratorConfig) -> Self {
        let n = 2 * params.half_width() + 1;
        Stepper {
            params,
            config,
            nl: params.nonlinearity(),
            mid: vec![ZERO; n],
            field: vec![ZERO; n],
            next: vec![ZERO; n],
            stages: [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]],
            newton_fallbacks: 0,
        }
    }

    /// Advances `u` in place by `dt`.
    pub(crate) fn advance(&mut self, u: &mut [Complex64], dt: f64) -> Result<()> {
        match self.config.scheme {
            Scheme::ImplicitMidpoint => self.midpoint(u, dt)?,
            Scheme::Rk4 => self.rk4(u, dt),
        }
        let sup = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(sup <= BLOWUP_GUARD) {
            return Err(DnlsError::Numerical {
                reason: format!("state overflow guard tripped (sup norm {sup:e})"),
                time: None,
                residual: None,
            });
        }
        Ok(())
    }

    fn rk4(&mut self, u: &mut [Complex64], dt: f64) {
        let [k1, k2, k3, k4] = &mut self.stages;
        vector_field_into(u, self.params, &self.nl, k1);
        for (m, (&z, &k)) in self.mid.iter_mut().zip(u.iter().zip(k1.iter())) {
            *m = z + 0.5 * dt * k;
        }
        vector_field_into(&self.mid, self.params, &self.nl, k2);
        for (m, (&z, &k)) in self.mid.iter_mut().zip(u.iter().zip(k2.iter())) {
            *m = z + 0.5 * dt * k;
        }
        vector_field_into(&self.mid, self.params, &self.nl, k3);
        for (m, (&z, &k)) in self.mid.iter_mut().zip(u.iter().zip(k3.iter())) {
            *m = z + dt * k;
        }
        vector_field_into(&self.mid, self.params, &self.nl, k4);
        for i in 0..u.len() {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// Solves `v = u + dt f((u+v)/2)` by damped fixed-point iteration, falling
    /// back to Newton on the real `2(2m+1)` system when the iteration stalls.
    fn midpoint(&mut self, u: &mut [Complex64], dt: f64) -> Result<()> {
        let scale = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
        let tol = self.config.solver_tol * scale;

        // Explicit Euler predictor.
        vector_field_into(u, self.params, &self.nl, &mut self.field);
        for ((v, &z), &f) in self.next.iter_mut().zip(u.iter()).zip(&self.field) {
            *v = z + dt * f;
        }

        let mut relax = 1.0;
        let mut prev_diff = f64::INFINITY;
        let mut stalls = 0;
        for _ in 0..self.config.max_inner_iters {
            for ((m, &z), &v) in self.mid.iter_mut().zip(u.iter()).zip(&self.next) {
                *m = 0.5 * (z + v);
            }
            vector_field_into(&self.mid, self.params, &self.nl, &mut self.field);
            let mut diff_sq = 0.0;
            for ((v, &z), &f) in self.next.iter_mut().zip(u.iter()).zip(&self.field) {
                let target = z + dt * f;
                let delta = relax * (target - *v);
                diff_sq += delta.norm_sqr();
                *v += delta;
            }
            let diff = diff_sq.sqrt();
            if !diff.is_finite() {
                break;
            }
            if diff <= tol {
                u.copy_from_slice(&self.next);
                return Ok(());
            }
            if diff > 0.9 * prev_diff {
                stalls += 1;
                relax *= 0.5;
                if stalls > 3 {
                    break;
                }
            }
            prev_diff = diff;
        }

        self.newton_fallbacks += 1;
        self.midpoint_newton(u, dt, tol)
    }

    fn midpoint_newton(&mut self, u: &mut [Complex64], dt: f64, tol: f64) -> Result<()> {
        let n = u.len();
        let c = self.params.coupling();
        let delta = self.params.delta();
        let h = 0.5 * dt;
        // Restart from the current state if the fixed-point iterate blew up.
        if self.next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            self.next.copy_from_slice(u);
        }
        let off: Mat2 = [[0.0, h * c], [-h * c, 0.0]];
        let lower = vec![off; n.saturating_sub(1)];
        let upper = lower.clone();
        let mut diag: Vec<Mat2> = vec![[[0.0; 2]; 2]; n];
        let mut rhs: Vec<Vec2> = vec![[0.0; 2]; n];
        let mut residual = f64::INFINITY;

        for _ in 0..self.config.max_inner_iters {
            for ((m, &z), &v) in self.mid.iter_mut().zip(u.iter()).zip(&self.next) {
                *m = 0.5 * (z + v);
            }
            vector_field_into(&self.mid, self.params, &self.nl, &mut self.field);
            let mut res_sq = 0.0;
            for i in 0..n {
                let g = self.next[i] - u[i] - dt * self.field[i];
                res_sq += g.norm_sqr();
                rhs[i] = [-g.re, -g.im];

                let w = self.mid[i];
                let s = w.norm_sqr();
                let f = self.nl.gain(s);
                let (q, pa, pb) = if s == 0.0 {
                    (f, 0.0, 0.0)
                } else {
                    let fp = self.nl.gain_derivative(s);
                    let w2 = w * w;
                    (f + s * fp, fp * w2.re, fp * w2.im)
                };
                // Df(w) restricted to site i, as a real 2x2 block.
                let local = [
                    [-pb - delta, -q + pa + 2.0 * c],
                    [q + pa - 2.0 * c, pb - delta],
                ];
                diag[i] = [
                    [1.0 - h * local[0][0], -h * local[0][1]],
                    [-h * local[1][0], 1.0 - h * local[1][1]],
                ];
            }
            residual = res_sq.sqrt();
            if !residual.is_finite() {
                break;
            }
            if residual <= tol {
                u.copy_from_slice(&self.next);
                return Ok(());
            }
            tridiag::solve_block(&lower, &diag, &upper, &mut rhs)?;
            let mut step_sq = 0.0;
            for (v, d) in self.next.iter_mut().zip(&rhs) {
                *v += Complex64::new(d[0], d[1]);
                step_sq += d[0] * d[0] + d[1] * d[1];
            }
            if step_sq.sqrt() <= tol {
                u.copy_from_slice(&self.next);
                return Ok(());
            }
        }
        Err(DnlsError::Numerical {
            reason: format!(
                "implicit midpoint solve did not reach tolerance {tol:e} in {} iterations",
                self.config.max_inner_iters
            ),
            time: None,
            residual: Some(residual),
        })
    }
}

/// Advances one step of size `config.dt`.
pub fn step(u: &LatticeState, params: &ModelParams, config: &IntegratorConfig) -> Result<LatticeState> {
    config.validate()?;
    params.check_state(u)?;
    let mut stepper = Stepper::new(params, config);
    let mut amps = u.amplitudes().to_vec();
    let t = u.time();
    stepper.advance(&mut amps, config.dt).map_err(|e| e.at_time(t))?;
    Ok(LatticeState::from_parts(u.half_width(), amps, t + config.dt))
}

fn diagnostics(
    state: &LatticeState,
    params: &ModelParams,
    options: &RecordOptions,
) -> Result<DiagnosticsRow> {
    let energy = hamiltonian_energy(state, params)?;
    let (j, lambda) = j_lambda(state, params);
    let weighted = match &options.weight {
        Some(spec) => Some(weighted_norm(state, spec)?),
        None => None,
    };
    Ok(DiagnosticsRow {
        t: state.time(),
        charge: charge(state),
        energy,
        l21_sq: l21_norm_sq(state),
        tail_mass: options.tail_cutoff.map(|m| tail_mass(state, m)),
        weighted_norm: weighted,
        j,
        lambda,
    })
}

/// Integrates from `u0` over `[t0, t0 + t_end]`, recording the default
/// diagnostics every `record_stride` steps (and always at the end).
pub fn integrate(
    u0: &LatticeState,
    params: &ModelParams,
    config: &IntegratorConfig,
    t_end: f64,
) -> Result<Trajectory> {
    integrate_with(u0, params, config, t_end, &RecordOptions::default())
}

pub fn integrate_with(
    u0: &LatticeState,
    params: &ModelParams,
    config: &IntegratorConfig,
    t_end: f64,
    options: &RecordOptions,
) -> Result<Trajectory> {
    config.validate()?;
    params.check_state(u0)?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(DnlsError::validation("T", "must be finite and >= 0"));
    }
    let dt = config.dt;
    let whole = (t_end / dt).round();
    let (n_steps, last_dt) = if (whole * dt - t_end).abs() <= 1e-9 * t_end.max(dt) {
        (whole as usize, dt)
    } else {
        let n = (t_end / dt).ceil() as usize;
        (n, t_end - (n - 1) as f64 * dt)
    };

    let t0 = u0.time();
    let half_width = u0.half_width();
    let mut amps = u0.amplitudes().to_vec();
    let mut rows = vec![diagnostics(u0, params, options)?];
    let mut snapshots = options.keep_snapshots.then(|| vec![u0.clone()]);
    let mut stepper = Stepper::new(params, config);

    for k in 1..=n_steps {
        let h = if k == n_steps { last_dt } else { dt };
        let t_prev = t0 + (k - 1) as f64 * dt;
        stepper
            .advance(&mut amps, h)
            .map_err(|e| e.at_time(t_prev))?;
        if k % config.record_stride == 0 || k == n_steps {
            let t = if k == n_steps {
                t0 + t_end
            } else {
                t0 + k as f64 * dt
            };
            let state = LatticeState::from_parts(half_width, amps.clone(), t);
            rows.push(diagnostics(&state, params, options).map_err(|e| e.at_time(t))?);
            if let Some(snaps) = snapshots.as_mut() {
                snaps.push(state);
            }
        }
    }

    let final_state = LatticeState::from_parts(half_width, amps, t0 + t_end);
    Ok(Trajectory {
        rows,
        snapshots,
        final_state,
        params: params.clone(),
        config: config.clone(),
    })
}
