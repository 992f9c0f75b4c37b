//! Lattice states, model parameters, difference operators, norms and the
//! scalar functionals of the damped-driven DNLS lattice
//!
//! ```text
//! i u̇_n + (1/ε)(u_{n-1} - 2u_n + u_{n+1}) + iδ u_n + |u_n|^{2σ} u_n = g_n
//! ```
//!
//! truncated to the box `n = -m..=m` with zero ghost values at `±(m+1)`.

mod functionals;
mod nonlinearity;
mod norms;
mod stencil;

pub use functionals::{
    charge, hamiltonian_energy, j_lambda, l21_norm_sq, stationary_energy, stationary_gradient,
    FunctionalReport,
};
pub(crate) use functionals::{stationary_energy_coupled, stationary_gradient_coupled};
pub use nonlinearity::{apply_nonlinearity, apply_nonlinearity_with, Nonlinearity, PowerLaw};
pub use norms::{inner, norm, norm_l21};
pub(crate) use norms::grad_sq;
pub use stencil::{apply_operator, OperatorKind};
pub(crate) use stencil::{forward_diff_into, laplacian_into};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};

/// Complex amplitudes on the sites `-m..=m`, stamped with a time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeState {
    amplitudes: Vec<Complex64>,
    half_width: usize,
    time: f64,
}

fn check_finite(field: &str, values: &[Complex64]) -> Result<()> {
    match values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(i) => Err(DnlsError::validation(
            field,
            format!("non-finite value at storage index {i}"),
        )),
        None => Ok(()),
    }
}

impl LatticeState {
    pub fn zeros(half_width: usize) -> Self {
        LatticeState {
            amplitudes: vec![Complex64::new(0.0, 0.0); 2 * half_width + 1],
            half_width,
            time: 0.0,
        }
    }

    /// Builds a state from amplitudes ordered from site `-m` to site `m`.
    pub fn new(half_width: usize, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        if amplitudes.len() != 2 * half_width + 1 {
            return Err(DnlsError::validation(
                "amplitudes",
                format!(
                    "expected {} values for half width {half_width}, got {}",
                    2 * half_width + 1,
                    amplitudes.len()
                ),
            ));
        }
        check_finite("amplitudes", &amplitudes)?;
        if !(time.is_finite() && time >= 0.0) {
            return Err(DnlsError::validation("time", "must be finite and >= 0"));
        }
        Ok(LatticeState {
            amplitudes,
            half_width,
            time,
        })
    }

    pub fn from_fn(half_width: usize, f: impl Fn(i64) -> Complex64) -> Result<Self> {
        let m = half_width as i64;
        Self::new(half_width, (-m..=m).map(f).collect(), 0.0)
    }

    pub fn single_site(half_width: usize, site: i64, value: Complex64) -> Result<Self> {
        let mut state = Self::zeros(half_width);
        let idx = state
            .index(site)
            .ok_or_else(|| DnlsError::validation("site", format!("{site} outside -{half_width}..={half_width}")))?;
        check_finite("value", &[value])?;
        state.amplitudes[idx] = value;
        Ok(state)
    }

    /// Internal constructor for values already known to be valid.
    pub(crate) fn from_parts(half_width: usize, amplitudes: Vec<Complex64>, time: f64) -> Self {
        debug_assert_eq!(amplitudes.len(), 2 * half_width + 1);
        LatticeState {
            amplitudes,
            half_width,
            time,
        }
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Number of sites, `2m + 1`.
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Storage index of site `n`, if it lies inside the box.
    pub fn index(&self, site: i64) -> Option<usize> {
        let m = self.half_width as i64;
        (-m..=m).contains(&site).then(|| (site + m) as usize)
    }

    /// Amplitude at site `n`; zero outside the box (Dirichlet convention).
    pub fn get(&self, site: i64) -> Complex64 {
        self.index(site)
            .map(|i| self.amplitudes[i])
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// `(site, amplitude)` pairs from `-m` to `m`.
    pub fn sites(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let m = self.half_width as i64;
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(i, &z)| (i as i64 - m, z))
    }

    /// Zero-extends to a wider box, or truncates to a narrower one when the
    /// discarded sites are exactly zero.
    pub fn resized(&self, half_width: usize) -> Result<Self> {
        let amplitudes = resize_centered(&self.amplitudes, self.half_width, half_width)
            .ok_or_else(|| {
                DnlsError::validation(
                    "half_width",
                    format!("state has support outside -{half_width}..={half_width}"),
                )
            })?;
        Ok(LatticeState {
            amplitudes,
            half_width,
            time: self.time,
        })
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        self.map(|z| z * factor)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        LatticeState {
            amplitudes: self.amplitudes.iter().map(|&z| f(z)).collect(),
            half_width: self.half_width,
            time: self.time,
        }
    }

    /// Site-wise `self - other`; both states must share the same box.
    pub fn sub(&self, other: &LatticeState) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &LatticeState) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(
        &self,
        other: &LatticeState,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        if self.half_width != other.half_width {
            return Err(DnlsError::validation(
                "half_width",
                format!("mismatch {} vs {}", self.half_width, other.half_width),
            ));
        }
        Ok(LatticeState {
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            half_width: self.half_width,
            time: self.time,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

pub(crate) fn resize_centered(
    values: &[Complex64],
    from: usize,
    to: usize,
) -> Option<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    if to >= from {
        let pad = to - from;
        let mut out = vec![zero; 2 * to + 1];
        out[pad..pad + values.len()].copy_from_slice(values);
        Some(out)
    } else {
        let cut = from - to;
        let dropped = values[..cut].iter().chain(&values[values.len() - cut..]);
        if dropped.clone().any(|z| *z != zero) {
            return None;
        }
        Some(values[cut..values.len() - cut].to_vec())
    }
}

/// Parameters of the lattice equation on the box `-m..=m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    epsilon: f64,
    delta: f64,
    sigma: f64,
    forcing: Vec<Complex64>,
    half_width: usize,
}

impl ModelParams {
    pub fn new(
        epsilon: f64,
        delta: f64,
        sigma: f64,
        forcing: Vec<Complex64>,
        half_width: usize,
    ) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(DnlsError::validation("epsilon", "must be finite and > 0"));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(DnlsError::validation("delta", "must be finite and >= 0"));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(DnlsError::validation("sigma", "must be finite and >= 0"));
        }
        if forcing.len() != 2 * half_width + 1 {
            return Err(DnlsError::validation(
                "forcing",
                format!(
                    "expected {} values for half width {half_width}, got {}",
                    2 * half_width + 1,
                    forcing.len()
                ),
            ));
        }
        check_finite("forcing", &forcing)?;
        Ok(ModelParams {
            epsilon,
            delta,
            sigma,
            forcing,
            half_width,
        })
    }

    /// Parameters with `g ≡ 0`.
    pub fn unforced(epsilon: f64, delta: f64, sigma: f64, half_width: usize) -> Result<Self> {
        Self::new(
            epsilon,
            delta,
            sigma,
            vec![Complex64::new(0.0, 0.0); 2 * half_width + 1],
            half_width,
        )
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Inter-site coupling `1/ε`.
    pub fn coupling(&self) -> f64 {
        1.0 / self.epsilon
    }

    pub fn forcing(&self) -> &[Complex64] {
        &self.forcing
    }

    pub fn forcing_norm(&self) -> f64 {
        self.forcing.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn nonlinearity(&self) -> PowerLaw {
        PowerLaw::new(self.sigma)
    }

    /// `δ = 0` and `g ≡ 0`: charge and energy are constants of motion.
    pub fn is_conservative(&self) -> bool {
        self.delta == 0.0 && self.forcing.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Same model on another box; forcing is zero-extended or truncated.
    pub fn with_half_width(&self, half_width: usize) -> Result<Self> {
        let forcing =
            resize_centered(&self.forcing, self.half_width, half_width).ok_or_else(|| {
                DnlsError::validation(
                    "forcing",
                    format!("support extends outside -{half_width}..={half_width}"),
                )
            })?;
        Ok(ModelParams {
            forcing,
            half_width,
            ..self.clone()
        })
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(
            self.epsilon,
            delta,
            self.sigma,
            self.forcing.clone(),
            self.half_width,
        )
    }

    pub(crate) fn check_state(&self, u: &LatticeState) -> Result<()> {
        if u.half_width() != self.half_width {
            return Err(DnlsError::validation(
                "half_width",
                format!(
                    "state has half width {}, parameters {}",
                    u.half_width(),
                    self.half_width
                ),
            ));
        }
        Ok(())
    }
}
