//! Time integration of the lattice equation and audits of the decay,
//! growth and absorbing-ball estimates along computed trajectories.

mod audit;
mod integrator;

pub use audit::{
    absorbing_prediction, absorbing_report, decay_audit, decay_margins, first_entry_time,
    observed_entry_time, AbsorbingReport, DecayReport, AUDIT_SLACK,
};
pub use integrator::{
    integrate, integrate_with, step, DiagnosticsRow, IntegratorConfig, RecordOptions, Scheme,
    Trajectory,
};

use num_complex::Complex64;

use crate::lattice::{laplacian_into, LatticeState, ModelParams, Nonlinearity};
use crate::error::Result;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub(crate) fn vector_field_into(
    u: &[Complex64],
    params: &ModelParams,
    nl: &dyn Nonlinearity,
    out: &mut [Complex64],
) {
    laplacian_into(u, out);
    let c = params.coupling();
    let delta = params.delta();
    for ((o, &z), &g) in out.iter_mut().zip(u).zip(params.forcing()) {
        let nonlinear = nl.apply(z);
        *o = I * (c * *o + nonlinear - g) - delta * z;
    }
}

/// Right-hand side of `u̇ = i(1/ε)Au - δu + i|u|^{2σ}u - ig`.
pub fn vector_field(u: &LatticeState, params: &ModelParams) -> Result<LatticeState> {
    params.check_state(u)?;
    let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
    vector_field_into(u.amplitudes(), params, &params.nonlinearity(), &mut out);
    Ok(LatticeState::from_parts(u.half_width(), out, u.time()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::inner;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn conservative_field_is_skew_on_real_data() {
        let p = ModelParams::unforced(1.0, 0.0, 1.0, 4).unwrap();
        let u = LatticeState::from_fn(4, |n| c(1.0 / (1.0 + (n * n) as f64), 0.0)).unwrap();
        let f = vector_field(&u, &p).unwrap();
        assert!(inner(f.amplitudes(), u.amplitudes()).abs() < 1e-15);
    }

    #[test]
    fn damped_single_site_by_hand() {
        let p = ModelParams::unforced(1.0, 0.5, 1.0, 2).unwrap();
        let u = LatticeState::single_site(2, 0, c(1.0, 0.0)).unwrap();
        let f = vector_field(&u, &p).unwrap();
        assert!((f.get(0) - c(-0.5, -1.0)).norm() < 1e-15);
        assert!((f.get(1) - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_state_zero_forcing_is_rest() {
        let p = ModelParams::unforced(1.0, 0.5, 2.0, 3).unwrap();
        assert!(vector_field(&LatticeState::zeros(3), &p).unwrap().is_zero());
    }

    #[test]
    fn forcing_enters_as_minus_i_g() {
        let mut g = vec![c(0.0, 0.0); 3];
        g[1] = c(2.0, 0.0);
        let p = ModelParams::new(1.0, 0.0, 1.0, g, 1).unwrap();
        let f = vector_field(&LatticeState::zeros(1), &p).unwrap();
        assert_eq!(f.get(0), c(0.0, -2.0));
    }
}
