use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::LatticeState;

/// The three difference operators on the Dirichlet box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    /// `(Bu)_n = u_{n+1} - u_n`
    Forward,
    /// `(B*u)_n = u_{n-1} - u_n`
    Backward,
    /// `(Au)_n = u_{n-1} - 2u_n + u_{n+1}`
    Laplacian,
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub(crate) fn forward_diff_into(u: &[Complex64], out: &mut [Complex64]) {
    let n = u.len();
    for i in 0..n {
        let next = if i + 1 < n { u[i + 1] } else { ZERO };
        out[i] = next - u[i];
    }
}

pub(crate) fn backward_diff_into(u: &[Complex64], out: &mut [Complex64]) {
    for i in 0..u.len() {
        let prev = if i > 0 { u[i - 1] } else { ZERO };
        out[i] = prev - u[i];
    }
}

pub(crate) fn laplacian_into(u: &[Complex64], out: &mut [Complex64]) {
    let n = u.len();
    for i in 0..n {
        let prev = if i > 0 { u[i - 1] } else { ZERO };
        let next = if i + 1 < n { u[i + 1] } else { ZERO };
        out[i] = prev - 2.0 * u[i] + next;
    }
}

/// Applies `B`, `B*` or `A` with zero ghost values at `±(m+1)`.
pub fn apply_operator(kind: OperatorKind, u: &LatticeState) -> LatticeState {
    let mut out = vec![ZERO; u.len()];
    match kind {
        OperatorKind::Forward => forward_diff_into(u.amplitudes(), &mut out),
        OperatorKind::Backward => backward_diff_into(u.amplitudes(), &mut out),
        OperatorKind::Laplacian => laplacian_into(u.amplitudes(), &mut out),
    }
    LatticeState::from_parts(u.half_width(), out, u.time())
}
