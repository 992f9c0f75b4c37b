use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_with, IntegratorConfig, RecordOptions};
use crate::error::{DnlsError, Result};
use crate::lattice::{LatticeState, ModelParams};

/// Worst gap between truncated and reference trajectories, per box size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub m_values: Vec<usize>,
    pub m_ref: usize,
    pub interval: (f64, f64),
    pub deltas: Vec<f64>,
    /// Non-increasing in `m`.
    pub monotone: bool,
    pub strictly_decreasing: bool,
    pub samples: usize,
}

fn l2_distance(a: &LatticeState, b: &LatticeState) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// For each `m`, integrates every `u0` on `-m..=m`, zero-extends to `m_ref`
/// and records `max_{u0, t} ‖S_m(t)u0 - S_ref(t)u0‖`.
pub fn truncation_delta(
    u0_set: &[LatticeState],
    params: &ModelParams,
    m_values: &[usize],
    m_ref: usize,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<TruncationReport> {
    if u0_set.is_empty() {
        return Err(DnlsError::validation("u0_set", "must not be empty"));
    }
    if let Some(&m) = m_values.iter().find(|&&m| m > m_ref || m == 0) {
        return Err(DnlsError::validation(
            "m_values",
            format!("{m} must lie in 1..={m_ref}"),
        ));
    }
    // Every box must hold the data and the forcing exactly.
    let mut widths: Vec<usize> = m_values.to_vec();
    widths.push(m_ref);
    let mut jobs = Vec::new();
    for (k, u0) in u0_set.iter().enumerate() {
        for &m in &widths {
            let u = u0.resized(m)?;
            let p = params.with_half_width(m)?;
            jobs.push((k, m, u, p));
        }
    }
    let options = RecordOptions::snapshots();
    let runs: Vec<Result<Vec<LatticeState>>> = jobs
        .par_iter()
        .map(|(_, _, u, p)| {
            let traj = integrate_with(u, p, config, t_end, &options)?;
            traj.snapshots
                .unwrap_or_default()
                .into_iter()
                .map(|s| s.resized(m_ref))
                .collect()
        })
        .collect();
    let runs: Vec<Vec<LatticeState>> = runs.into_iter().collect::<Result<_>>()?;

    let per_u0 = widths.len();
    let mut deltas = vec![0.0f64; m_values.len()];
    let mut samples = 0;
    for k in 0..u0_set.len() {
        let reference = &runs[k * per_u0 + m_values.len()];
        samples = reference.len();
        for (j, delta) in deltas.iter_mut().enumerate() {
            let run = &runs[k * per_u0 + j];
            for (a, b) in run.iter().zip(reference) {
                *delta = delta.max(l2_distance(a, b));
            }
        }
    }
    let mut order: Vec<usize> = (0..m_values.len()).collect();
    order.sort_by_key(|&i| m_values[i]);
    let sorted: Vec<f64> = order.iter().map(|&i| deltas[i]).collect();
    let monotone = sorted.windows(2).all(|w| w[1] <= w[0]);
    let strictly_decreasing = sorted.windows(2).all(|w| w[1] < w[0]);
    Ok(TruncationReport {
        m_values: m_values.to_vec(),
        m_ref,
        interval: (0.0, t_end),
        deltas,
        monotone,
        strictly_decreasing,
        samples,
    })
}

/// `sup_{x∈A} inf_{y∈B} ‖x - y‖`, after zero-extension to a common box.
pub fn semidistance(a: &[LatticeState], b: &[LatticeState]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(DnlsError::validation("set", "semidistance needs nonempty sets"));
    }
    let width = a.iter().chain(b).map(|s| s.half_width()).max().unwrap_or(0);
    let a: Vec<LatticeState> = a.iter().map(|s| s.resized(width)).collect::<Result<_>>()?;
    let b: Vec<LatticeState> = b.iter().map(|s| s.resized(width)).collect::<Result<_>>()?;
    Ok(a.iter()
        .map(|x| b.iter().map(|y| l2_distance(x, y)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn semidistance_is_asymmetric() {
        let zero = LatticeState::zeros(3);
        let three = LatticeState::single_site(3, 1, c(3.0)).unwrap();
        let a = vec![zero.clone()];
        let b = vec![zero.clone(), three.clone()];
        assert_eq!(semidistance(&a, &b).unwrap(), 0.0);
        assert_eq!(semidistance(&b, &a).unwrap(), 3.0);
        assert_eq!(semidistance(&b, &b).unwrap(), 0.0);
        assert!(semidistance(&[], &a).is_err());
    }

    #[test]
    fn semidistance_extends_boxes() {
        let a = vec![LatticeState::single_site(2, 0, c(1.0)).unwrap()];
        let b = vec![LatticeState::single_site(5, 0, c(1.0)).unwrap()];
        assert_eq!(semidistance(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn zero_data_gives_zero_deltas() {
        let p = ModelParams::unforced(1.0, 0.1, 1.0, 5).unwrap();
        let r = truncation_delta(
            &[LatticeState::zeros(5)],
            &p,
            &[5, 10],
            20,
            1.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(r.deltas, vec![0.0, 0.0]);
        assert!(r.monotone);
    }

    #[test]
    fn reference_box_gives_zero_delta() {
        let p = ModelParams::unforced(1.0, 0.1, 1.0, 5).unwrap();
        let u0 = LatticeState::single_site(5, 0, c(1.0)).unwrap();
        let r = truncation_delta(&[u0], &p, &[5, 15, 30], 30, 2.0, &IntegratorConfig::default())
            .unwrap();
        assert!(r.deltas[2] <= 1e-12);
        assert!(r.deltas[0] > r.deltas[1]);
        assert!(r.monotone);
    }

    #[test]
    fn data_outside_smallest_box_is_rejected() {
        let p = ModelParams::unforced(1.0, 0.1, 1.0, 10).unwrap();
        let u0 = LatticeState::single_site(10, 8, c(1.0)).unwrap();
        let err = truncation_delta(&[u0], &p, &[5], 20, 1.0, &IntegratorConfig::default())
            .unwrap_err();
        assert!(err.is_validation());
    }
}
